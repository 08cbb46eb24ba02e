#ifndef ICPS_REPORT_HPP
#define ICPS_REPORT_HPP

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "icps/config.hpp"
#include "icps/information.hpp"
#include "icps/market.hpp"
#include "icps/solver.hpp"
#include "icps/stability.hpp"

namespace icps {

template <class S>
Json matching_to_json(const Market<S>& market, const Matching& m) {
  Json pairs = Json::array();
  for (std::size_t f = 0; f < market.n_firms(); ++f) {
    if (!m.matched(f)) continue;
    auto w = static_cast<std::size_t>(m.worker_of_firm[f]);
    pairs.push_back({{"firm", market.firms[f].name},
                     {"worker", market.workers[w].name}});
  }
  return Json{{"worker_of_firm", m.worker_of_firm}, {"pairs", pairs}};
}

template <class S>
Json allocation_to_json(const Market<S>& market, const Allocation<S>& a) {
  Json fp = Json::object(), wp = Json::object();
  for (std::size_t f = 0; f < market.n_firms(); ++f)
    fp[market.firms[f].name] = format_scalar(a.firm_pay[f]);
  for (std::size_t w = 0; w < market.n_workers(); ++w)
    wp[market.workers[w].name] = format_scalar(a.worker_pay[w]);
  return Json{{"matching", matching_to_json(market, a.matching)},
              {"firm_pay", fp},
              {"worker_pay", wp}};
}

template <class S>
Json certificate_to_json(const Market<S>& market,
                         const BlockingCertificate<S>& c) {
  Json j{{"firm", market.firms[c.firm].name},
         {"worker", market.workers[c.worker].name},
         {"concept", concept_name(c.concept_used)},
         {"status_quo", format_scalar(c.status_quo)},
         {"deviation_value", format_scalar(c.value)},
         {"gain", format_scalar(c.gain)}};
  if (c.instrument) {
    j["instrument"] = Json{
        {"pi", format_scalar(c.instrument->pi)},
        {"cost", c.instrument->feasible() ? format_scalar(*c.instrument->cost)
                                          : std::string("inf")}};
  }
  if (!c.policy.empty()) j["policy_continue"] = c.policy;
  return j;
}

template <class S>
Json stable_set_to_json(const Market<S>& market,
                        const StableSetReport<S>& report) {
  Json entries = Json::array();
  for (const auto& [m, witness] : report.stable)
    entries.push_back({{"matching", matching_to_json(market, m)},
                       {"witness", allocation_to_json(market, witness)}});
  Json j{{"concept", concept_name(report.concept_used)},
         {"count", report.stable.size()},
         {"total_matchings", report.total_matchings},
         {"stable", entries}};
  if (report.welfare_min) j["welfare_min"] = format_scalar(*report.welfare_min);
  if (report.welfare_max) j["welfare_max"] = format_scalar(*report.welfare_max);
  return j;
}

template <class S>
Json market_to_json(const Market<S>& market) {
  auto side = [&](const std::vector<Agent<S>>& agents,
                  const std::vector<TypeGrade<S>>& grades) {
    Json arr = Json::array();
    for (const auto& a : agents) {
      Json j{{"name", a.name}, {"prior", format_scalar(a.prior)}};
      if (a.realized) j["type"] = grades[*a.realized].label;
      arr.push_back(j);
    }
    return arr;
  };
  Json entries = Json::array();
  for (const auto& row : market.surplus.entries) {
    Json r = Json::array();
    for (const auto& cell : row) r.push_back(format_scalar(cell));
    entries.push_back(r);
  }
  auto grades = [&](const std::vector<TypeGrade<S>>& gs) {
    Json arr = Json::array();
    for (const auto& g : gs)
      arr.push_back({{"label", g.label}, {"value", format_scalar(g.value)}});
    return arr;
  };
  return Json{{"mode", mode_name(market.mode)},
              {"rho", format_scalar(market.rho)},
              {"distinct_types", market.distinct_types},
              {"surplus",
               {{"firm_grades", grades(market.surplus.firm_grades)},
                {"worker_grades", grades(market.surplus.worker_grades)},
                {"entries", entries}}},
              {"firms", side(market.firms, market.surplus.firm_grades)},
              {"workers", side(market.workers, market.surplus.worker_grades)}};
}

// ---------------------------------------------------------------------------
// Proposition suite

struct PropCheck {
  std::string name;
  std::string status;  // pass | fail | reported | skipped
  std::string detail;
};

template <class S>
bool menu_has_perfect_free(const TestMenu<S>& menu) {
  for (const auto& t : menu.tests)
    if (t.feasible() && t.pi == S(1) && *t.cost == S(0)) return true;
  return false;
}

template <class S>
bool menu_informative(const TestMenu<S>& menu) {
  for (const auto& t : menu.tests)
    if (t.feasible() && is_positive(t.pi)) return true;
  return false;
}

// Max-welfare characterization of complete-information stability (assignment
// game: a matching is supportable iff it maximizes total surplus). Used as
// the threshold-free oracle.
template <class S>
std::vector<Matching> complete_info_stable_oracle(
    const Market<S>& market, std::size_t cap = kDefaultEnumerationCap) {
  auto all = enumerate_matchings(market, cap);
  std::optional<S> best;
  for (const auto& m : all) {
    S w = expected_welfare(market, m);
    if (!best || w > *best) best = w;
  }
  std::vector<Matching> out;
  for (const auto& m : all)
    if (is_zero(S(expected_welfare(market, m) - *best))) out.push_back(m);
  return out;
}

template <class S>
std::vector<PropCheck> run_props(const Market<S>& market,
                                 const TestMenu<S>& menu,
                                 const std::type_identity_t<SequentialProtocol<S>>* protocol,
                                 const std::type_identity_t<NtuUtilityTable<S>>* ntu,
                                 bool tested_standing) {
  std::vector<PropCheck> checks;
  auto add = [&](std::string name, bool ok, std::string detail) {
    checks.push_back({std::move(name), ok ? "pass" : "fail", std::move(detail)});
  };
  auto report_only = [&](std::string name, std::string detail) {
    checks.push_back({std::move(name), "reported", std::move(detail)});
  };
  auto skipped = [&](std::string name, std::string detail) {
    checks.push_back({std::move(name), "skipped", std::move(detail)});
  };

  auto bayes = stable_matchings(market, menu, Concept::Bayes, nullptr,
                                kDefaultEnumerationCap, tested_standing);
  auto icps = stable_matchings(market, menu, Concept::Icps, nullptr,
                               kDefaultEnumerationCap, tested_standing);

  add("refinement_inclusion", set_subset(icps, bayes),
      "|bayes|=" + std::to_string(bayes.stable.size()) +
          " |icps|=" + std::to_string(icps.stable.size()));

  {
    TestMenu<S> null_only;
    auto icps_null = stable_matchings(market, null_only, Concept::Icps,
                                      nullptr, kDefaultEnumerationCap,
                                      tested_standing);
    auto bayes_null = stable_matchings(market, null_only, Concept::Bayes,
                                       nullptr, kDefaultEnumerationCap,
                                       tested_standing);
    add("refinement_null_collapse",
        set_subset(icps_null, bayes_null) && set_subset(bayes_null, icps_null),
        "null-only menu: icps == bayes");
  }

  if (menu_has_perfect_free(menu) && market.mode == Mode::Realized &&
      !tested_standing) {
    auto oracle = complete_info_stable_oracle(market);
    bool equal = icps.stable.size() == oracle.size();
    for (const auto& m : oracle) equal = equal && set_contains(icps, m);
    add("refinement_perfect_info", equal,
        "icps set equals the max-welfare oracle set");
  } else {
    skipped("refinement_perfect_info",
            "needs a free perfect test, realized mode, default standing rule");
  }

  {
    // Lemma: threshold acceptance never loses against the prior benchmark.
    bool ok = true;
    for (std::size_t f = 0; f < market.n_firms() && ok; ++f)
      for (std::size_t l = 0; l < market.n_workers() && ok; ++l) {
        auto dist = pair_surplus_distribution(market, f, l);
        for (const auto& [thr, unused] : dist.atoms) {
          S weighted = S(0), prob = S(0);
          for (const auto& [s, p] : dist.atoms)
            if (s >= thr) {
              weighted += s * p;
              prob += p;
            }
          if (is_negative(S(weighted - dist.mean * prob))) ok = false;
        }
      }
    add("surplus_decomposition_threshold_rules", ok,
        "E[S 1_A] >= E[S] P(A) for every threshold rule on every pair");
  }

  {
    bool ok = true;
    std::string detail;
    std::size_t longest = 0;
    for (const auto& [m, witness] : bayes.stable) {
      auto trace = improvement_path(market, witness, menu);
      longest = std::max(longest, trace.size());
      for (std::size_t i = 1; i < trace.size(); ++i)
        ok = ok && is_positive(S(trace[i].welfare_ledger -
                                 trace[i - 1].welfare_ledger));
      ok = ok && !find_blocking_pair(market, trace.back().allocation, menu,
                                     Concept::Icps);
    }
    add("welfare_improvement_path", ok,
        "longest trace " + std::to_string(longest) + " over " +
            std::to_string(bayes.stable.size()) + " bayes-stable starts");
  }

  {
    bool preconditions = market.mode == Mode::Realized &&
                         market.distinct_types && menu_informative(menu);
    if (preconditions) {
      bool ok = true;
      for (const auto& [m, witness] : icps.stable)
        ok = ok && is_positively_assortative(market, m);
      add("sorting_property", ok, "all icps-stable matchings assortative");
    } else {
      bool all_sorted = true;
      try {
        for (const auto& [m, witness] : icps.stable)
          all_sorted = all_sorted && is_positively_assortative(market, m);
        report_only("sorting_property",
                    all_sorted ? "assortative (preconditions not met)"
                               : "non-assortative member present "
                                 "(preconditions not met)");
      } catch (const NoSortKey&) {
        skipped("sorting_property", "no sort key available");
      }
    }
  }

  if (market.mode == Mode::Realized) {
    add("existence", !icps.stable.empty(),
        "icps set size " + std::to_string(icps.stable.size()));
  } else if (!icps.stable.empty()) {
    add("existence", true, "icps set nonempty in ex-ante mode");
  } else {
    auto retried = stable_matchings(market, menu, Concept::Icps, nullptr,
                                    kDefaultEnumerationCap, true);
    report_only("existence",
                "icps set empty in ex-ante mode; with tested_standing_matches "
                "the set has " +
                    std::to_string(retried.stable.size()) + " members");
  }

  if (!icps.stable.empty()) {
    auto lw = lone_wolf_report(icps);
    if (lw.holds)
      add("lone_wolf", true, "unmatched set constant across the icps set");
    else
      report_only("lone_wolf", "counter-witness found (weak menu)");
  } else {
    skipped("lone_wolf", "empty icps set");
  }

  if (market.distinct_types) {
    auto uniq = uniqueness_report(market, menu);
    if (uniq.assumption4_satisfied)
      add("uniqueness_under_test_power", uniq.unique && uniq.matches_assortative,
          "stable count " + std::to_string(uniq.stable_count));
    else
      report_only("uniqueness_under_test_power",
                  "test power condition unmet; stable count " +
                      std::to_string(uniq.stable_count));
    if (menu_has_perfect_free(menu))
      add("uniqueness_perfect_info",
          uniq.unique && uniq.matches_assortative,
          "perfect free test present");
    else
      skipped("uniqueness_perfect_info", "no free perfect test in the menu");
  } else {
    skipped("uniqueness_under_test_power", "types not flagged distinct");
    skipped("uniqueness_perfect_info", "types not flagged distinct");
  }

  if (ntu) {
    TestMenu<S> null_only;
    auto ntu_icps = ntu_stable_matchings(market, *ntu, menu);
    auto ntu_bayes = ntu_stable_matchings(market, *ntu, null_only);
    bool subset = true;
    for (const auto& m : ntu_icps) {
      bool found = false;
      for (const auto& b : ntu_bayes) found = found || b == m;
      subset = subset && found;
    }
    add("ntu_refinement", subset,
        "|ntu-icps|=" + std::to_string(ntu_icps.size()) +
            " |ntu-bayes|=" + std::to_string(ntu_bayes.size()));
  } else {
    skipped("ntu_refinement", "no NTU utility table configured");
  }

  if (protocol) {
    try {
      auto mag = refinement_magnitude(market, menu, protocol);
      add("sequential_refinement", true,
          "chain sizes seq=" + std::to_string(*mag.seq_count) +
              " endog=" + std::to_string(mag.endog_count) +
              " icps=" + std::to_string(mag.icps_count) +
              " bayes=" + std::to_string(mag.bayes_count));
    } catch (const Error& e) {
      add("sequential_refinement", false, e.what());
    }
  } else {
    skipped("sequential_refinement", "no protocol configured");
  }

  report_only("correlation_effects",
              "rho-dependence measured by the sweep subcommand");
  return checks;
}

inline Json props_to_json(const std::vector<PropCheck>& checks) {
  Json arr = Json::array();
  bool ok = true;
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name}, {"status", c.status}, {"detail", c.detail}});
    ok = ok && c.status != "fail";
  }
  return Json{{"checks", arr}, {"all_pass", ok}};
}

// ---------------------------------------------------------------------------
// Subcommand runners shared by the CLI and the golden-file tests

// Stability verdict for a concrete allocation under each requested concept.
template <class S>
Json run_check(const Market<S>& market, const Allocation<S>& alloc,
               const TestMenu<S>& menu, const std::vector<Concept>& concepts,
               const std::type_identity_t<SequentialProtocol<S>>* protocol,
               const std::type_identity_t<NtuUtilityTable<S>>* ntu,
               const std::type_identity_t<ProtocolOverrides<S>>* overrides = nullptr) {
  Json out;
  out["market"] = market_to_json(market);
  out["allocation"] = allocation_to_json(market, alloc);
  out["consistent"] = alloc.consistent_with(market);
  out["individually_rational"] = check_individual_rationality(alloc);
  Json verdicts = Json::array();
  bool all_stable = alloc.consistent_with(market) &&
                    check_individual_rationality(alloc);
  for (Concept c : concepts) {
    Json v{{"concept", concept_name(c)}};
    std::optional<BlockingCertificate<S>> cert;
    if (c == Concept::Ntu) {
      if (!ntu) throw InvalidSpec("ntu concept requires an ntu table");
      cert = find_ntu_blocking_pair(market, alloc.matching, *ntu, menu);
    } else {
      cert = find_blocking_pair(market, alloc, menu, c, protocol, overrides);
    }
    v["stable"] = !cert.has_value();
    if (cert) {
      v["blocking_pair"] = certificate_to_json(market, *cert);
      all_stable = false;
    }
    verdicts.push_back(v);
  }
  out["verdicts"] = verdicts;
  out["stable"] = all_stable;
  return out;
}

// Full stable sets per concept, with refinement counts when the inclusion
// chain is available.
template <class S>
Json run_solve(const Market<S>& market, const TestMenu<S>& menu,
               const std::vector<Concept>& concepts,
               const std::type_identity_t<SequentialProtocol<S>>* protocol,
               const std::type_identity_t<NtuUtilityTable<S>>* ntu,
               bool tested_standing,
               const std::type_identity_t<ProtocolOverrides<S>>* overrides = nullptr) {
  Json out;
  out["market"] = market_to_json(market);
  Json sets = Json::array();
  for (Concept c : concepts) {
    if (c == Concept::Ntu) {
      if (!ntu) throw InvalidSpec("ntu concept requires an ntu table");
      auto stable = ntu_stable_matchings(market, *ntu, menu);
      Json entries = Json::array();
      for (const auto& m : stable)
        entries.push_back({{"matching", matching_to_json(market, m)}});
      sets.push_back({{"concept", "ntu"},
                      {"count", stable.size()},
                      {"stable", entries}});
      continue;
    }
    auto report = stable_matchings(market, menu, c, protocol,
                                   kDefaultEnumerationCap, tested_standing,
                                   overrides);
    sets.push_back(stable_set_to_json(market, report));
  }
  out["stable_sets"] = sets;
  bool want_bayes = false, want_icps = false;
  for (Concept c : concepts) {
    want_bayes = want_bayes || c == Concept::Bayes;
    want_icps = want_icps || c == Concept::Icps;
  }
  if (want_bayes && want_icps) {
    auto mag = refinement_magnitude(market, menu, protocol);
    Json m{{"ir_count", mag.ir_count},
           {"bayes_count", mag.bayes_count},
           {"icps_count", mag.icps_count},
           {"endog_count", mag.endog_count},
           {"bayes_minus_icps", mag.bayes_minus_icps},
           {"icps_minus_endog", mag.icps_minus_endog}};
    if (mag.seq_count) {
      m["seq_count"] = *mag.seq_count;
      m["endog_minus_seq"] = *mag.endog_minus_seq;
    }
    out["refinement"] = m;
  }
  return out;
}

// Improvement-path trace from a start allocation (equal split of the empty
// matching when none is configured).
template <class S>
Json run_dynamics(const Market<S>& market, const Allocation<S>& start,
                  const TestMenu<S>& menu) {
  auto trace = improvement_path(market, start, menu);
  Json steps = Json::array();
  for (const auto& step : trace) {
    Json j{{"allocation", allocation_to_json(market, step.allocation)},
           {"welfare_ledger", format_scalar(step.welfare_ledger)}};
    if (step.certificate)
      j["deviation"] = certificate_to_json(market, *step.certificate);
    steps.push_back(j);
  }
  const auto& final_alloc = trace.back().allocation;
  return Json{{"market", market_to_json(market)},
              {"steps", steps},
              {"step_count", trace.size() - 1},
              {"terminal_welfare",
               format_scalar(expected_welfare(market, final_alloc.matching))},
              {"terminal_stable",
               !find_blocking_pair(market, final_alloc, menu, Concept::Icps)}};
}

// ---------------------------------------------------------------------------
// Sweep and surface grids

struct SweepResult {
  std::string csv;
  std::vector<std::string> notes;
};

// One CSV row per grid cell in (p, rho, pi, cost) order; cells with an
// infeasible (p, rho) pair are skipped with a note.
template <class S>
SweepResult run_sweep(const SweepSpec& spec, const SurplusTable<S>& surplus) {
  std::ostringstream csv;
  csv << "p,rho,pi,cost,bayes_count,icps_count,difference,"
         "icps_welfare_min,icps_welfare_max\n";
  SweepResult out;
  // difference keyed by (p, pi, cost) across rho for the monotonicity note
  std::map<std::string, std::vector<std::pair<double, long>>> by_rho;
  for (const auto& pq : spec.p_values)
    for (const auto& rhoq : spec.rho_values)
      for (const auto& piq : spec.pi_values)
        for (const auto& cq : spec.cost_values) {
          S p = conv<S>(pq), rho = conv<S>(rhoq), pi = conv<S>(piq),
            cost = conv<S>(cq);
          Market<S> market;
          market.surplus = surplus;
          market.mode = Mode::ExAnte;
          market.rho = rho;
          for (std::size_t i = 0; i < spec.n_firms; ++i)
            market.firms.push_back({"f" + std::to_string(i), p, std::nullopt});
          for (std::size_t j = 0; j < spec.n_workers; ++j)
            market.workers.push_back({"w" + std::to_string(j), p, std::nullopt});
          try {
            market.validate();
            pair_surplus_distribution(market, 0, 0);  // probes rho feasibility
          } catch (const Error& e) {
            out.notes.push_back("skipped cell p=" + format_scalar(p) +
                                " rho=" + format_scalar(rho) + ": " + e.what());
            continue;
          }
          TestMenu<S> menu({Test<S>::make(pi, cost)});
          auto bayes = stable_matchings(market, menu, Concept::Bayes);
          auto icps = stable_matchings(market, menu, Concept::Icps);
          long diff = static_cast<long>(bayes.stable.size()) -
                      static_cast<long>(icps.stable.size());
          csv << format_scalar(p) << ',' << format_scalar(rho) << ','
              << format_scalar(pi) << ',' << format_scalar(cost) << ','
              << bayes.stable.size() << ',' << icps.stable.size() << ','
              << diff << ','
              << (icps.welfare_min ? format_scalar(*icps.welfare_min)
                                   : std::string(""))
              << ','
              << (icps.welfare_max ? format_scalar(*icps.welfare_max)
                                   : std::string(""))
              << '\n';
          std::string key = format_scalar(p) + "|" + format_scalar(pi) + "|" +
                            format_scalar(cost);
          by_rho[key].push_back({NumTraits<S>::to_double(rho), diff});
        }
  for (auto& [key, rows] : by_rho) {
    std::sort(rows.begin(), rows.end());
    bool monotone = true;
    for (std::size_t i = 1; i < rows.size(); ++i)
      monotone = monotone && rows[i].second <= rows[i - 1].second;
    out.notes.push_back("difference weakly decreasing in rho at (p|pi|cost)=" +
                        key + ": " + (monotone ? "yes" : "VIOLATED"));
    if (!rows.empty())
      out.notes.push_back("difference at largest rho for (p|pi|cost)=" + key +
                          ": " + std::to_string(rows.back().second) +
                          " (rho->1 collapse measured, not asserted)");
  }
  out.csv = csv.str();
  return out;
}

// Figure-style grid of the deviation surface: value = Pi + E[(S - Pi)_+] on
// a (p, Pi) lattice. The Pi range must cover [0, max S].
template <class S>
std::string run_surface(const SurfaceSpec& spec,
                        const SurplusTable<S>& surplus) {
  if (!surplus.two_grade_shape())
    throw InvalidSpec("surface grid expects a two-grade surplus table");
  S max_s = surplus.at(1, 1);
  S lo = spec.pi_lo ? conv<S>(*spec.pi_lo) : S(0);
  S hi = spec.pi_hi ? conv<S>(*spec.pi_hi) : max_s;
  if (is_positive(lo) || hi < max_s)
    throw InvalidSpec("surface range must cover [0, max surplus]");
  std::ostringstream csv;
  csv << "p,status_quo,value,option_value\n";
  for (const auto& pq : spec.p_values) {
    S p = conv<S>(pq);
    auto joint = build_joint_distribution(p, conv<S>(spec.rho));
    auto dist = PairSurplusDistribution<S>::from_atoms(
        {{surplus.at(1, 1), joint.hh},
         {surplus.at(1, 0), joint.hl},
         {surplus.at(0, 1), joint.lh},
         {surplus.at(0, 0), joint.ll}});
    for (std::size_t k = 0; k < spec.resolution; ++k) {
      S t = S(static_cast<long>(k)) / S(static_cast<long>(spec.resolution - 1));
      S status_quo = lo + (hi - lo) * t;
      S ov = option_value(dist, status_quo);
      csv << format_scalar(p) << ',' << format_scalar(status_quo) << ','
          << format_scalar(S(status_quo + ov)) << ',' << format_scalar(ov)
          << '\n';
    }
  }
  return csv.str();
}

}  // namespace icps

#endif  // ICPS_REPORT_HPP

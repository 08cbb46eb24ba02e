// Acceptance gate: twelve criteria, one verdict line each. Exit code 0 iff
// all pass. Tolerances: exact (rational) unless stated; float comparisons
// use 2e-6 for bisection cross-checks and -1e-12 for convexity slack.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "icps/config.hpp"
#include "icps/report.hpp"

using namespace icps;
using th::q;

namespace {

int g_failures = 0;

void verdict(int number, const std::string& name, bool ok,
             const std::string& detail) {
  std::printf("[%s] criterion %2d %-28s %s\n", ok ? "PASS" : "FAIL", number,
              name.c_str(), detail.c_str());
  if (!ok) ++g_failures;
}

GenSpec<Rational> random_spec(SeededRng& rng, std::size_t max_side,
                              bool realized) {
  GenSpec<Rational> spec;
  spec.n_firms = 1 + rng.next(max_side);
  spec.n_workers = 1 + rng.next(max_side);
  spec.mode = realized ? Mode::Realized : Mode::ExAnte;
  return spec;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// 1. Refinement inclusion on 200 seeded markets up to 3x3, exact arithmetic.
void criterion_1() {
  auto t0 = std::chrono::steady_clock::now();
  SeededRng rng(1);
  int violations = 0;
  for (int i = 0; i < 200; ++i) {
    auto spec = random_spec(rng, 3, rng.next(2) == 0);
    auto m = generate_market<Rational>(100 + i, spec);
    auto menu = generate_menu<Rational>(100 + i);
    auto bayes = stable_matchings(m, menu, Concept::Bayes);
    auto icps = stable_matchings(m, menu, Concept::Icps);
    if (!set_subset(icps, bayes)) ++violations;
  }
  double dt = elapsed_s(t0);
  std::ostringstream d;
  d << violations << " violations / 200 markets, " << dt << " s";
  verdict(1, "refinement_inclusion", violations == 0 && dt < 30.0, d.str());
}

// 2. Collapse cases: null menu => sets equal; perfect free test in realized
// mode => equals the complete-information (max-welfare) oracle.
void criterion_2() {
  SeededRng rng(2);
  int discrepancies = 0;
  TestMenu<Rational> null_only;
  TestMenu<Rational> perfect({Test<Rational>::make(q(1), q(0))});
  for (int i = 0; i < 100; ++i) {
    auto spec = random_spec(rng, 3, true);
    auto m = generate_market<Rational>(200 + i, spec);
    auto b = stable_matchings(m, null_only, Concept::Bayes);
    auto s = stable_matchings(m, null_only, Concept::Icps);
    if (!(set_subset(b, s) && set_subset(s, b))) ++discrepancies;
    auto icps = stable_matchings(m, perfect, Concept::Icps);
    auto oracle = complete_info_stable_oracle(m);
    bool equal = icps.stable.size() == oracle.size();
    for (const auto& mm : oracle) equal = equal && set_contains(icps, mm);
    if (!equal) ++discrepancies;
  }
  verdict(2, "collapse_cases", discrepancies == 0,
          std::to_string(discrepancies) + " discrepancies / 100 markets");
}

// 3. Blocking thresholds {2.25, 4, 2.12} exact; float mode within 2e-6 of a
// 1e-6 bisection oracle.
void criterion_3() {
  auto dist = th::std_dist<Rational>();
  bool exact = blocking_threshold(dist, Test<Rational>::null_test()) == q(9, 4) &&
               blocking_threshold(dist, Test<Rational>::make(q(1), q(0))) ==
                   q(4) &&
               blocking_threshold(dist,
                                  Test<Rational>::make(q(1, 2), q(3, 10))) ==
                   q(53, 25);
  auto fd = th::std_dist<double>();
  auto bisect = [&](const Test<double>& t) {
    auto gain = [&](double x) { return deviation_value(fd, t, x).gain; };
    double lo = 0.0, hi = 5.0;
    if (gain(lo) <= 0) return 0.0;
    while (hi - lo > 1e-6) {
      double mid = (lo + hi) / 2;
      (gain(mid) > 0 ? lo : hi) = mid;
    }
    return (lo + hi) / 2;
  };
  bool approx =
      std::abs(blocking_threshold(fd, Test<double>::null_test()) -
               bisect(Test<double>::null_test())) <= 2e-6 &&
      std::abs(blocking_threshold(fd, Test<double>::make(1.0, 0.0)) -
               bisect(Test<double>::make(1.0, 0.0))) <= 2e-6 &&
      std::abs(blocking_threshold(fd, Test<double>::make(0.5, 0.3)) -
               bisect(Test<double>::make(0.5, 0.3))) <= 2e-6;
  verdict(3, "option_value_engine", exact && approx,
          "thresholds 9/4, 4, 53/25 exact; float vs bisection <= 2e-6");
}

// 4. Threshold acceptance rules over all 16 subsets; mixture decomposition
// identity for 1000 random tests.
void criterion_4() {
  auto m = th::std_market<Rational>();
  auto joint = build_pair_joint(q(1, 2), q(1, 2), q(0));
  std::vector<std::pair<Rational, Rational>> cells = {
      {q(4), joint.hh}, {q(2), joint.hl}, {q(2), joint.lh}, {q(1), joint.ll}};
  Rational mean(0);
  for (const auto& [s, p] : cells) mean += s * p;
  bool ok = true;
  for (unsigned mask = 0; mask < 16; ++mask) {
    Rational weighted(0), prob(0), min_in(1000), max_out(-1);
    for (unsigned k = 0; k < 4; ++k) {
      if (mask & (1u << k)) {
        weighted += cells[k].first * cells[k].second;
        prob += cells[k].second;
        min_in = std::min(min_in, cells[k].first);
      } else {
        max_out = std::max(max_out, cells[k].first);
      }
    }
    bool threshold_rule = mask == 0 || mask == 15 || min_in >= max_out;
    if (threshold_rule && weighted < mean * prob) ok = false;
  }
  SeededRng rng(4);
  auto dist = th::std_dist<Rational>();
  for (int i = 0; i < 1000; ++i) {
    Rational pi = q(rng.range(0, 16), 16);
    if (pi * dist.mean + (Rational(1) - pi) * dist.mean != dist.mean) ok = false;
  }
  verdict(4, "surplus_decomposition", ok,
          "16/16 threshold subsets, 1000/1000 mixture identities");
  (void)m;
}

// 5. Improvement dynamics from every Bayesian-stable allocation of seeded
// 2x2 markets: at most 7 steps, increasing ledger, stable terminal.
void criterion_5() {
  SeededRng rng(5);
  bool ok = true;
  std::size_t longest = 0, starts = 0;
  for (int i = 0; i < 50; ++i) {
    GenSpec<Rational> spec;
    spec.n_firms = 2;
    spec.n_workers = 2;
    spec.mode = rng.next(2) ? Mode::Realized : Mode::ExAnte;
    auto m = generate_market<Rational>(500 + i, spec);
    auto menu = generate_menu<Rational>(500 + i);
    auto bayes = stable_matchings(m, menu, Concept::Bayes);
    for (const auto& [matching, witness] : bayes.stable) {
      ++starts;
      auto trace = improvement_path(m, witness, menu);
      longest = std::max(longest, trace.size() - 1);
      if (trace.size() - 1 > 7) ok = false;
      for (std::size_t k = 1; k < trace.size(); ++k)
        if (!(trace[k].welfare_ledger > trace[k - 1].welfare_ledger)) ok = false;
      if (find_blocking_pair(m, trace.back().allocation, menu, Concept::Icps))
        ok = false;
    }
  }
  verdict(5, "improvement_dynamics", ok,
          std::to_string(starts) + " starts, longest path " +
              std::to_string(longest) + " steps");
}

// 6. Existence: the max-welfare matching admits supporting payoffs under
// ICPS thresholds in every realized suite market; ex-ante failures logged.
void criterion_6() {
  SeededRng rng(6);
  int realized_fail = 0, exante_fail = 0, exante_total = 0;
  for (int i = 0; i < 100; ++i) {
    auto spec = random_spec(rng, 3, true);
    auto m = generate_market<Rational>(600 + i, spec);
    auto menu = generate_menu<Rational>(600 + i);
    auto thr = blocking_thresholds(m, menu, Concept::Icps);
    if (!supporting_payoffs(m, max_welfare_matching(m), thr)) ++realized_fail;
  }
  for (int i = 0; i < 100; ++i) {
    auto spec = random_spec(rng, 3, false);
    auto m = generate_market<Rational>(650 + i, spec);
    auto menu = generate_menu<Rational>(650 + i);
    auto thr = blocking_thresholds(m, menu, Concept::Icps);
    ++exante_total;
    if (!supporting_payoffs(m, max_welfare_matching(m), thr)) {
      ++exante_fail;
      // logged, not asserted: retry under the tested-standing switch
      supporting_payoffs(m, max_welfare_matching(m), thr, true);
    }
  }
  std::ostringstream d;
  d << realized_fail << " realized failures / 100; ex-ante " << exante_fail
    << "/" << exante_total
    << " infeasible (logged; see tested_standing_matches)";
  verdict(6, "existence", realized_fail == 0, d.str());
}

// 7. Uniqueness and sorting on 100 seeded distinct-type realized markets up
// to 4x4 with a menu satisfying the test-power condition.
void criterion_7() {
  SeededRng rng(7);
  int violations = 0;
  for (int i = 0; i < 100; ++i) {
    GenSpec<Rational> spec;
    spec.n_firms = 2 + rng.next(3);
    spec.n_workers = spec.n_firms;  // balanced, so assortative is full
    spec.mode = Mode::Realized;
    spec.distinct_types = true;
    auto m = generate_market<Rational>(700 + i, spec);
    Rational delta = test_power_delta(m.surplus);
    TestMenu<Rational> menu({Test<Rational>::make(q(3, 4), delta / q(4))});
    auto uniq = uniqueness_report(m, menu);
    if (!uniq.assumption4_satisfied || !uniq.unique || !uniq.matches_assortative)
      ++violations;
    auto icps = stable_matchings(m, menu, Concept::Icps);
    for (const auto& [matching, witness] : icps.stable)
      if (!is_positively_assortative(m, matching)) ++violations;
  }
  verdict(7, "uniqueness_and_sorting", violations == 0,
          std::to_string(violations) + " violations / 100 markets");
}

// 8. Lone wolf: constant unmatched set under criterion-7 preconditions;
// under weak menus, any counter-witness must itself be valid.
void criterion_8() {
  SeededRng rng(8);
  bool ok = true;
  int counter_witnesses = 0;
  for (int i = 0; i < 60; ++i) {
    GenSpec<Rational> spec;
    spec.n_firms = 1 + rng.next(3);
    spec.n_workers = 1 + rng.next(3);
    spec.mode = Mode::Realized;
    auto m = generate_market<Rational>(800 + i, spec);
    auto menu = generate_menu<Rational>(800 + i);  // weak menus included
    auto icps = stable_matchings(m, menu, Concept::Icps);
    if (icps.stable.empty()) continue;
    auto lw = lone_wolf_report(icps);
    if (!lw.holds) {
      ++counter_witnesses;
      if (!lw.counter_witness) {
        ok = false;
        continue;
      }
      auto [ma, mb] = *lw.counter_witness;
      if (!set_contains(icps, ma) || !set_contains(icps, mb) || ma == mb)
        ok = false;
    }
  }
  // distinct-type preconditions: the singleton set holds trivially
  for (int i = 0; i < 40; ++i) {
    GenSpec<Rational> spec;
    spec.n_firms = 2 + rng.next(2);
    spec.n_workers = spec.n_firms;
    spec.mode = Mode::Realized;
    spec.distinct_types = true;
    auto m = generate_market<Rational>(860 + i, spec);
    Rational delta = test_power_delta(m.surplus);
    TestMenu<Rational> menu({Test<Rational>::make(q(1), delta / q(2))});
    auto icps = stable_matchings(m, menu, Concept::Icps);
    if (icps.stable.empty() || !lone_wolf_report(icps).holds) ok = false;
  }
  verdict(8, "lone_wolf", ok,
          std::to_string(counter_witnesses) +
              " weak-menu counter-witnesses, all valid");
}

// 9. NTU: the worked example (joint surplus 10 > 8, no block) plus subset
// inclusion on 100 seeded NTU markets.
void criterion_9() {
  std::vector<NtuProfile<Rational>> profiles = {{q(1, 2), q(8), q(2)},
                                                {q(1, 2), q(2), q(8)}};
  auto [vf, vl] = ntu_deviation_values(profiles, q(4), q(4),
                                       Test<Rational>::make(q(1), q(0)), q(0),
                                       q(0));
  Rational joint(0);
  for (const auto& pr : profiles)
    joint += pr.prob * (pr.firm_util + pr.worker_util);
  bool example_ok = vf == q(4) && vl == q(4) && joint == q(10) && joint > q(8);
  SeededRng rng(9);
  int violations = 0;
  for (int i = 0; i < 100; ++i) {
    auto spec = random_spec(rng, 2, rng.next(2) == 0);
    auto m = generate_market<Rational>(900 + i, spec);
    auto util = generate_ntu_table<Rational>(900 + i, m.surplus);
    auto menu = generate_menu<Rational>(900 + i);
    auto refined = ntu_stable_matchings(m, util, menu);
    auto coarse = ntu_stable_matchings(m, util, TestMenu<Rational>());
    for (const auto& matching : refined) {
      bool found = false;
      for (const auto& b : coarse) found = found || b == matching;
      if (!found) ++violations;
    }
  }
  verdict(9, "ntu", example_ok && violations == 0,
          "example exact (10 > 8, no block); " + std::to_string(violations) +
              " inclusion violations / 100");
}

// 10. Sequential testing: the worked value 2.35, dominance over the
// collapsed one-shot 2.3, and the seq-in-endog inclusion on the suite.
void criterion_10() {
  auto dist = th::std_dist<Rational>();
  SequentialProtocol<Rational> proto;
  proto.stages = {{q(1, 2), q(1, 10)}, {q(1), q(1, 10)}};
  auto quote = sequential_value(dist, proto, q(2));
  auto oneshot =
      deviation_value(dist, Test<Rational>::make(q(1), q(1, 5)), q(2));
  bool values_ok = quote.value == q(47, 20) && oneshot.value == q(23, 10) &&
                   quote.value >= oneshot.value;
  SeededRng rng(10);
  int violations = 0;
  for (int i = 0; i < 60; ++i) {
    auto spec = random_spec(rng, 3, rng.next(2) == 0);
    auto m = generate_market<Rational>(1000 + i, spec);
    TestMenu<Rational> collapsed(proto.collapsed_tests());
    auto seq = stable_matchings(m, collapsed, Concept::Seq, &proto);
    auto endog = stable_matchings(m, collapsed, Concept::Endog);
    if (!set_subset(seq, endog)) ++violations;
  }
  verdict(10, "sequential", values_ok && violations == 0,
          "value 47/20 exact >= 23/10; " + std::to_string(violations) +
              " inclusion violations / 60");
}

// 11. Correlation sweep over rho in {-0.9, -0.5, 0, 0.5, 0.9}.
void criterion_11() {
  auto t0 = std::chrono::steady_clock::now();
  SweepSpec spec;
  spec.p_values = {q(1, 2)};
  spec.rho_values = {q(-9, 10), q(-1, 2), q(0), q(1, 2), q(9, 10)};
  spec.pi_values = {q(1)};
  spec.cost_values = {q(1, 20)};
  auto table = th::std_table<Rational>();
  auto result = run_sweep(spec, table);
  std::size_t rows =
      static_cast<std::size_t>(std::count(result.csv.begin(), result.csv.end(), '\n')) - 1;
  SweepSpec base = spec;
  base.rho_values = {q(0)};
  auto baseline = run_sweep(base, table);
  std::string base_row = baseline.csv.substr(baseline.csv.find('\n') + 1);
  bool baseline_match = result.csv.find(base_row) != std::string::npos;
  bool reported = !result.notes.empty();
  double dt = elapsed_s(t0);
  std::ostringstream d;
  d << rows << " rows, rho=0 matches baseline, " << result.notes.size()
    << " notes, " << dt << " s";
  verdict(11, "correlation_sweep",
          rows == 5 && baseline_match && reported && dt < 120.0, d.str());
}

// 12. Surface grid: value = status quo beyond max S, value = mean at zero,
// convex along each p-slice at resolution 101.
void criterion_12() {
  SurfaceSpec spec;
  spec.p_values = {q(3, 10), q(1, 2), q(7, 10)};
  spec.resolution = 101;
  auto table = th::std_table<Rational>();
  auto csv = run_surface<Rational>(spec, table);
  bool ok = true;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> slices;
  std::string cur_p;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string p, pi, value, ov;
    std::getline(row, p, ',');
    std::getline(row, pi, ',');
    std::getline(row, value, ',');
    std::getline(row, ov, ',');
    if (p != cur_p) {
      cur_p = p;
      slices.emplace_back();
    }
    double piv = std::stod(pi), val = std::stod(value), ovv = std::stod(ov);
    slices.back().push_back(val);
    if (piv == 0.0) {
      // value at zero equals the prior mean: mean = val and ov = val
      if (std::abs(val - ovv) > 0) ok = false;
      double pd = std::stod(p);
      double mean = pd * pd * 4 + 2 * pd * (1 - pd) * 2 + (1 - pd) * (1 - pd);
      if (std::abs(val - mean) > 1e-12) ok = false;
    }
    if (piv >= 4.0 && (val != piv || ovv != 0.0)) ok = false;
  }
  for (const auto& s : slices) {
    if (s.size() != 101) ok = false;
    for (std::size_t i = 2; i < s.size(); ++i)
      if (s[i] - 2 * s[i - 1] + s[i - 2] < -1e-12) ok = false;
  }
  verdict(12, "figure_surface", ok && slices.size() == 3,
          "3 slices x 101 points; boundary rows exact; convex");
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_11();
  criterion_12();
  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all 12 criteria passed\n");
  return 0;
}

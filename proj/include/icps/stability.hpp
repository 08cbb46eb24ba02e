#ifndef ICPS_STABILITY_HPP
#define ICPS_STABILITY_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "icps/errors.hpp"
#include "icps/information.hpp"
#include "icps/market.hpp"
#include "icps/numeric.hpp"

namespace icps {

enum class Concept { Bayes, Icps, Endog, Seq, Ntu };

inline const char* concept_name(Concept c) {
  switch (c) {
    case Concept::Bayes: return "bayes";
    case Concept::Icps: return "icps";
    case Concept::Endog: return "endog";
    case Concept::Seq: return "seq";
    case Concept::Ntu: return "ntu";
  }
  return "?";
}

// Matching plus a payoff profile; transfers are implicit in the split.
template <class S>
struct Allocation {
  Matching matching;
  std::vector<S> firm_pay;
  std::vector<S> worker_pay;

  S joint(std::size_t f, std::size_t l) const {
    return firm_pay[f] + worker_pay[l];
  }

  // Checks the structural invariant against the market: matched pairs split
  // exactly their mode-appropriate value, unmatched agents hold zero.
  bool consistent_with(const Market<S>& market) const {
    if (firm_pay.size() != market.n_firms() ||
        worker_pay.size() != market.n_workers() ||
        matching.worker_of_firm.size() != market.n_firms())
      return false;
    std::vector<bool> wm(market.n_workers(), false);
    for (std::size_t f = 0; f < market.n_firms(); ++f) {
      if (!matching.matched(f)) {
        if (!is_zero(firm_pay[f])) return false;
        continue;
      }
      auto w = static_cast<std::size_t>(matching.worker_of_firm[f]);
      wm[w] = true;
      if (!is_zero(S(joint(f, w) - pair_value(market, f, w)))) return false;
    }
    for (std::size_t w = 0; w < market.n_workers(); ++w)
      if (!wm[w] && !is_zero(worker_pay[w])) return false;
    return true;
  }

  static Allocation equal_split(const Market<S>& market,
                                const Matching& matching) {
    Allocation a;
    a.matching = matching;
    a.firm_pay.assign(market.n_firms(), S(0));
    a.worker_pay.assign(market.n_workers(), S(0));
    for (std::size_t f = 0; f < market.n_firms(); ++f) {
      if (!matching.matched(f)) continue;
      auto w = static_cast<std::size_t>(matching.worker_of_firm[f]);
      S half = pair_value(market, f, w) / S(2);
      a.firm_pay[f] = half;
      a.worker_pay[w] = half;
    }
    return a;
  }
};

template <class S>
bool check_individual_rationality(const Allocation<S>& alloc) {
  for (const auto& u : alloc.firm_pay)
    if (is_negative(u)) return false;
  for (const auto& v : alloc.worker_pay)
    if (is_negative(v)) return false;
  return true;
}

// Witness of a profitable deviation.
template <class S>
struct BlockingCertificate {
  std::size_t firm;
  std::size_t worker;
  Concept concept_used;
  S status_quo;
  S value;
  S gain;
  std::optional<Test<S>> instrument;
  std::vector<bool> policy;  // sequential instrument only
};

namespace detail {

// Best quote for a pair under the given concept; ties between menu tests
// break toward lower cost then lower accuracy.
template <class S>
DeviationQuote<S> concept_quote(const PairSurplusDistribution<S>& dist,
                                const S& status_quo, Concept sc,
                                const TestMenu<S>& menu,
                                const SequentialProtocol<S>* protocol) {
  if (sc == Concept::Seq) {
    if (!protocol) throw InvalidSpec("sequential concept requires a protocol");
    return sequential_value(dist, *protocol, status_quo);
  }
  if (sc == Concept::Bayes)
    return deviation_value(dist, Test<S>::null_test(), status_quo);
  std::optional<DeviationQuote<S>> best;
  for (const auto& t : menu.tests) {
    if (!t.feasible()) continue;
    auto q = deviation_value(dist, t, status_quo);
    bool better = !best || q.value > best->value;
    if (!better && best && q.value == best->value) {
      better = *t.cost < *best->test->cost ||
               (*t.cost == *best->test->cost && t.pi < best->test->pi);
    }
    if (better) best = q;
  }
  if (!best) throw InvalidSpec("menu contains no feasible test");
  return *best;
}

}  // namespace detail

// Per-pair protocol replacements for heterogeneous sequential access.
template <class S>
using ProtocolOverrides =
    std::map<std::pair<std::size_t, std::size_t>, SequentialProtocol<S>>;

template <class S>
const SequentialProtocol<S>* pair_protocol(
    const SequentialProtocol<S>* base, const ProtocolOverrides<S>* overrides,
    std::size_t f, std::size_t l) {
  if (overrides) {
    auto it = overrides->find({f, l});
    if (it != overrides->end()) return &it->second;
  }
  return base;
}

// Deterministic lexicographic scan over cross pairs; returns the first pair
// whose concept deviation value strictly exceeds its joint status quo.
template <class S>
std::optional<BlockingCertificate<S>> find_blocking_pair(
    const Market<S>& market, const Allocation<S>& alloc,
    const TestMenu<S>& menu, Concept sc,
    const std::type_identity_t<SequentialProtocol<S>>* protocol = nullptr,
    const std::type_identity_t<ProtocolOverrides<S>>* overrides = nullptr) {
  for (std::size_t f = 0; f < market.n_firms(); ++f) {
    for (std::size_t l = 0; l < market.n_workers(); ++l) {
      // Standing pairs do not test; a deviation is a rematch. Whether a
      // matching's own pairs cover their thresholds is enforced by the
      // supporting-payoff feasibility check instead.
      if (alloc.matching.worker_of_firm[f] == static_cast<int>(l)) continue;
      S status_quo = alloc.joint(f, l);
      auto dist = pair_surplus_distribution(market, f, l);
      auto quote = detail::concept_quote(
          dist, status_quo, sc, menu,
          pair_protocol(protocol, overrides, f, l));
      if (is_positive(quote.gain)) {
        BlockingCertificate<S> cert;
        cert.firm = f;
        cert.worker = l;
        cert.concept_used = sc;
        cert.status_quo = status_quo;
        cert.value = quote.value;
        cert.gain = quote.gain;
        cert.instrument = quote.test;
        cert.policy = quote.policy;
        return cert;
      }
    }
  }
  return std::nullopt;
}

// Fixed per-type-profile utilities for the NTU extension, plus the split of
// joint test costs between the two sides (default: half each).
template <class S>
struct NtuUtilityTable {
  std::vector<std::vector<S>> firm_util;    // [firm grade][worker grade]
  std::vector<std::vector<S>> worker_util;  // [firm grade][worker grade]
  S firm_cost_share = S(1) / S(2);

  void validate(const SurplusTable<S>& table) const {
    auto shape_ok = [&](const std::vector<std::vector<S>>& u) {
      if (u.size() != table.firm_grades.size()) return false;
      for (const auto& row : u)
        if (row.size() != table.worker_grades.size()) return false;
      return true;
    };
    if (!shape_ok(firm_util) || !shape_ok(worker_util))
      throw InvalidSpec("NTU utility table shape mismatch");
    if (firm_cost_share < S(0) || firm_cost_share > S(1))
      throw InvalidSpec("NTU cost share outside [0,1]");
  }
};

namespace detail {

// Expected own utility of one side from a pair, under the pair's joint type
// distribution (or realized types).
template <class S>
std::pair<S, S> ntu_pair_utilities(const Market<S>& market,
                                   const NtuUtilityTable<S>& util,
                                   std::size_t f, std::size_t l) {
  if (market.mode == Mode::Realized) {
    auto gf = *market.firms[f].realized;
    auto gl = *market.workers[l].realized;
    return {util.firm_util[gf][gl], util.worker_util[gf][gl]};
  }
  auto joint = build_pair_joint(market.firms[f].prior,
                                market.workers[l].prior, market.rho);
  auto mix = [&](const std::vector<std::vector<S>>& u) -> S {
    return joint.hh * u[1][1] + joint.hl * u[1][0] + joint.lh * u[0][1] +
           joint.ll * u[0][0];
  };
  return {mix(util.firm_util), mix(util.worker_util)};
}

template <class S>
std::pair<std::vector<S>, std::vector<S>> ntu_status_quo(
    const Market<S>& market, const NtuUtilityTable<S>& util,
    const Matching& matching) {
  std::vector<S> fp(market.n_firms(), S(0));
  std::vector<S> wp(market.n_workers(), S(0));
  for (std::size_t f = 0; f < market.n_firms(); ++f) {
    if (!matching.matched(f)) continue;
    auto w = static_cast<std::size_t>(matching.worker_of_firm[f]);
    auto [uf, ul] = ntu_pair_utilities(market, util, f, w);
    fp[f] = uf;
    wp[w] = ul;
  }
  return {fp, wp};
}

}  // namespace detail

// One type profile of a candidate NTU deviation: probability and the two
// sides' fixed utilities.
template <class S>
struct NtuProfile {
  S prob;
  S firm_util;
  S worker_util;
};

// Per-side expected values of an NTU deviation under one test. With
// probability pi both learn the realized profile and the deviation happens
// only on profiles improving BOTH sides strictly; with probability 1-pi it
// happens only if both prior-expected utilities improve strictly. Each side
// nets its own cost share unconditionally.
template <class S>
std::pair<S, S> ntu_deviation_values(const std::vector<NtuProfile<S>>& profiles,
                                     const S& firm_sq, const S& worker_sq,
                                     const Test<S>& test, const S& firm_cost,
                                     const S& worker_cost) {
  S mean_f = S(0), mean_l = S(0);
  for (const auto& pr : profiles) {
    mean_f += pr.prob * pr.firm_util;
    mean_l += pr.prob * pr.worker_util;
  }
  bool prior_deviate =
      is_positive(S(mean_f - firm_sq)) && is_positive(S(mean_l - worker_sq));
  S inf_f = S(0), inf_l = S(0);
  for (const auto& pr : profiles) {
    bool accept = is_positive(S(pr.firm_util - firm_sq)) &&
                  is_positive(S(pr.worker_util - worker_sq));
    inf_f += pr.prob * (accept ? pr.firm_util : firm_sq);
    inf_l += pr.prob * (accept ? pr.worker_util : worker_sq);
  }
  S val_f = test.pi * inf_f +
            (S(1) - test.pi) * (prior_deviate ? mean_f : firm_sq) - firm_cost;
  S val_l = test.pi * inf_l +
            (S(1) - test.pi) * (prior_deviate ? mean_l : worker_sq) -
            worker_cost;
  return {val_f, val_l};
}

template <class S>
std::vector<NtuProfile<S>> ntu_pair_profiles(const Market<S>& market,
                                             const NtuUtilityTable<S>& util,
                                             std::size_t f, std::size_t l) {
  std::vector<NtuProfile<S>> profiles;
  if (market.mode == Mode::Realized) {
    auto [uf, ul] = detail::ntu_pair_utilities(market, util, f, l);
    profiles.push_back({S(1), uf, ul});
    return profiles;
  }
  auto joint = build_pair_joint(market.firms[f].prior,
                                market.workers[l].prior, market.rho);
  auto add = [&](const S& p, std::size_t gf, std::size_t gl) {
    profiles.push_back({p, util.firm_util[gf][gl], util.worker_util[gf][gl]});
  };
  add(joint.hh, 1, 1);
  add(joint.hl, 1, 0);
  add(joint.lh, 0, 1);
  add(joint.ll, 0, 0);
  return profiles;
}

// A certificate requires both sides' resulting expectations to strictly beat
// their status quo, for some menu test.
template <class S>
std::optional<BlockingCertificate<S>> find_ntu_blocking_pair(
    const Market<S>& market, const Matching& matching,
    const NtuUtilityTable<S>& utilities, const TestMenu<S>& menu) {
  utilities.validate(market.surplus);
  auto [firm_sq, worker_sq] = detail::ntu_status_quo(market, utilities, matching);
  for (std::size_t f = 0; f < market.n_firms(); ++f) {
    for (std::size_t l = 0; l < market.n_workers(); ++l) {
      const S& sf = firm_sq[f];
      const S& sl = worker_sq[l];
      auto profiles = ntu_pair_profiles(market, utilities, f, l);
      for (const auto& t : menu.tests) {
        if (!t.feasible()) continue;
        S cf = *t.cost * utilities.firm_cost_share;
        S cl = *t.cost - cf;
        auto [val_f, val_l] = ntu_deviation_values(profiles, sf, sl, t, cf, cl);
        if (is_positive(S(val_f - sf)) && is_positive(S(val_l - sl))) {
          BlockingCertificate<S> cert;
          cert.firm = f;
          cert.worker = l;
          cert.concept_used = Concept::Ntu;
          cert.status_quo = sf + sl;
          cert.value = val_f + val_l;
          cert.gain = (val_f - sf) + (val_l - sl);
          cert.instrument = t;
          return cert;
        }
      }
    }
  }
  return std::nullopt;
}

// NTU stable matchings: individually rational and no NTU blocking pair.
template <class S>
std::vector<Matching> ntu_stable_matchings(
    const Market<S>& market, const NtuUtilityTable<S>& utilities,
    const TestMenu<S>& menu, std::size_t cap = kDefaultEnumerationCap) {
  std::vector<Matching> out;
  for (const auto& m : enumerate_matchings(market, cap)) {
    auto [fp, wp] = detail::ntu_status_quo(market, utilities, m);
    bool ir = true;
    for (const auto& x : fp) ir = ir && !is_negative(x);
    for (const auto& x : wp) ir = ir && !is_negative(x);
    if (!ir) continue;
    if (!find_ntu_blocking_pair(market, m, utilities, menu)) out.push_back(m);
  }
  return out;
}

namespace detail {

// Exact feasibility of a difference-constraint system via Bellman-Ford.
// Nodes 0..n-1 are variables plus a virtual origin n with value 0;
// constraints are x_i - x_j <= w (edge j -> i). Returns node potentials on
// success (origin normalized to 0), nullopt on a negative cycle.
template <class S>
std::optional<std::vector<S>> solve_difference_system(
    std::size_t n, const std::vector<std::tuple<std::size_t, std::size_t, S>>&
                       edges /* (j, i, w) */) {
  const std::size_t origin = n;
  // Shortest paths from the origin give the componentwise maximal feasible
  // assignment with x_origin = 0.
  std::vector<std::optional<S>> dist(n + 1);
  dist[origin] = S(0);
  for (std::size_t round = 0; round <= n + 1; ++round) {
    bool changed = false;
    for (const auto& [j, i, w] : edges) {
      if (!dist[j]) continue;
      S cand = *dist[j] + w;
      if (!dist[i] || cand < *dist[i]) {
        dist[i] = cand;
        changed = true;
      }
    }
    if (!changed) {
      S shift = *dist[origin];
      std::vector<S> out;
      out.reserve(n);
      for (std::size_t k = 0; k < n; ++k) {
        if (!dist[k]) return std::nullopt;  // unconstrained variable
        out.push_back(*dist[k] - shift);
      }
      return out;
    }
  }
  return std::nullopt;  // negative cycle: infeasible
}

}  // namespace detail

// Linear feasibility for supporting transfers: u, v >= 0; matched pairs
// split their value exactly; unmatched agents hold 0; every cross pair's
// joint payoff covers its blocking threshold. After substituting
// v_l = value - u_f along matched edges this is a difference-constraint
// system over the matched firms' payoffs, solved exactly. The returned
// witness is the midpoint of the componentwise extreme solutions.
// When tested_standing is set, a matched pair's divisible value is lifted to
// its own blocking threshold (standing pairs enjoy tested surplus), which
// waives the own-pair coverage requirement in ex-ante markets.
template <class S>
std::optional<Allocation<S>> supporting_payoffs(
    const Market<S>& market, const Matching& matching,
    const std::map<std::pair<std::size_t, std::size_t>, S>& thresholds,
    bool tested_standing = false) {
  const std::size_t nf = market.n_firms();
  const std::size_t nw = market.n_workers();
  std::vector<std::optional<std::size_t>> firm_of(nw);
  std::vector<S> match_value(nf, S(0));
  std::vector<std::size_t> vars;  // matched firms
  std::vector<int> var_of_firm(nf, -1);
  for (std::size_t f = 0; f < nf; ++f) {
    if (!matching.matched(f)) continue;
    auto w = static_cast<std::size_t>(matching.worker_of_firm[f]);
    firm_of[w] = f;
    match_value[f] = pair_value(market, f, w);
    if (tested_standing) {
      auto it = thresholds.find({f, w});
      if (it != thresholds.end() && it->second > match_value[f])
        match_value[f] = it->second;
    }
    var_of_firm[f] = static_cast<int>(vars.size());
    vars.push_back(f);
  }
  const std::size_t n = vars.size();
  const std::size_t origin = n;
  std::vector<std::tuple<std::size_t, std::size_t, S>> edges;
  // Bounds 0 <= u_f <= value_f.
  for (std::size_t k = 0; k < n; ++k) {
    edges.push_back({origin, k, match_value[vars[k]]});  // u <= value
    edges.push_back({k, origin, S(0)});                  // u >= 0
  }
  auto threshold_of = [&](std::size_t f, std::size_t l) {
    auto it = thresholds.find({f, l});
    return it == thresholds.end() ? S(0) : it->second;
  };
  for (std::size_t f = 0; f < nf; ++f) {
    for (std::size_t l = 0; l < nw; ++l) {
      S T = threshold_of(f, l);
      bool fm = matching.matched(f);
      bool lm = firm_of[l].has_value();
      if (fm && lm) {
        std::size_t fl = *firm_of[l];
        if (fl == f) {
          if (match_value[f] < T) return std::nullopt;  // own pair short of T
          continue;
        }
        // u_f + (value_fl - u_fl) >= T  =>  u_fl - u_f <= value_fl - T
        edges.push_back({static_cast<std::size_t>(var_of_firm[f]),
                         static_cast<std::size_t>(var_of_firm[fl]),
                         match_value[fl] - T});
      } else if (fm && !lm) {
        // u_f >= T
        edges.push_back({static_cast<std::size_t>(var_of_firm[f]), origin,
                         -T});
      } else if (!fm && lm) {
        std::size_t fl = *firm_of[l];
        // value_fl - u_fl >= T  =>  u_fl <= value_fl - T
        edges.push_back({origin, static_cast<std::size_t>(var_of_firm[fl]),
                         match_value[fl] - T});
      } else {
        if (is_positive(T)) return std::nullopt;  // 0 >= T must hold
      }
    }
  }
  auto upper = detail::solve_difference_system<S>(n, edges);
  if (!upper) return std::nullopt;
  // Componentwise minimal solution: negate variables and resolve.
  std::vector<std::tuple<std::size_t, std::size_t, S>> neg_edges;
  neg_edges.reserve(edges.size());
  for (const auto& [j, i, w] : edges) {
    std::size_t jj = i == origin ? origin : i;
    std::size_t ii = j == origin ? origin : j;
    neg_edges.push_back({jj, ii, w});
  }
  auto lower_neg = detail::solve_difference_system<S>(n, neg_edges);
  Allocation<S> out;
  out.matching = matching;
  out.firm_pay.assign(nf, S(0));
  out.worker_pay.assign(nw, S(0));
  for (std::size_t k = 0; k < n; ++k) {
    S u_hi = (*upper)[k];
    S u_lo = lower_neg ? -(*lower_neg)[k] : u_hi;
    S u = (u_hi + u_lo) / S(2);
    std::size_t f = vars[k];
    auto w = static_cast<std::size_t>(matching.worker_of_firm[f]);
    out.firm_pay[f] = u;
    out.worker_pay[w] = match_value[f] - u;
  }
  return out;
}

// One executed deviation along an improvement path.
template <class S>
struct ImprovementStep {
  Allocation<S> allocation;
  std::optional<BlockingCertificate<S>> certificate;  // step that produced it
  S welfare_ledger;  // running sum of deviators' joint gains
};

inline constexpr std::size_t kImprovementStepCap = 1000;

// Repeatedly executes the lexicographically first ICPS-blocking deviation:
// the pair rematches and jilted partners drop to zero. Each deviator's new
// payoff is the pair's menu threshold minus the partner's previous payoff,
// the closed-form limit of letting the pair renegotiate its tested quote
// until neither side can press further. A one-shot quote split only moves a
// fraction of the distance to that fixed point, so repeated poaching of the
// same agent can shrink gains geometrically and never terminate; jumping to
// the limit keeps every step a strict improvement for both deviators and
// makes the process stop. The ledger records the proof-style welfare
// accounting (sum of certified deviation gains); jilted partners' losses
// are visible in the allocations themselves.
template <class S>
std::vector<ImprovementStep<S>> improvement_path(const Market<S>& market,
                                                 const Allocation<S>& start,
                                                 const TestMenu<S>& menu) {
  if (!check_individual_rationality(start))
    throw NonIrStart("improvement path requires an IR start");
  std::vector<ImprovementStep<S>> trace;
  Allocation<S> cur = start;
  S ledger = expected_welfare(market, cur.matching);
  trace.push_back({cur, std::nullopt, ledger});
  for (std::size_t step = 0; step < kImprovementStepCap; ++step) {
    auto cert = find_blocking_pair(market, cur, menu, Concept::Icps);
    if (!cert) return trace;
    std::size_t f = cert->firm;
    std::size_t l = cert->worker;
    S threshold =
        menu_threshold(pair_surplus_distribution(market, f, l), menu).first;
    S old_u = cur.firm_pay[f];
    S old_v = cur.worker_pay[l];
    // Unmatch the deviators' former partners.
    if (cur.matching.matched(f)) {
      auto w_old = static_cast<std::size_t>(cur.matching.worker_of_firm[f]);
      cur.worker_pay[w_old] = S(0);
      cur.matching.worker_of_firm[f] = Matching::kUnmatched;
    }
    if (auto f_old = cur.matching.firm_of_worker(l)) {
      cur.firm_pay[*f_old] = S(0);
      cur.matching.worker_of_firm[*f_old] = Matching::kUnmatched;
    }
    // Blocking certifies old_u + old_v < threshold, so both jumps are
    // strict improvements.
    cur.firm_pay[f] = threshold - old_v;
    cur.worker_pay[l] = threshold - old_u;
    cur.matching.worker_of_firm[f] = static_cast<int>(l);
    ledger += cert->gain;
    trace.push_back({cur, cert, ledger});
  }
  throw Error("improvement path exceeded the step cap");
}

}  // namespace icps

#endif  // ICPS_STABILITY_HPP

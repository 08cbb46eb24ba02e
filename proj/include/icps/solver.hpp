#ifndef ICPS_SOLVER_HPP
#define ICPS_SOLVER_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <type_traits>
#include <vector>

#include "icps/errors.hpp"
#include "icps/information.hpp"
#include "icps/market.hpp"
#include "icps/stability.hpp"

namespace icps {

// Per-pair blocking thresholds for a concept. Thresholds depend only on the
// pair distributions and instruments, so they are computed once per market.
template <class S>
std::map<std::pair<std::size_t, std::size_t>, S> blocking_thresholds(
    const Market<S>& market, const TestMenu<S>& menu, Concept sc,
    const std::type_identity_t<SequentialProtocol<S>>* protocol = nullptr,
    const std::type_identity_t<ProtocolOverrides<S>>* overrides = nullptr) {
  std::map<std::pair<std::size_t, std::size_t>, S> out;
  TestMenu<S> null_only;
  for (std::size_t f = 0; f < market.n_firms(); ++f) {
    for (std::size_t l = 0; l < market.n_workers(); ++l) {
      auto dist = pair_surplus_distribution(market, f, l);
      S thr;
      switch (sc) {
        case Concept::Bayes:
          thr = menu_threshold(dist, null_only).first;
          break;
        case Concept::Icps:
        case Concept::Endog:
          thr = menu_threshold(dist, menu).first;
          break;
        case Concept::Seq: {
          auto* p = pair_protocol(protocol, overrides, f, l);
          if (!p) throw InvalidSpec("sequential concept requires a protocol");
          thr = sequential_threshold(dist, *p);
          break;
        }
        case Concept::Ntu:
          throw InvalidSpec("NTU uses find_ntu_blocking_pair, not thresholds");
      }
      out[{f, l}] = thr;
    }
  }
  return out;
}

template <class S>
struct StableSetReport {
  Concept concept_used;
  std::vector<std::pair<Matching, Allocation<S>>> stable;  // with witnesses
  std::size_t total_matchings = 0;
  std::optional<S> welfare_min, welfare_max;
};

// Exact stable set per concept: a matching is in the set iff some payoff
// profile passes every pair's blocking threshold.
template <class S>
StableSetReport<S> stable_matchings(
    const Market<S>& market, const TestMenu<S>& menu, Concept sc,
    const std::type_identity_t<SequentialProtocol<S>>* protocol = nullptr,
    std::size_t cap = kDefaultEnumerationCap, bool tested_standing = false,
    const std::type_identity_t<ProtocolOverrides<S>>* overrides = nullptr) {
  auto thresholds =
      blocking_thresholds(market, menu, sc, protocol, overrides);
  StableSetReport<S> report;
  report.concept_used = sc;
  auto all = enumerate_matchings(market, cap);
  report.total_matchings = all.size();
  for (const auto& m : all) {
    auto witness = supporting_payoffs(market, m, thresholds, tested_standing);
    if (!witness) continue;
    S w = expected_welfare(market, m);
    if (!report.welfare_min || w < *report.welfare_min) report.welfare_min = w;
    if (!report.welfare_max || w > *report.welfare_max) report.welfare_max = w;
    report.stable.emplace_back(m, std::move(*witness));
  }
  return report;
}

template <class S>
bool set_contains(const StableSetReport<S>& report, const Matching& m) {
  for (const auto& [sm, alloc] : report.stable)
    if (sm == m) return true;
  return false;
}

template <class S>
bool set_subset(const StableSetReport<S>& a, const StableSetReport<S>& b) {
  for (const auto& [m, alloc] : a.stable)
    if (!set_contains(b, m)) return false;
  return true;
}

template <class S>
Matching max_welfare_matching(
    const Market<S>& market,
    const std::optional<std::type_identity_t<S>>& menu_cost = std::nullopt,
    std::size_t cap = kDefaultEnumerationCap) {
  auto all = enumerate_matchings(market, cap);
  const Matching* best = nullptr;
  std::optional<S> best_w;
  for (const auto& m : all) {
    S w = expected_welfare(market, m, menu_cost);
    if (!best_w || w > *best_w) {
      best_w = w;
      best = &m;
    }
    // enumerate_matchings is lexicographically sorted, so the first argmax
    // is the lexicographic tie-break.
  }
  return best ? *best : Matching(market.n_firms());
}

// Rank-to-rank pairing of both sides sorted descending by sort key.
template <class S>
Matching assortative_matching(const Market<S>& market) {
  auto fk = detail::sort_keys(market, market.firms, market.surplus.firm_grades);
  auto wk =
      detail::sort_keys(market, market.workers, market.surplus.worker_grades);
  std::vector<std::size_t> forder(fk.size()), worder(wk.size());
  std::iota(forder.begin(), forder.end(), 0u);
  std::iota(worder.begin(), worder.end(), 0u);
  std::stable_sort(forder.begin(), forder.end(),
                   [&](std::size_t a, std::size_t b) { return fk[a] > fk[b]; });
  std::stable_sort(worder.begin(), worder.end(),
                   [&](std::size_t a, std::size_t b) { return wk[a] > wk[b]; });
  Matching m(fk.size());
  std::size_t k = std::min(fk.size(), wk.size());
  for (std::size_t i = 0; i < k; ++i)
    m.worker_of_firm[forder[i]] = static_cast<int>(worder[i]);
  return m;
}

struct RefinementMagnitude {
  std::size_t ir_count = 0;
  std::size_t bayes_count = 0;
  std::size_t icps_count = 0;
  std::size_t endog_count = 0;
  std::optional<std::size_t> seq_count;
  std::size_t bayes_minus_icps = 0;
  std::size_t icps_minus_endog = 0;
  std::optional<std::size_t> endog_minus_seq;
};

// Set sizes and differences along the inclusion chain. When a protocol is
// given, the ICPS/Endog sets are computed from its collapsed one-shot menu
// so the sequential comparison is like-for-like. A chain violation is a
// hard error; it is never expected.
template <class S>
RefinementMagnitude refinement_magnitude(
    const Market<S>& market, const TestMenu<S>& menu,
    const std::type_identity_t<SequentialProtocol<S>>* protocol = nullptr,
    std::size_t cap = kDefaultEnumerationCap) {
  TestMenu<S> effective = menu;
  if (protocol) {
    auto collapsed = protocol->collapsed_tests();
    effective = TestMenu<S>(collapsed);
  }
  // Sigma^0: individually rational matchings (thresholds all zero).
  std::map<std::pair<std::size_t, std::size_t>, S> zero;
  StableSetReport<S> sigma0;
  sigma0.concept_used = Concept::Bayes;
  for (const auto& m : enumerate_matchings(market, cap)) {
    auto w = supporting_payoffs(market, m, zero);
    if (w) sigma0.stable.emplace_back(m, std::move(*w));
  }
  auto bayes = stable_matchings(market, effective, Concept::Bayes, nullptr, cap);
  auto icps = stable_matchings(market, effective, Concept::Icps, nullptr, cap);
  auto endog =
      stable_matchings(market, effective, Concept::Endog, nullptr, cap);
  RefinementMagnitude out;
  out.ir_count = sigma0.stable.size();
  out.bayes_count = bayes.stable.size();
  out.icps_count = icps.stable.size();
  out.endog_count = endog.stable.size();
  out.bayes_minus_icps = out.bayes_count - out.icps_count;
  out.icps_minus_endog = out.icps_count - out.endog_count;
  if (!set_subset(bayes, sigma0) || !set_subset(icps, bayes) ||
      !set_subset(endog, icps))
    throw Error("refinement inclusion chain violated");
  if (protocol) {
    auto seq = stable_matchings(market, effective, Concept::Seq, protocol, cap);
    out.seq_count = seq.stable.size();
    out.endog_minus_seq = out.endog_count - seq.stable.size();
    if (!set_subset(seq, endog))
      throw Error("sequential refinement inclusion violated");
  }
  return out;
}

struct LoneWolfReport {
  bool holds = false;
  std::optional<std::pair<Matching, Matching>> counter_witness;
};

// Lone wolf check: the unmatched-agent set must be identical across the
// stable set.
template <class S>
LoneWolfReport lone_wolf_report(const StableSetReport<S>& report) {
  if (report.stable.empty())
    throw EmptyStableSet("lone wolf check needs a nonempty stable set");
  const auto& first = report.stable.front().first;
  std::size_t nw = report.stable.front().second.worker_pay.size();
  auto profile = [&](const Matching& m) {
    std::vector<bool> p;
    for (std::size_t f = 0; f < m.worker_of_firm.size(); ++f)
      p.push_back(!m.matched(f));
    for (std::size_t w = 0; w < nw; ++w)
      p.push_back(!m.firm_of_worker(w).has_value());
    return p;
  };
  auto base = profile(first);
  for (const auto& [m, alloc] : report.stable) {
    if (profile(m) != base)
      return {false, std::make_pair(first, m)};
  }
  return {true, std::nullopt};
}

struct UniquenessReport {
  bool assumption4_satisfied = false;
  bool unique = false;
  bool matches_assortative = false;
  std::size_t stable_count = 0;
};

// Checks the test-power precondition (some menu test with pi * Delta > c)
// and whether the ICPS-stable set is the singleton assortative matching.
template <class S>
UniquenessReport uniqueness_report(const Market<S>& market,
                                   const TestMenu<S>& menu,
                                   std::size_t cap = kDefaultEnumerationCap) {
  if (!market.distinct_types)
    throw NoDistinctTypes("uniqueness report requires the distinct-types flag");
  UniquenessReport out;
  S delta = test_power_delta(market.surplus);
  for (const auto& t : menu.tests)
    if (t.feasible() && is_positive(S(t.pi * delta - *t.cost)))
      out.assumption4_satisfied = true;
  auto icps = stable_matchings(market, menu, Concept::Icps, nullptr, cap);
  out.stable_count = icps.stable.size();
  out.unique = icps.stable.size() == 1;
  if (out.unique)
    out.matches_assortative =
        icps.stable.front().first == assortative_matching(market);
  return out;
}

}  // namespace icps

#endif  // ICPS_SOLVER_HPP

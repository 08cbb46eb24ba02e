#ifndef ICPS_INFORMATION_HPP
#define ICPS_INFORMATION_HPP

#include <algorithm>
#include <optional>
#include <vector>

#include "icps/errors.hpp"
#include "icps/market.hpp"
#include "icps/numeric.hpp"
#include "icps/piecewise.hpp"

namespace icps {

// Credible bilateral test: reveals both types perfectly with probability pi,
// reveals nothing otherwise, at joint cost c. An absent cost means the test
// is infeasible (the c = infinity sentinel).
template <class S>
struct Test {
  S pi = S(0);
  std::optional<S> cost = S(0);

  static Test null_test() { return Test{S(0), S(0)}; }
  static Test make(const S& pi, const S& cost) { return Test{pi, cost}; }
  static Test infeasible(const S& pi) { return Test{pi, std::nullopt}; }

  bool feasible() const { return cost.has_value(); }
  bool is_null() const { return feasible() && pi == S(0) && *cost == S(0); }
  bool operator==(const Test& o) const { return pi == o.pi && cost == o.cost; }

  void validate() const {
    if (pi < S(0) || pi > S(1)) throw InvalidSpec("test accuracy outside [0,1]");
    if (cost && *cost < S(0)) throw InvalidSpec("negative test cost");
  }
};

// Finite menu; the null test is always present.
template <class S>
struct TestMenu {
  std::vector<Test<S>> tests;

  TestMenu() : tests{Test<S>::null_test()} {}
  explicit TestMenu(std::vector<Test<S>> ts) : tests(std::move(ts)) {
    for (const auto& t : tests) t.validate();
    bool has_null = false;
    for (const auto& t : tests) has_null = has_null || t.is_null();
    if (!has_null) tests.insert(tests.begin(), Test<S>::null_test());
  }
};

// Staged testing: cumulative reveal probabilities pi_k (strictly increasing)
// with incremental stage costs c_k > 0.
template <class S>
struct SequentialProtocol {
  std::vector<std::pair<S, S>> stages;  // (cumulative pi_k, stage cost c_k)

  void validate() const {
    if (stages.empty()) throw InvalidSpec("empty sequential protocol");
    S prev = S(0);
    for (const auto& [pi, c] : stages) {
      if (!(pi > prev) || pi > S(1))
        throw InvalidSpec("protocol accuracies must satisfy 0 < pi_1 < ... <= 1");
      if (!(c > S(0))) throw InvalidSpec("protocol stage costs must be positive");
      prev = pi;
    }
  }

  // One-shot tests a deviating pair could mimic by committing to stop after
  // stage k, paying all costs up front.
  std::vector<Test<S>> collapsed_tests() const {
    std::vector<Test<S>> out;
    S cum = S(0);
    for (const auto& [pi, c] : stages) {
      cum += c;
      out.push_back(Test<S>::make(pi, cum));
    }
    return out;
  }
};

// Value of the best deviation under one instrument, with the status quo it
// was quoted against. For sequential instruments, policy[k] records whether
// the optimal plan continues into stage k+1 when still unrevealed.
template <class S>
struct DeviationQuote {
  S value;
  S status_quo;
  S gain;
  std::optional<Test<S>> test;
  std::vector<bool> policy;
  bool infeasible_instrument = false;
};

// E[(S - Pi)_+]: expected gain from accepting only revealed surpluses above
// the status quo.
template <class S>
S option_value(const PairSurplusDistribution<S>& dist, const S& status_quo) {
  S v = S(0);
  for (const auto& [s, p] : dist.atoms)
    if (s > status_quo) v += (s - status_quo) * p;
  return v;
}

// value = pi*(Pi + E[(S-Pi)_+]) + (1-pi)*max(E[S], Pi) - c. With probability
// pi the test reveals both types and the pair accepts iff S >= Pi; otherwise
// they decide on priors (accept iff E[S] >= Pi). The cost is sunk either way.
template <class S>
DeviationQuote<S> deviation_value(const PairSurplusDistribution<S>& dist,
                                  const Test<S>& test, const S& status_quo) {
  DeviationQuote<S> q;
  q.status_quo = status_quo;
  q.test = test;
  if (!test.feasible()) {
    q.value = status_quo;
    q.gain = S(0);
    q.infeasible_instrument = true;
    return q;
  }
  S informed = status_quo + option_value(dist, status_quo);
  S uninformed = std::max(dist.mean, status_quo);
  q.value = test.pi * informed + (S(1) - test.pi) * uninformed - *test.cost;
  q.gain = q.value - status_quo;
  return q;
}

namespace detail {

// Candidate kink locations for every gain curve built from one distribution:
// the atoms, the mean, and zero.
template <class S>
std::vector<S> gain_breakpoints(const PairSurplusDistribution<S>& dist) {
  std::vector<S> xs{S(0), dist.mean};
  for (const auto& [s, p] : dist.atoms) xs.push_back(s);
  S hi = std::max(dist.max_value(), dist.mean) + S(1);
  xs.push_back(hi);
  return xs;
}

template <class S>
PiecewiseLinear<S> gain_curve(const PairSurplusDistribution<S>& dist,
                              const Test<S>& test) {
  return PiecewiseLinear<S>::from_breakpoints(
      gain_breakpoints(dist), [&](const S& pi_sq) {
        return deviation_value(dist, test, pi_sq).gain;
      });
}

}  // namespace detail

// Smallest status quo at which the test no longer yields a strictly positive
// deviation gain. The gain curve is piecewise linear and nonincreasing with
// kinks only at the atoms and the mean, so a breakpoint scan finds the root
// exactly.
template <class S>
S blocking_threshold(const PairSurplusDistribution<S>& dist,
                     const Test<S>& test) {
  if (!test.feasible()) return S(0);
  auto root = detail::gain_curve(dist, test).first_nonpositive();
  // gain(Pi) = -c <= 0 for Pi beyond max(S); a root always exists.
  return *root;
}

// Best (largest) blocking threshold over the menu; ties break toward lower
// cost, then lower accuracy.
template <class S>
std::pair<S, Test<S>> menu_threshold(const PairSurplusDistribution<S>& dist,
                                     const TestMenu<S>& menu) {
  std::optional<S> best;
  Test<S> best_test;
  for (const auto& t : menu.tests) {
    if (!t.feasible()) continue;
    S thr = blocking_threshold(dist, t);
    bool better = !best || thr > *best;
    if (!better && thr == *best) {
      better = *t.cost < *best_test.cost ||
               (*t.cost == *best_test.cost && t.pi < best_test.pi);
    }
    if (better) {
      best = thr;
      best_test = t;
    }
  }
  if (!best) throw InvalidSpec("menu contains no feasible test");
  return {*best, best_test};
}

// Backward induction over (stage, revealed?) states. Once revealed the pair
// stops with max(S_realized, Pi); while unrevealed before stage k+1 they
// choose between deciding on priors and paying c_{k+1} for a reveal with
// conditional probability (pi_{k+1} - pi_k) / (1 - pi_k).
template <class S>
DeviationQuote<S> sequential_value(const PairSurplusDistribution<S>& dist,
                                   const SequentialProtocol<S>& protocol,
                                   const S& status_quo) {
  protocol.validate();
  const std::size_t K = protocol.stages.size();
  S informed = status_quo + option_value(dist, status_quo);
  S stop = std::max(dist.mean, status_quo);
  // continuation[k]: value when unrevealed with stages k+1..K remaining.
  std::vector<S> value(K + 1, stop);
  std::vector<bool> cont(K, false);
  for (std::size_t k = K; k-- > 0;) {
    const S& pi_next = protocol.stages[k].first;
    const S pi_prev = k == 0 ? S(0) : protocol.stages[k - 1].first;
    const S& c_next = protocol.stages[k].second;
    S q = (pi_next - pi_prev) / (S(1) - pi_prev);
    S continue_value = q * informed + (S(1) - q) * value[k + 1] - c_next;
    cont[k] = continue_value > stop;
    value[k] = std::max(stop, continue_value);
  }
  DeviationQuote<S> out;
  out.status_quo = status_quo;
  out.value = value[0];
  out.gain = out.value - status_quo;
  out.policy = std::move(cont);
  return out;
}

// Root of the sequential gain curve. The max() in the induction introduces
// kinks off the atom grid, so the curve is assembled with exact piecewise
// algebra before scanning.
template <class S>
S sequential_threshold(const PairSurplusDistribution<S>& dist,
                       const SequentialProtocol<S>& protocol) {
  protocol.validate();
  auto xs = detail::gain_breakpoints(dist);
  S lo = S(0);
  S hi = xs.back();
  using PL = PiecewiseLinear<S>;
  PL informed = PL::from_breakpoints(xs, [&](const S& pi_sq) -> S {
    return pi_sq + option_value(dist, pi_sq);
  });
  PL stop = PL::from_breakpoints(xs, [&](const S& pi_sq) -> S {
    return std::max(dist.mean, pi_sq);
  });
  const std::size_t K = protocol.stages.size();
  PL value = stop;
  for (std::size_t k = K; k-- > 0;) {
    const S& pi_next = protocol.stages[k].first;
    const S pi_prev = k == 0 ? S(0) : protocol.stages[k - 1].first;
    const S& c_next = protocol.stages[k].second;
    S q = (pi_next - pi_prev) / (S(1) - pi_prev);
    PL cont = (informed.scaled(q) + value.scaled(S(1) - q)).shifted(-c_next);
    value = PL::max(stop, cont);
  }
  PL identity = PL::from_breakpoints(std::vector<S>{lo, hi},
                                     [](const S& x) { return x; });
  PL gain = value + identity.scaled(S(-1));
  auto root = gain.first_nonpositive();
  if (!root) return hi;  // cannot happen: gain(hi) <= 0 by construction
  return *root;
}

}  // namespace icps

#endif  // ICPS_INFORMATION_HPP

#ifndef TESTS_HELPERS_HPP
#define TESTS_HELPERS_HPP

#include <cstdint>
#include <vector>

#include "icps/market.hpp"
#include "icps/numeric.hpp"

namespace th {

using icps::Rational;

inline Rational q(long num, long den = 1) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

// Reference setup used throughout: alpha=4, beta=2, gamma=1, common p=1/2,
// independent types. Surplus atoms {(1,1/4),(2,1/2),(4,1/4)}, mean 9/4.
template <class S>
icps::SurplusTable<S> std_table() {
  return icps::SurplusTable<S>::two_grade(S(4), S(2), S(1));
}

template <class S>
icps::Market<S> std_market(std::size_t n_firms = 1, std::size_t n_workers = 1) {
  icps::Market<S> m;
  m.surplus = std_table<S>();
  m.mode = icps::Mode::ExAnte;
  for (std::size_t i = 0; i < n_firms; ++i)
    m.firms.push_back({"f" + std::to_string(i), S(1) / S(2), std::nullopt});
  for (std::size_t j = 0; j < n_workers; ++j)
    m.workers.push_back({"w" + std::to_string(j), S(1) / S(2), std::nullopt});
  m.validate();
  return m;
}

template <class S>
icps::PairSurplusDistribution<S> std_dist() {
  return icps::pair_surplus_distribution(std_market<S>(), 0, 0);
}

// Realized two-grade market with explicit H(1)/L(0) assignments per side.
template <class S>
icps::Market<S> realized_market(const std::vector<int>& firm_types,
                                const std::vector<int>& worker_types,
                                const S& alpha = S(4), const S& beta = S(2),
                                const S& gamma = S(1)) {
  icps::Market<S> m;
  m.surplus = icps::SurplusTable<S>::two_grade(alpha, beta, gamma);
  m.mode = icps::Mode::Realized;
  for (std::size_t i = 0; i < firm_types.size(); ++i)
    m.firms.push_back({"f" + std::to_string(i), S(1) / S(2),
                       static_cast<std::size_t>(firm_types[i])});
  for (std::size_t j = 0; j < worker_types.size(); ++j)
    m.workers.push_back({"w" + std::to_string(j), S(1) / S(2),
                         static_cast<std::size_t>(worker_types[j])});
  m.validate();
  return m;
}

inline icps::Matching matching_of(const std::vector<int>& w_of_f) {
  icps::Matching m(w_of_f.size());
  m.worker_of_firm = w_of_f;
  return m;
}

}  // namespace th

#endif  // TESTS_HELPERS_HPP

#ifndef ICPS_GENERATE_HPP
#define ICPS_GENERATE_HPP

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "icps/errors.hpp"
#include "icps/market.hpp"
#include "icps/stability.hpp"

namespace icps {

// Deterministic bounded draws on top of mt19937_64. uniform_int_distribution
// is implementation-defined, so the generator uses plain modulo reduction to
// keep outputs byte-identical everywhere.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next(std::uint64_t bound) {  // in [0, bound)
    return engine_() % bound;
  }
  std::int64_t range(std::int64_t lo, std::int64_t hi) {  // inclusive
    return lo + static_cast<std::int64_t>(next(
                    static_cast<std::uint64_t>(hi - lo + 1)));
  }

 private:
  std::mt19937_64 engine_;
};

template <class S>
struct GenSpec {
  std::size_t n_firms = 2;
  std::size_t n_workers = 2;
  Mode mode = Mode::ExAnte;
  bool distinct_types = false;
  S rho = S(0);
  unsigned prior_denominator = 16;  // priors drawn as k/denominator
  long surplus_scale = 4;           // gaps drawn from 1..surplus_scale

  void validate() const {
    if (n_firms == 0 || n_workers == 0)
      throw InvalidSpec("generated market needs agents on both sides");
    if (prior_denominator < 3)
      throw InvalidSpec("prior denominator too small for (0,1) priors");
    if (surplus_scale < 1) throw InvalidSpec("surplus scale must be >= 1");
    if (distinct_types && mode != Mode::Realized)
      throw InvalidSpec("distinct types require realized mode");
  }
};

// Deterministic market from a seed: same seed, same serialized market.
// Distinct-type markets get one grade per agent with a product surplus
// table; otherwise a random two-grade alpha > beta > gamma >= 0 table.
template <class S>
Market<S> generate_market(std::uint64_t seed, const GenSpec<S>& spec) {
  spec.validate();
  SeededRng rng(seed);
  Market<S> m;
  m.mode = spec.mode;
  m.rho = spec.rho;
  m.distinct_types = spec.distinct_types;
  auto draw_prior = [&]() -> S {
    auto k = rng.range(1, spec.prior_denominator - 1);
    return S(static_cast<long>(k)) / S(static_cast<long>(spec.prior_denominator));
  };
  if (spec.distinct_types) {
    auto draw_values = [&](std::size_t n) {
      // n distinct values in 1..3n, ascending.
      std::vector<long> pool(3 * n);
      for (std::size_t i = 0; i < pool.size(); ++i)
        pool[i] = static_cast<long>(i + 1);
      for (std::size_t i = pool.size(); i-- > 1;)
        std::swap(pool[i], pool[rng.next(i + 1)]);
      pool.resize(n);
      std::sort(pool.begin(), pool.end());
      return pool;
    };
    auto fvals = draw_values(spec.n_firms);
    auto wvals = draw_values(spec.n_workers);
    std::vector<TypeGrade<S>> fg, wg;
    for (std::size_t i = 0; i < fvals.size(); ++i)
      fg.push_back({"f" + std::to_string(fvals[i]), S(fvals[i])});
    for (std::size_t j = 0; j < wvals.size(); ++j)
      wg.push_back({"w" + std::to_string(wvals[j]), S(wvals[j])});
    m.surplus = SurplusTable<S>::product(fg, wg);
    // Each agent realizes its own grade, in shuffled market order.
    std::vector<std::size_t> fperm(spec.n_firms), wperm(spec.n_workers);
    for (std::size_t i = 0; i < fperm.size(); ++i) fperm[i] = i;
    for (std::size_t i = fperm.size(); i-- > 1;)
      std::swap(fperm[i], fperm[rng.next(i + 1)]);
    for (std::size_t i = 0; i < wperm.size(); ++i) wperm[i] = i;
    for (std::size_t i = wperm.size(); i-- > 1;)
      std::swap(wperm[i], wperm[rng.next(i + 1)]);
    for (std::size_t i = 0; i < spec.n_firms; ++i)
      m.firms.push_back({"f" + std::to_string(i), draw_prior(), fperm[i]});
    for (std::size_t j = 0; j < spec.n_workers; ++j)
      m.workers.push_back({"w" + std::to_string(j), draw_prior(), wperm[j]});
  } else {
    long gamma = rng.range(0, spec.surplus_scale - 1);
    long beta = gamma + rng.range(1, spec.surplus_scale);
    long alpha = beta + rng.range(1, spec.surplus_scale);
    m.surplus = SurplusTable<S>::two_grade(S(alpha), S(beta), S(gamma));
    for (std::size_t i = 0; i < spec.n_firms; ++i) {
      Agent<S> a{"f" + std::to_string(i), draw_prior(), std::nullopt};
      if (spec.mode == Mode::Realized) a.realized = rng.next(2);
      m.firms.push_back(a);
    }
    for (std::size_t j = 0; j < spec.n_workers; ++j) {
      Agent<S> a{"w" + std::to_string(j), draw_prior(), std::nullopt};
      if (spec.mode == Mode::Realized) a.realized = rng.next(2);
      m.workers.push_back(a);
    }
  }
  m.validate();
  return m;
}

// Random fixed-utility table for NTU suites, aligned with a two-grade
// market. Utilities are small nonnegative integers.
template <class S>
NtuUtilityTable<S> generate_ntu_table(std::uint64_t seed,
                                      const SurplusTable<S>& table) {
  SeededRng rng(seed ^ 0x9e3779b97f4a7c15ull);
  NtuUtilityTable<S> u;
  auto fill = [&](std::vector<std::vector<S>>& dst) {
    dst.assign(table.firm_grades.size(),
               std::vector<S>(table.worker_grades.size(), S(0)));
    for (auto& row : dst)
      for (auto& cell : row) cell = S(static_cast<long>(rng.range(0, 9)));
  };
  fill(u.firm_util);
  fill(u.worker_util);
  return u;
}

// Random one-test menus for sweeps and suites: {null, (pi, c)} with pi a
// positive multiple of 1/8 and cost a small multiple of 1/4.
template <class S>
TestMenu<S> generate_menu(std::uint64_t seed) {
  SeededRng rng(seed ^ 0xda942042e4dd58b5ull);
  S pi = S(static_cast<long>(rng.range(1, 8))) / S(8);
  S cost = S(static_cast<long>(rng.range(0, 4))) / S(4);
  return TestMenu<S>({Test<S>::make(pi, cost)});
}

}  // namespace icps

#endif  // ICPS_GENERATE_HPP

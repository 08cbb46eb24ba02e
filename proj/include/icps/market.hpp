#ifndef ICPS_MARKET_HPP
#define ICPS_MARKET_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "icps/errors.hpp"
#include "icps/numeric.hpp"

namespace icps {

enum class Mode { ExAnte, Realized };

inline const char* mode_name(Mode m) {
  return m == Mode::ExAnte ? "ex-ante" : "realized";
}

// One productivity grade: a label and a scalar value used as sort key and,
// for product-form tables, as the productivity itself.
template <class S>
struct TypeGrade {
  std::string label;
  S value;
};

// Match surplus indexed by (firm grade, worker grade). Grades are stored in
// ascending value order; entries must be strictly increasing in both
// arguments. The two-grade case {L, H} additionally requires the symmetric
// off-diagonal beta.
template <class S>
struct SurplusTable {
  std::vector<TypeGrade<S>> firm_grades;
  std::vector<TypeGrade<S>> worker_grades;
  std::vector<std::vector<S>> entries;  // entries[firm_idx][worker_idx]

  static SurplusTable two_grade(const S& alpha, const S& beta, const S& gamma) {
    SurplusTable t;
    t.firm_grades = {{"L", S(0)}, {"H", S(1)}};
    t.worker_grades = {{"L", S(0)}, {"H", S(1)}};
    t.entries = {{gamma, beta}, {beta, alpha}};
    t.validate();
    return t;
  }

  // S(x, y) = x * y over the given grade values.
  static SurplusTable product(std::vector<TypeGrade<S>> fg,
                              std::vector<TypeGrade<S>> wg) {
    SurplusTable t;
    t.firm_grades = std::move(fg);
    t.worker_grades = std::move(wg);
    t.entries.resize(t.firm_grades.size());
    for (std::size_t i = 0; i < t.firm_grades.size(); ++i)
      for (std::size_t j = 0; j < t.worker_grades.size(); ++j)
        t.entries[i].push_back(t.firm_grades[i].value *
                               t.worker_grades[j].value);
    t.validate();
    return t;
  }

  bool two_grade_shape() const {
    return firm_grades.size() == 2 && worker_grades.size() == 2;
  }

  const S& at(std::size_t f, std::size_t w) const { return entries[f][w]; }

  void validate() const {
    if (firm_grades.empty() || worker_grades.empty() ||
        entries.size() != firm_grades.size())
      throw InvalidSpec("surplus table shape mismatch");
    for (const auto& row : entries)
      if (row.size() != worker_grades.size())
        throw InvalidSpec("surplus table shape mismatch");
    auto check_sorted = [](const std::vector<TypeGrade<S>>& g) {
      for (std::size_t i = 0; i + 1 < g.size(); ++i)
        if (!(g[i].value < g[i + 1].value))
          throw InvalidSpec("grade values must be strictly ascending");
    };
    check_sorted(firm_grades);
    check_sorted(worker_grades);
    for (std::size_t i = 0; i < entries.size(); ++i)
      for (std::size_t j = 0; j < entries[i].size(); ++j) {
        if (entries[i][j] < S(0))
          throw InvalidSpec("surplus entries must be nonnegative");
        if (i + 1 < entries.size() && !(entries[i][j] < entries[i + 1][j]))
          throw InvalidSpec("surplus not strictly increasing in firm grade");
        if (j + 1 < entries[i].size() && !(entries[i][j] < entries[i][j + 1]))
          throw InvalidSpec("surplus not strictly increasing in worker grade");
      }
    // The canonical L/H table carries a single off-diagonal beta; general
    // 2x2 grade tables (distinct agent values) are free to be asymmetric.
    if (two_grade_shape() && firm_grades[0].label == "L" &&
        worker_grades[0].label == "L" && !(entries[0][1] == entries[1][0]))
      throw InvalidSpec("two-grade table requires symmetric off-diagonal");
  }
};

// Joint distribution of a single pair's (firm grade, worker grade) in the
// two-grade case, with marginal high-type probabilities p_f, p_l and a
// shared association parameter rho in [-1, 1].
template <class S>
struct JointTypeDistribution {
  S p_firm, p_worker, rho;
  S hh, hl, lh, ll;
};

// Cell probabilities: HH = p_f*p_l + rho*g, with g = min(p_f(1-p_l),
// p_l(1-p_f)). For a common p this is exactly p^2 + rho*p*(1-p); rho = 1
// reaches the comonotone coupling and rho = 0 the product distribution.
// Marginals are p_f and p_l for every rho. Throws when any cell would be
// negative (for common p: rho < -min(p/(1-p), (1-p)/p)).
template <class S>
JointTypeDistribution<S> build_pair_joint(const S& p_firm, const S& p_worker,
                                          const S& rho) {
  if (!(p_firm > S(0) && p_firm < S(1) && p_worker > S(0) && p_worker < S(1)))
    throw InvalidSpec("prior must lie in (0,1)");
  if (rho < S(-1) || rho > S(1))
    throw InvalidSpec("rho must lie in [-1,1]");
  S a = p_firm * (S(1) - p_worker);
  S b = p_worker * (S(1) - p_firm);
  S g = a < b ? a : b;
  JointTypeDistribution<S> d;
  d.p_firm = p_firm;
  d.p_worker = p_worker;
  d.rho = rho;
  d.hh = p_firm * p_worker + rho * g;
  d.hl = a - rho * g;
  d.lh = b - rho * g;
  d.ll = (S(1) - p_firm) * (S(1) - p_worker) + rho * g;
  if (is_negative(d.hh) || is_negative(d.hl) || is_negative(d.lh) ||
      is_negative(d.ll))
    throw InfeasibleCorrelation("rho infeasible for the given priors");
  return d;
}

template <class S>
JointTypeDistribution<S> build_joint_distribution(const S& p, const S& rho) {
  return build_pair_joint(p, p, rho);
}

template <class S>
struct Agent {
  std::string name;
  S prior;                            // probability of the high grade
  std::optional<std::size_t> realized;  // grade index, realized mode only
};

template <class S>
struct Market {
  SurplusTable<S> surplus;
  std::vector<Agent<S>> firms;
  std::vector<Agent<S>> workers;
  S rho = S(0);
  Mode mode = Mode::ExAnte;
  bool distinct_types = false;

  std::size_t n_firms() const { return firms.size(); }
  std::size_t n_workers() const { return workers.size(); }

  void validate() const {
    surplus.validate();
    auto check_side = [&](const std::vector<Agent<S>>& side,
                          std::size_t n_grades) {
      for (const auto& a : side) {
        if (!(a.prior > S(0) && a.prior < S(1)))
          throw InvalidSpec("agent prior must lie in (0,1): " + a.name);
        if (mode == Mode::Realized && !a.realized)
          throw MissingRealizedTypes("missing realized type for " + a.name);
        if (a.realized && *a.realized >= n_grades)
          throw InvalidSpec("realized grade out of range for " + a.name);
      }
    };
    check_side(firms, surplus.firm_grades.size());
    check_side(workers, surplus.worker_grades.size());
    if (mode == Mode::ExAnte && !surplus.two_grade_shape())
      throw InvalidSpec("ex-ante mode requires a two-grade surplus table");
    if (rho < S(-1) || rho > S(1)) throw InvalidSpec("rho outside [-1,1]");
    if (distinct_types) {
      auto check_distinct = [&](const std::vector<Agent<S>>& side,
                                const std::vector<TypeGrade<S>>& grades) {
        std::vector<S> vals;
        for (const auto& a : side)
          if (a.realized) vals.push_back(grades[*a.realized].value);
        std::sort(vals.begin(), vals.end());
        if (std::adjacent_find(vals.begin(), vals.end()) != vals.end())
          throw InvalidSpec("distinct-types flag with tied realized values");
      };
      if (mode != Mode::Realized)
        throw InvalidSpec("distinct-types flag requires realized mode");
      check_distinct(firms, surplus.firm_grades);
      check_distinct(workers, surplus.worker_grades);
    }
  }
};

// Injective partial matching: worker index per firm, kUnmatched otherwise.
struct Matching {
  static constexpr int kUnmatched = -1;
  std::vector<int> worker_of_firm;

  explicit Matching(std::size_t n_firms = 0)
      : worker_of_firm(n_firms, kUnmatched) {}

  bool matched(std::size_t f) const {
    return worker_of_firm[f] != kUnmatched;
  }
  std::optional<std::size_t> firm_of_worker(std::size_t w) const {
    for (std::size_t f = 0; f < worker_of_firm.size(); ++f)
      if (worker_of_firm[f] == static_cast<int>(w)) return f;
    return std::nullopt;
  }
  std::size_t pair_count() const {
    std::size_t n = 0;
    for (int w : worker_of_firm) n += (w != kUnmatched);
    return n;
  }
  bool operator==(const Matching& o) const {
    return worker_of_firm == o.worker_of_firm;
  }
  // Lexicographic order with unmatched sorting last, so welfare ties break
  // toward the identity pairing.
  bool operator<(const Matching& o) const {
    auto key = [](int w) { return w == kUnmatched ? 1 << 20 : w; };
    for (std::size_t f = 0; f < worker_of_firm.size(); ++f) {
      if (key(worker_of_firm[f]) != key(o.worker_of_firm[f]))
        return key(worker_of_firm[f]) < key(o.worker_of_firm[f]);
    }
    return false;
  }
};

// Finite distribution of one pair's match surplus; atoms ascending.
template <class S>
struct PairSurplusDistribution {
  std::vector<std::pair<S, S>> atoms;  // (surplus value, probability)
  S mean = S(0);

  static PairSurplusDistribution from_atoms(
      std::vector<std::pair<S, S>> raw) {
    std::sort(raw.begin(), raw.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    PairSurplusDistribution d;
    for (auto& [v, p] : raw) {
      if (is_negative(p)) throw InvalidSpec("negative atom probability");
      if (is_zero(p)) continue;
      if (!d.atoms.empty() && d.atoms.back().first == v)
        d.atoms.back().second += p;
      else
        d.atoms.emplace_back(v, p);
    }
    S total = S(0);
    for (auto& [v, p] : d.atoms) {
      total += p;
      d.mean += v * p;
    }
    if (!is_zero(S(total - S(1))))
      throw InvalidSpec("atom probabilities must sum to 1");
    return d;
  }

  const S& max_value() const { return atoms.back().first; }
};

template <class S>
PairSurplusDistribution<S> pair_surplus_distribution(const Market<S>& market,
                                                     std::size_t f,
                                                     std::size_t l) {
  if (f >= market.n_firms() || l >= market.n_workers())
    throw InvalidSpec("pair indices out of range");
  if (market.mode == Mode::Realized) {
    const auto& af = market.firms[f];
    const auto& al = market.workers[l];
    if (!af.realized || !al.realized)
      throw MissingRealizedTypes("realized mode requires types for the pair");
    return PairSurplusDistribution<S>::from_atoms(
        {{market.surplus.at(*af.realized, *al.realized), S(1)}});
  }
  auto joint = build_pair_joint(market.firms[f].prior,
                                market.workers[l].prior, market.rho);
  const auto& t = market.surplus;
  return PairSurplusDistribution<S>::from_atoms({{t.at(1, 1), joint.hh},
                                                 {t.at(1, 0), joint.hl},
                                                 {t.at(0, 1), joint.lh},
                                                 {t.at(0, 0), joint.ll}});
}

template <class S>
S expected_pair_surplus(const PairSurplusDistribution<S>& dist) {
  return dist.mean;
}

// Minimum surplus gap between a correctly sorted pairing and its best
// mis-sorted alternative, minimized over all grade quadruples x > x',
// y > y'. Strictly positive for strictly monotone tables.
template <class S>
S test_power_delta(const SurplusTable<S>& table) {
  std::optional<S> delta;
  const std::size_t nf = table.firm_grades.size();
  const std::size_t nw = table.worker_grades.size();
  // minimal marginal value of a one-step grade upgrade, on either side
  for (std::size_t x = 1; x < nf; ++x)
    for (std::size_t y = 0; y < nw; ++y) {
      S gap = table.at(x, y) - table.at(x - 1, y);
      if (!delta || gap < *delta) delta = gap;
    }
  for (std::size_t x = 0; x < nf; ++x)
    for (std::size_t y = 1; y < nw; ++y) {
      S gap = table.at(x, y) - table.at(x, y - 1);
      if (!delta || gap < *delta) delta = gap;
    }
  if (!delta) throw InvalidSpec("test power undefined for single-grade table");
  return *delta;
}

// Mode-appropriate value of a matched pair: expected surplus ex ante,
// realized surplus otherwise.
template <class S>
S pair_value(const Market<S>& market, std::size_t f, std::size_t l) {
  return pair_surplus_distribution(market, f, l).mean;
}

// Eq-style total welfare; unmatched agents contribute zero. When menu_cost
// is given, it is subtracted once per matched pair (the Phi variant).
template <class S>
S expected_welfare(
    const Market<S>& market, const Matching& matching,
    const std::optional<std::type_identity_t<S>>& menu_cost = std::nullopt) {
  S total = S(0);
  for (std::size_t f = 0; f < market.n_firms(); ++f) {
    if (!matching.matched(f)) continue;
    total += pair_value(market, f,
                        static_cast<std::size_t>(matching.worker_of_firm[f]));
    if (menu_cost) total -= *menu_cost;
  }
  return total;
}

inline constexpr std::size_t kDefaultEnumerationCap = 6;

// All injective partial matchings, empty one included, in deterministic
// (lexicographic) order.
template <class S>
std::vector<Matching> enumerate_matchings(
    const Market<S>& market, std::size_t cap = kDefaultEnumerationCap) {
  const std::size_t nf = market.n_firms();
  const std::size_t nw = market.n_workers();
  if (nf > cap || nw > cap)
    throw SizeCapExceeded("market exceeds the enumeration cap");
  std::vector<Matching> out;
  Matching cur(nf);
  std::vector<bool> used(nw, false);
  auto rec = [&](auto&& self, std::size_t f) -> void {
    if (f == nf) {
      out.push_back(cur);
      return;
    }
    cur.worker_of_firm[f] = Matching::kUnmatched;
    self(self, f + 1);
    for (std::size_t w = 0; w < nw; ++w) {
      if (used[w]) continue;
      used[w] = true;
      cur.worker_of_firm[f] = static_cast<int>(w);
      self(self, f + 1);
      cur.worker_of_firm[f] = Matching::kUnmatched;
      used[w] = false;
    }
  };
  rec(rec, 0);
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

template <class S>
std::vector<S> sort_keys(const Market<S>& market,
                         const std::vector<Agent<S>>& side,
                         const std::vector<TypeGrade<S>>& grades) {
  std::vector<S> keys;
  bool realized = true;
  for (const auto& a : side) realized = realized && a.realized.has_value();
  if (realized && market.mode == Mode::Realized) {
    for (const auto& a : side) keys.push_back(grades[*a.realized].value);
    return keys;
  }
  std::vector<S> priors;
  for (const auto& a : side) priors.push_back(a.prior);
  auto sorted = priors;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw NoSortKey("no realized types and priors are not distinct");
  return priors;
}

}  // namespace detail

// Weak positive assortativity: no matched cross pair is mis-sorted.
template <class S>
bool is_positively_assortative(const Market<S>& market,
                               const Matching& matching) {
  auto fk = detail::sort_keys(market, market.firms, market.surplus.firm_grades);
  auto wk =
      detail::sort_keys(market, market.workers, market.surplus.worker_grades);
  for (std::size_t f = 0; f < market.n_firms(); ++f) {
    if (!matching.matched(f)) continue;
    for (std::size_t g = 0; g < market.n_firms(); ++g) {
      if (g == f || !matching.matched(g)) continue;
      std::size_t wf = static_cast<std::size_t>(matching.worker_of_firm[f]);
      std::size_t wg = static_cast<std::size_t>(matching.worker_of_firm[g]);
      if (fk[f] > fk[g] && wk[wf] < wk[wg]) return false;
    }
  }
  return true;
}

}  // namespace icps

#endif  // ICPS_MARKET_HPP

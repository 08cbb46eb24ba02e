#ifndef ICPS_PIECEWISE_HPP
#define ICPS_PIECEWISE_HPP

#include <algorithm>
#include <cassert>
#include <optional>
#include <vector>

#include "icps/numeric.hpp"

namespace icps {

// Continuous piecewise-linear function on a closed interval [front, back],
// stored as breakpoint/value pairs with linear interpolation in between.
// All algebra is exact when S is Rational, which is what makes breakpoint
// root scans give exact blocking thresholds.
template <class S>
class PiecewiseLinear {
 public:
  PiecewiseLinear(std::vector<S> xs, std::vector<S> ys)
      : xs_(std::move(xs)), ys_(std::move(ys)) {
    assert(xs_.size() == ys_.size() && xs_.size() >= 2);
    assert(std::is_sorted(xs_.begin(), xs_.end()));
  }

  template <class Fn>
  static PiecewiseLinear from_breakpoints(std::vector<S> xs, Fn&& f) {
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::vector<S> ys;
    ys.reserve(xs.size());
    for (const S& x : xs) ys.push_back(f(x));
    return PiecewiseLinear(std::move(xs), std::move(ys));
  }

  static PiecewiseLinear constant(const S& lo, const S& hi, const S& c) {
    return PiecewiseLinear({lo, hi}, {c, c});
  }

  const std::vector<S>& breakpoints() const { return xs_; }
  const S& front() const { return xs_.front(); }
  const S& back() const { return xs_.back(); }

  S eval(const S& x) const {
    if (x <= xs_.front()) return ys_.front();
    if (x >= xs_.back()) return ys_.back();
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
    const S& x0 = xs_[i];
    const S& x1 = xs_[i + 1];
    if (x1 == x0) return ys_[i];
    return ys_[i] + (ys_[i + 1] - ys_[i]) * (x - x0) / (x1 - x0);
  }

  PiecewiseLinear scaled(const S& a) const {
    std::vector<S> ys = ys_;
    for (S& y : ys) y = y * a;
    return PiecewiseLinear(xs_, std::move(ys));
  }

  PiecewiseLinear shifted(const S& c) const {
    std::vector<S> ys = ys_;
    for (S& y : ys) y = y + c;
    return PiecewiseLinear(xs_, std::move(ys));
  }

  friend PiecewiseLinear operator+(const PiecewiseLinear& f,
                                   const PiecewiseLinear& g) {
    std::vector<S> xs = merged_grid(f, g);
    std::vector<S> ys;
    ys.reserve(xs.size());
    for (const S& x : xs) ys.push_back(f.eval(x) + g.eval(x));
    return PiecewiseLinear(std::move(xs), std::move(ys));
  }

  // Pointwise max; inserts the exact crossing point on segments where the
  // two branches swap order.
  static PiecewiseLinear max(const PiecewiseLinear& f,
                             const PiecewiseLinear& g) {
    std::vector<S> grid = merged_grid(f, g);
    std::vector<S> xs;
    std::vector<S> ys;
    xs.reserve(grid.size() + 4);
    ys.reserve(grid.size() + 4);
    auto push = [&](const S& x) {
      S fv = f.eval(x);
      S gv = g.eval(x);
      xs.push_back(x);
      ys.push_back(fv > gv ? fv : gv);
    };
    for (std::size_t i = 0; i < grid.size(); ++i) {
      push(grid[i]);
      if (i + 1 == grid.size()) break;
      S d0 = f.eval(grid[i]) - g.eval(grid[i]);
      S d1 = f.eval(grid[i + 1]) - g.eval(grid[i + 1]);
      if ((d0 > S(0) && d1 < S(0)) || (d0 < S(0) && d1 > S(0))) {
        S t = d0 / (d0 - d1);
        push(grid[i] + (grid[i + 1] - grid[i]) * t);
      }
    }
    return PiecewiseLinear(std::move(xs), std::move(ys));
  }

  // Smallest x with f(x) <= 0, for a nonincreasing f. nullopt if f stays
  // positive over the whole domain.
  std::optional<S> first_nonpositive() const {
    if (ys_.front() <= S(0)) return xs_.front();
    for (std::size_t i = 0; i + 1 < xs_.size(); ++i) {
      if (ys_[i + 1] <= S(0)) {
        // root on [xs_[i], xs_[i+1]] with ys_[i] > 0 >= ys_[i+1]
        S t = ys_[i] / (ys_[i] - ys_[i + 1]);
        return xs_[i] + (xs_[i + 1] - xs_[i]) * t;
      }
    }
    return std::nullopt;
  }

 private:
  static std::vector<S> merged_grid(const PiecewiseLinear& f,
                                    const PiecewiseLinear& g) {
    std::vector<S> xs = f.xs_;
    xs.insert(xs.end(), g.xs_.begin(), g.xs_.end());
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
  }

  std::vector<S> xs_;
  std::vector<S> ys_;
};

}  // namespace icps

#endif  // ICPS_PIECEWISE_HPP

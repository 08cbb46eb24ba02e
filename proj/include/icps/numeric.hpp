#ifndef ICPS_NUMERIC_HPP
#define ICPS_NUMERIC_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <gmpxx.h>

namespace icps {

// Exact scalar used in the default (rational) mode.
using Rational = mpq_class;

template <class S>
struct NumTraits;

template <>
struct NumTraits<Rational> {
  static constexpr bool exact = true;
  static Rational tolerance() { return Rational(0); }
  static Rational from_rational(const Rational& q) { return q; }
  // mpq_get_d truncates; dividing the converted parts applies IEEE
  // round-to-nearest, so 1/20 prints as 0.05 and not 0.049999...
  static double to_double(const Rational& q) {
    return q.get_num().get_d() / q.get_den().get_d();
  }
};

template <>
struct NumTraits<double> {
  static constexpr bool exact = false;
  static double tolerance() { return 1e-9; }
  static double from_rational(const Rational& q) {
    return q.get_num().get_d() / q.get_den().get_d();
  }
  static double to_double(double x) { return x; }
};

// Strict comparisons against the mode tolerance. Stability membership is a
// strict-inequality question, so every blocking/IR decision goes through
// these instead of bare operators.
template <class S>
bool is_positive(const S& x) {
  return x > NumTraits<S>::tolerance();
}

template <class S>
bool is_negative(const S& x) {
  return x < -NumTraits<S>::tolerance();
}

template <class S>
bool is_zero(const S& x) {
  return !is_positive(x) && !is_negative(x);
}

template <class S>
S pos_part(const S& x) {
  return x > S(0) ? x : S(0);
}

// Parses "a/b", "a", or a decimal string like "-0.125" into an exact rational.
inline Rational parse_rational(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty rational literal");
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    Rational q;
    if (q.set_str(text, 10) != 0)
      throw std::invalid_argument("bad rational literal: " + text);
    q.canonicalize();
    return q;
  }
  auto dot = text.find('.');
  std::string digits = text;
  std::size_t frac_len = 0;
  if (dot != std::string::npos) {
    frac_len = text.size() - dot - 1;
    digits = text.substr(0, dot) + text.substr(dot + 1);
  }
  if (digits.empty() || digits == "-" || digits == "+")
    throw std::invalid_argument("bad rational literal: " + text);
  mpz_class num;
  if (num.set_str(digits, 10) != 0)
    throw std::invalid_argument("bad rational literal: " + text);
  mpz_class den = 1;
  for (std::size_t i = 0; i < frac_len; ++i) den *= 10;
  Rational q(num, den);
  q.canonicalize();
  return q;
}

// Converts a double to the rational its shortest round-trip decimal denotes,
// so that a config value written as 0.3 becomes exactly 3/10.
inline Rational rational_from_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite number");
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  std::string s(buf, res.ptr);
  auto e = s.find_first_of("eE");
  if (e == std::string::npos) return parse_rational(s);
  Rational base = parse_rational(s.substr(0, e));
  int exp = std::stoi(s.substr(e + 1));
  Rational ten(10);
  for (int i = 0; i < std::abs(exp); ++i) {
    if (exp > 0)
      base *= ten;
    else
      base /= ten;
  }
  return base;
}

// Shortest round-trip decimal; used for CSV and JSON emission so outputs are
// byte-identical across runs.
inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

template <class S>
std::string format_scalar(const S& x) {
  return format_double(NumTraits<S>::to_double(x));
}

inline std::string rational_string(const Rational& q) {
  return q.get_str();
}

}  // namespace icps

#endif  // ICPS_NUMERIC_HPP

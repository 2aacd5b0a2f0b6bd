#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lyapunov/errors.hpp"
#include "lyapunov/exactpadic.hpp"
#include "lyapunov/numerics.hpp"
#include "lyapunov/rmap.hpp"

namespace lyapunov {

/// a + b·i with rational parts; the coefficient field of map specifications.
struct GaussianRational {
  Rational re{0};
  Rational im{0};

  GaussianRational() = default;
  GaussianRational(Rational r, Rational i = Rational(0)) : re(std::move(r)), im(std::move(i)) {}  // NOLINT

  bool is_zero() const { return re == 0 && im == 0; }
  bool is_real() const { return im == 0; }

  friend GaussianRational operator+(const GaussianRational& a, const GaussianRational& b) {
    return {a.re + b.re, a.im + b.im};
  }
  friend GaussianRational operator-(const GaussianRational& a, const GaussianRational& b) {
    return {a.re - b.re, a.im - b.im};
  }
  friend GaussianRational operator*(const GaussianRational& a, const GaussianRational& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend bool operator==(const GaussianRational& a, const GaussianRational& b) { return a.re == b.re && a.im == b.im; }
};

inline Scalar to_scalar(const GaussianRational& q) {
  precision_bits();
  Real re, im;
  mpfr_set_q(re.backend().data(), q.re.backend().data(), MPFR_RNDN);
  mpfr_set_q(im.backend().data(), q.im.backend().data(), MPFR_RNDN);
  return Scalar(std::move(re), std::move(im));
}

/// Univariate polynomial over the Gaussian rationals, ascending powers.
using GPoly = std::vector<GaussianRational>;

namespace detail {

inline void trim(GPoly& p) {
  while (!p.empty() && p.back().is_zero()) p.pop_back();
}

inline GPoly add(const GPoly& a, const GPoly& b, bool subtract = false) {
  GPoly c(std::max(a.size(), b.size()));
  for (std::size_t k = 0; k < a.size(); ++k) c[k] = a[k];
  for (std::size_t k = 0; k < b.size(); ++k) c[k] = subtract ? c[k] - b[k] : c[k] + b[k];
  trim(c);
  return c;
}

inline GPoly mul(const GPoly& a, const GPoly& b) {
  if (a.empty() || b.empty()) return {};
  GPoly c(a.size() + b.size() - 1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].is_zero()) continue;
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] = c[i + j] + a[i] * b[j];
  }
  trim(c);
  return c;
}

}  // namespace detail

/// A rational function num/den as written; no cancellation of common factors
/// is attempted (a shared root is reported later as a degenerate map).
struct MapSpec {
  GPoly numerator;
  GPoly denominator;

  int degree() const {
    return static_cast<int>(std::max(numerator.size(), denominator.size())) - 1;
  }
  bool is_rational() const {
    for (const auto* p : {&numerator, &denominator}) {
      for (const auto& c : *p) {
        if (!c.is_real()) return false;
      }
    }
    return true;
  }
};

namespace detail {

struct RationalFunction {
  GPoly num;
  GPoly den{GaussianRational(Rational(1))};

  static RationalFunction one() { return {GPoly{GaussianRational(Rational(1))}, GPoly{GaussianRational(Rational(1))}}; }
};

inline RationalFunction rf_add(const RationalFunction& a, const RationalFunction& b, bool subtract) {
  if (a.den == b.den) return {add(a.num, b.num, subtract), a.den};
  return {add(mul(a.num, b.den), mul(b.num, a.den), subtract), mul(a.den, b.den)};
}

inline RationalFunction rf_mul(const RationalFunction& a, const RationalFunction& b) {
  return {mul(a.num, b.num), mul(a.den, b.den)};
}

inline RationalFunction rf_div(const RationalFunction& a, const RationalFunction& b) {
  return {mul(a.num, b.den), mul(a.den, b.num)};
}

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  RationalFunction parse() {
    RationalFunction r = expr();
    skip_space();
    if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
    return r;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(pos_, msg); }

  void skip_space() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  char peek() {
    skip_space();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }
  bool starts_factor() {
    const char c = peek();
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == 'z' || c == 'i' || c == '(';
  }

  RationalFunction expr() {
    RationalFunction r = term();
    while (true) {
      const char c = peek();
      if (c != '+' && c != '-') return r;
      ++pos_;
      r = rf_add(r, term(), c == '-');
    }
  }

  RationalFunction term() {
    RationalFunction r = unary();
    while (true) {
      const char c = peek();
      if (c == '*' || c == '/') {
        ++pos_;
        RationalFunction rhs = unary();
        r = c == '*' ? rf_mul(r, rhs) : rf_div(r, rhs);
      } else if (starts_factor()) {
        r = rf_mul(r, power());  // implicit multiplication, e.g. 2z or 3(z+1)
      } else {
        return r;
      }
    }
  }

  RationalFunction unary() {
    const char c = peek();
    if (c == '-' || c == '+') {
      ++pos_;
      RationalFunction r = unary();
      if (c == '-') r.num = add({}, r.num, true);
      return r;
    }
    return power();
  }

  RationalFunction power() {
    RationalFunction base = primary();
    if (peek() != '^') return base;
    ++pos_;
    const long e = exponent();
    RationalFunction result = RationalFunction::one();
    RationalFunction factor = base;
    if (e < 0) factor = rf_div(RationalFunction::one(), base);
    for (long k = 0; k < (e < 0 ? -e : e); ++k) result = rf_mul(result, factor);
    return result;
  }

  long exponent() {
    bool negative = false;
    bool parenthesized = false;
    if (peek() == '(') {
      parenthesized = true;
      ++pos_;
    }
    if (peek() == '-') {
      negative = true;
      ++pos_;
    }
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ == start) fail("expected an integer exponent");
    if (pos_ - start > 6) fail("exponent too large");
    const long e = std::stol(std::string(s_.substr(start, pos_ - start)));
    if (parenthesized) {
      if (peek() != ')') fail("expected ')'");
      ++pos_;
    }
    return negative ? -e : e;
  }

  RationalFunction primary() {
    const char c = peek();
    if (c == '(') {
      ++pos_;
      RationalFunction r = expr();
      if (peek() != ')') fail("expected ')'");
      ++pos_;
      return r;
    }
    if (c == 'z') {
      ++pos_;
      return {GPoly{GaussianRational(), GaussianRational(Rational(1))}, GPoly{GaussianRational(Rational(1))}};
    }
    if (c == 'i') {
      ++pos_;
      return {GPoly{GaussianRational(Rational(0), Rational(1))}, GPoly{GaussianRational(Rational(1))}};
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (c == '\0') fail("unexpected end of input");
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  /// Decimal literal, kept exact: "0.25" is 1/4.
  RationalFunction number() {
    const std::size_t start = pos_;
    Integer digits = 0;
    Integer scale = 1;
    bool seen_point = false;
    bool any_digit = false;
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        digits = digits * 10 + (c - '0');
        if (seen_point) scale *= 10;
        any_digit = true;
      } else if (c == '.' && !seen_point) {
        seen_point = true;
      } else {
        break;
      }
      ++pos_;
    }
    if (!any_digit) {
      pos_ = start;
      fail("malformed number");
    }
    GPoly p;
    p.push_back(GaussianRational(Rational(digits, scale)));
    trim(p);
    return {p, GPoly{GaussianRational(Rational(1))}};
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses a rational function of z: + - * / ^ (integer exponents),
/// parentheses, implicit multiplication, decimals and the imaginary unit i.
inline MapSpec parse_map_spec(std::string_view text) {
  detail::RationalFunction r = detail::Parser(text).parse();
  detail::trim(r.num);
  detail::trim(r.den);
  if (r.den.empty()) throw Error(ErrorCode::DegenerateMap, "denominator vanishes identically");
  if (r.den.size() == 1 && !(r.den[0] == GaussianRational{Rational(1), Rational(0)})) {
    // A constant denominator is folded into the numerator, so polynomials
    // keep the monic-denominator lift (p(z), 1).
    const GaussianRational& c = r.den[0];
    const Rational n2 = c.re * c.re + c.im * c.im;
    const GaussianRational inv{c.re / n2, -c.im / n2};
    for (auto& a : r.num) a = a * inv;
    r.den = {GaussianRational{Rational(1), Rational(0)}};
  }
  MapSpec spec{std::move(r.num), std::move(r.den)};
  if (spec.numerator.empty()) throw Error(ErrorCode::DegreeError, "constant map");
  if (spec.degree() < 2) throw Error(ErrorCode::DegreeError, "degree " + std::to_string(spec.degree()) + " < 2");
  return spec;
}

/// The homogeneous lift (F0, F1) = (num, den) at working precision.
inline HomogeneousLift to_lift(const MapSpec& spec) {
  std::vector<Scalar> num, den;
  for (const auto& c : spec.numerator) num.push_back(to_scalar(c));
  for (const auto& c : spec.denominator) den.push_back(to_scalar(c));
  return make_lift(std::move(num), std::move(den));
}

/// The exact integer model; rejects maps with non-real coefficients.
inline ExactRationalMap to_exact_map(const MapSpec& spec) {
  if (!spec.is_rational()) {
    throw Error(ErrorCode::NonRationalMap, "the exact path needs rational coefficients");
  }
  std::vector<Rational> num, den;
  for (const auto& c : spec.numerator) num.push_back(c.re);
  for (const auto& c : spec.denominator) den.push_back(c.re);
  return make_exact_map(num, den);
}

}  // namespace lyapunov

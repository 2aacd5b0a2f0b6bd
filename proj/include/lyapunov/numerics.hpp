#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <utility>

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include "lyapunov/errors.hpp"

namespace lyapunov {

using Real = boost::multiprecision::mpfr_float;
using Integer = boost::multiprecision::mpz_int;
using Rational = boost::multiprecision::mpq_rational;

inline constexpr unsigned kDefaultPrecisionBits = 128;
inline constexpr unsigned kMinPrecisionBits = 53;

namespace detail {
inline unsigned& precision_bits_slot() {
  static unsigned bits = 0;
  return bits;
}
}  // namespace detail

/// Sets the working precision for every Real created afterwards.
inline void set_precision_bits(unsigned bits) {
  if (bits < kMinPrecisionBits) {
    throw Error(ErrorCode::InvalidArgument,
                "precision must be at least 53 bits, got " + std::to_string(bits));
  }
  detail::precision_bits_slot() = bits;
  const auto digits10 = static_cast<unsigned>(std::ceil(bits * 0.30102999566398120));
  Real::default_precision(digits10);
}

inline unsigned precision_bits() {
  if (detail::precision_bits_slot() == 0) set_precision_bits(kDefaultPrecisionBits);
  return detail::precision_bits_slot();
}

/// Restores the previous precision on scope exit.
class PrecisionScope {
 public:
  explicit PrecisionScope(unsigned bits) : saved_(precision_bits()) { set_precision_bits(bits); }
  ~PrecisionScope() { set_precision_bits(saved_); }
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  unsigned saved_;
};

/// 2^e at working precision.
inline Real pow2(long e) {
  precision_bits();
  return boost::multiprecision::ldexp(Real(1), static_cast<int>(e));
}

/// 2^(-precision·num/den), the family of precision-relative tolerances.
inline Real precision_tolerance(unsigned num, unsigned den) {
  return pow2(-static_cast<long>(precision_bits() * num / den));
}

inline Real log_of(const Real& x) { return boost::multiprecision::log(x); }

inline Real real_infinity() { return std::numeric_limits<Real>::infinity(); }

inline Real pi_value() {
  precision_bits();
  return boost::multiprecision::acos(Real(-1));
}

inline double to_double(const Real& x) { return x.convert_to<double>(); }

template <class T>
struct BasicComplex {
  T re{0};
  T im{0};

  BasicComplex() = default;
  BasicComplex(T r) : re(std::move(r)), im(0) {}  // NOLINT(google-explicit-constructor)
  BasicComplex(T r, T i) : re(std::move(r)), im(std::move(i)) {}
  BasicComplex(int r) : re(r), im(0) {}  // NOLINT(google-explicit-constructor)
  BasicComplex(double r) : re(r), im(0) {}  // NOLINT(google-explicit-constructor)

  BasicComplex& operator+=(const BasicComplex& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  BasicComplex& operator-=(const BasicComplex& o) {
    re -= o.re;
    im -= o.im;
    return *this;
  }
  BasicComplex& operator*=(const BasicComplex& o) {
    T r = re * o.re - im * o.im;
    im = re * o.im + im * o.re;
    re = std::move(r);
    return *this;
  }
  BasicComplex& operator*=(const T& s) {
    re *= s;
    im *= s;
    return *this;
  }
  BasicComplex& operator/=(const BasicComplex& o) {
    T den = o.re * o.re + o.im * o.im;
    T r = (re * o.re + im * o.im) / den;
    im = (im * o.re - re * o.im) / den;
    re = std::move(r);
    return *this;
  }
  BasicComplex& operator/=(const T& s) {
    re /= s;
    im /= s;
    return *this;
  }

  friend BasicComplex operator+(BasicComplex a, const BasicComplex& b) { return a += b; }
  friend BasicComplex operator-(BasicComplex a, const BasicComplex& b) { return a -= b; }
  friend BasicComplex operator*(BasicComplex a, const BasicComplex& b) { return a *= b; }
  friend BasicComplex operator*(BasicComplex a, const T& s) { return a *= s; }
  friend BasicComplex operator*(const T& s, BasicComplex a) { return a *= s; }
  friend BasicComplex operator/(BasicComplex a, const BasicComplex& b) { return a /= b; }
  friend BasicComplex operator/(BasicComplex a, const T& s) { return a /= s; }
  friend BasicComplex operator-(const BasicComplex& a) { return BasicComplex(-a.re, -a.im); }
  friend bool operator==(const BasicComplex& a, const BasicComplex& b) {
    return a.re == b.re && a.im == b.im;
  }

  bool is_zero() const { return re == 0 && im == 0; }
};

using Scalar = BasicComplex<Real>;

template <class T>
T abs2(const BasicComplex<T>& z) {
  return z.re * z.re + z.im * z.im;
}

inline Real abs(const Scalar& z) { return boost::multiprecision::sqrt(abs2(z)); }

inline Real log_abs(const Scalar& z) {
  if (z.is_zero()) return -real_infinity();
  return log_of(abs2(z)) / 2;
}

template <class T>
BasicComplex<T> conj(const BasicComplex<T>& z) {
  return BasicComplex<T>(z.re, -z.im);
}

/// Principal square root.
inline Scalar sqrt(const Scalar& z) {
  if (z.is_zero()) return Scalar();
  Real r = abs(z);
  Real re = boost::multiprecision::sqrt((r + z.re) / 2);
  Real im = boost::multiprecision::sqrt((r - z.re) / 2);
  if (z.im < 0) im = -im;
  return Scalar(std::move(re), std::move(im));
}

inline Scalar polar(const Real& radius, const Real& angle) {
  return Scalar(radius * boost::multiprecision::cos(angle), radius * boost::multiprecision::sin(angle));
}

inline std::ostream& operator<<(std::ostream& os, const Scalar& z) {
  return os << '(' << z.re << (z.im < 0 ? " - " : " + ") << boost::multiprecision::abs(z.im) << "i)";
}

/// A vector in K^2, the homogeneous coordinates of a point of P^1.
using Pair = std::array<Scalar, 2>;

inline Scalar wedge(const Pair& p, const Pair& q) { return p[0] * q[1] - p[1] * q[0]; }

inline Real norm2(const Pair& p) { return abs2(p[0]) + abs2(p[1]); }

inline Real norm(const Pair& p) { return boost::multiprecision::sqrt(norm2(p)); }

/// log of the Euclidean norm sqrt(|p0|^2 + |p1|^2).
inline Real log_norm(const Scalar& p0, const Scalar& p1) {
  if (p0.is_zero() && p1.is_zero()) {
    throw Error(ErrorCode::InvalidArgument, "log_norm of the zero vector");
  }
  return log_of(abs2(p0) + abs2(p1)) / 2;
}

inline Pair normalized(const Pair& p) {
  Real n = norm(p);
  return {p[0] / n, p[1] / n};
}

/// A point of the projective line: an affine value or infinity.
class ProjectivePoint {
 public:
  ProjectivePoint() = default;

  static ProjectivePoint affine(Scalar value) { return ProjectivePoint(std::move(value), false); }
  static ProjectivePoint infinity() { return ProjectivePoint(Scalar(), true); }

  /// Projection of a nonzero lift; (1:0) maps to infinity.
  static ProjectivePoint from_pair(const Pair& p) {
    if (p[1].is_zero()) {
      if (p[0].is_zero()) throw Error(ErrorCode::InvalidArgument, "projection of the zero vector");
      return infinity();
    }
    return affine(p[0] / p[1]);
  }

  bool is_infinity() const { return infinity_; }
  const Scalar& value() const { return value_; }

  /// (z, 1) for affine z, (1, 0) for infinity.
  Pair lift() const {
    if (infinity_) return {Scalar(1), Scalar(0)};
    return {value_, Scalar(1)};
  }

  /// Point of the 1/z chart: 0 at infinity, 1/z elsewhere (infinity at 0).
  ProjectivePoint inverted() const {
    if (infinity_) return affine(Scalar(0));
    if (value_.is_zero()) return infinity();
    return affine(Scalar(1) / value_);
  }

 private:
  ProjectivePoint(Scalar v, bool inf) : value_(std::move(v)), infinity_(inf) {}

  Scalar value_;
  bool infinity_ = false;
};

inline std::ostream& operator<<(std::ostream& os, const ProjectivePoint& z) {
  if (z.is_infinity()) return os << "inf";
  return os << z.value();
}

/// Normalized chordal distance |p ∧ q| / (|p| |q|), in [0, 1].
inline Real chordal_distance(const ProjectivePoint& z, const ProjectivePoint& w) {
  const Pair p = z.lift();
  const Pair q = w.lift();
  return abs(wedge(p, q)) / boost::multiprecision::sqrt(norm2(p) * norm2(q));
}

inline Real chordal_distance(const Pair& p, const Pair& q) {
  return abs(wedge(p, q)) / boost::multiprecision::sqrt(norm2(p) * norm2(q));
}

// p-adic absolute values on Q.

inline bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t k = 2; k * k <= n; ++k) {
    if (n % k == 0) return false;
  }
  return true;
}

class PAdicContext {
 public:
  explicit PAdicContext(std::uint64_t p) : p_(p) {
    if (!is_prime(p)) throw Error(ErrorCode::InvalidArgument, std::to_string(p) + " is not prime");
  }
  std::uint64_t prime() const { return p_; }

 private:
  std::uint64_t p_;
};

/// v_p of a nonzero integer.
inline long padic_valuation(const Integer& n, const PAdicContext& ctx) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "valuation of zero");
  Integer rest;
  Integer prime(ctx.prime());
  return static_cast<long>(mpz_remove(rest.backend().data(), n.backend().data(), prime.backend().data()));
}

/// v_p(q) = v_p(numerator) - v_p(denominator).
inline long padic_valuation(const Rational& q, const PAdicContext& ctx) {
  if (q == 0) throw Error(ErrorCode::InvalidArgument, "valuation of zero");
  return padic_valuation(Integer(boost::multiprecision::numerator(q)), ctx) -
         padic_valuation(Integer(boost::multiprecision::denominator(q)), ctx);
}

/// log |q|_p = -v_p(q) log p.
inline Real padic_log_abs(const Rational& q, const PAdicContext& ctx) {
  const long v = padic_valuation(q, ctx);
  return -Real(v) * log_of(Real(ctx.prime()));
}

/// log |n| for a nonzero big integer, without overflow.
inline Real log_abs(const Integer& n) {
  precision_bits();
  Real r;
  // Direct MPFR conversion; the generic mpz -> mpfr assignment rounds poorly.
  mpfr_set_z(r.backend().data(), n.backend().data(), MPFR_RNDN);
  return log_of(boost::multiprecision::abs(r));
}

inline Real log_abs(const Rational& q) {
  return log_abs(Integer(boost::multiprecision::numerator(q))) -
         log_abs(Integer(boost::multiprecision::denominator(q)));
}

}  // namespace lyapunov

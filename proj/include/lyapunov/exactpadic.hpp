#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "lyapunov/errors.hpp"
#include "lyapunov/numerics.hpp"
#include "lyapunov/periodic.hpp"

namespace lyapunov {

/// Dense integer polynomial, coefficients by ascending power, no trailing zeros.
class IntPoly {
 public:
  IntPoly() = default;
  explicit IntPoly(std::vector<Integer> c) : c_(std::move(c)) { trim(); }
  static IntPoly constant(const Integer& v) { return IntPoly(std::vector<Integer>{v}); }
  static IntPoly monomial(const Integer& v, int power) {
    std::vector<Integer> c(power + 1, Integer(0));
    c[power] = v;
    return IntPoly(std::move(c));
  }

  bool is_zero() const { return c_.empty(); }
  /// Degree, with -1 for the zero polynomial.
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const std::vector<Integer>& coefficients() const { return c_; }
  Integer coefficient(int k) const { return k >= 0 && k < static_cast<int>(c_.size()) ? c_[k] : Integer(0); }
  const Integer& leading() const { return c_.back(); }

  friend bool operator==(const IntPoly& a, const IntPoly& b) { return a.c_ == b.c_; }

  friend IntPoly operator+(const IntPoly& a, const IntPoly& b) {
    std::vector<Integer> c(std::max(a.c_.size(), b.c_.size()), Integer(0));
    for (std::size_t k = 0; k < a.c_.size(); ++k) c[k] += a.c_[k];
    for (std::size_t k = 0; k < b.c_.size(); ++k) c[k] += b.c_[k];
    return IntPoly(std::move(c));
  }
  friend IntPoly operator-(const IntPoly& a, const IntPoly& b) {
    std::vector<Integer> c(std::max(a.c_.size(), b.c_.size()), Integer(0));
    for (std::size_t k = 0; k < a.c_.size(); ++k) c[k] += a.c_[k];
    for (std::size_t k = 0; k < b.c_.size(); ++k) c[k] -= b.c_[k];
    return IntPoly(std::move(c));
  }
  friend IntPoly operator*(const IntPoly& a, const IntPoly& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<Integer> c(a.c_.size() + b.c_.size() - 1, Integer(0));
    for (std::size_t i = 0; i < a.c_.size(); ++i) {
      if (a.c_[i] == 0) continue;
      for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
    }
    return IntPoly(std::move(c));
  }
  friend IntPoly operator*(const Integer& s, const IntPoly& a) {
    std::vector<Integer> c = a.c_;
    for (auto& x : c) x *= s;
    return IntPoly(std::move(c));
  }

  /// Divides every coefficient by s, which must divide them exactly.
  IntPoly divided_exactly(const Integer& s) const {
    std::vector<Integer> c = c_;
    for (auto& x : c) {
      mpz_divexact(x.backend().data(), x.backend().data(), s.backend().data());
    }
    return IntPoly(std::move(c));
  }

  IntPoly derivative() const {
    if (c_.size() <= 1) return {};
    std::vector<Integer> c(c_.size() - 1);
    for (std::size_t k = 1; k < c_.size(); ++k) c[k - 1] = c_[k] * static_cast<long>(k);
    return IntPoly(std::move(c));
  }

  /// z · p
  IntPoly shifted() const {
    if (is_zero()) return {};
    std::vector<Integer> c(c_.size() + 1, Integer(0));
    std::copy(c_.begin(), c_.end(), c.begin() + 1);
    return IntPoly(std::move(c));
  }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == 0) c_.pop_back();
  }
  std::vector<Integer> c_;
};

/// Non-negative gcd of the coefficients (0 for the zero polynomial).
inline Integer content(const IntPoly& p) {
  Integer g = 0;
  for (const auto& c : p.coefficients()) {
    g = boost::multiprecision::gcd(g, c);
    if (g == 1) break;
  }
  return g;
}

/// p / content(p), with positive leading coefficient.
inline IntPoly primitive_part(const IntPoly& p) {
  if (p.is_zero()) return p;
  Integer c = content(p);
  if (p.leading() < 0) c = -c;
  return p.divided_exactly(c);
}

/// R with lc(B)^(deg A − deg B + 1)·A = Q·B + R and deg R < deg B.
inline IntPoly pseudo_remainder(const IntPoly& A, const IntPoly& B) {
  if (B.is_zero()) throw Error(ErrorCode::InvalidArgument, "pseudo-division by zero");
  std::vector<Integer> r = A.coefficients();
  const int db = B.degree();
  const Integer& lb = B.leading();
  int dr = A.degree();
  int e = A.degree() - db + 1;
  if (e <= 0) return A;
  while (dr >= db && !r.empty()) {
    const Integer lr = r[dr];
    for (auto& x : r) x *= lb;
    for (int k = 0; k <= db; ++k) r[dr - db + k] -= lr * B.coefficients()[k];
    --e;
    while (!r.empty() && r.back() == 0) r.pop_back();
    dr = static_cast<int>(r.size()) - 1;
  }
  IntPoly R(std::move(r));
  if (e > 0) R = boost::multiprecision::pow(lb, static_cast<unsigned>(e)) * R;
  return R;
}

/// Exact quotient A / B over Z (B must divide A).
inline IntPoly exact_quotient(const IntPoly& A, const IntPoly& B) {
  if (B.is_zero()) throw Error(ErrorCode::InvalidArgument, "division by zero polynomial");
  std::vector<Integer> r = A.coefficients();
  const int db = B.degree();
  const int dq = A.degree() - db;
  if (dq < 0) {
    if (A.is_zero()) return {};
    throw Error(ErrorCode::InternalInconsistency, "inexact polynomial division");
  }
  std::vector<Integer> q(dq + 1, Integer(0));
  for (int k = dq; k >= 0; --k) {
    Integer rem;
    mpz_tdiv_qr(q[k].backend().data(), rem.backend().data(), r[k + db].backend().data(),
                B.leading().backend().data());
    if (rem != 0) throw Error(ErrorCode::InternalInconsistency, "inexact polynomial division");
    if (q[k] == 0) continue;
    for (int j = 0; j <= db; ++j) r[k + j] -= q[k] * B.coefficients()[j];
  }
  for (const auto& x : r) {
    if (x != 0) throw Error(ErrorCode::InternalInconsistency, "inexact polynomial division");
  }
  return IntPoly(std::move(q));
}

/// Primitive gcd by primitive pseudo-remainder sequences: positive leading
/// coefficient, times the gcd of the contents.
inline IntPoly poly_gcd(IntPoly A, IntPoly B) {
  if (A.is_zero()) return B.is_zero() ? B : content(B) * primitive_part(B);
  if (B.is_zero()) return content(A) * primitive_part(A);
  const Integer c = boost::multiprecision::gcd(content(A), content(B));
  A = primitive_part(A);
  B = primitive_part(B);
  if (A.degree() < B.degree()) std::swap(A, B);
  while (true) {
    IntPoly R = pseudo_remainder(A, B);
    if (R.is_zero()) return c * B;
    if (R.degree() == 0) return IntPoly::constant(c);
    A = std::move(B);
    B = primitive_part(R);
  }
}

/// Res(A, B) by the subresultant algorithm (Cohen, Algorithm 3.3.7).
inline Integer resultant(IntPoly A, IntPoly B) {
  if (A.is_zero() || B.is_zero()) return 0;
  if (B.degree() == 0) return boost::multiprecision::pow(B.leading(), static_cast<unsigned>(A.degree()));
  if (A.degree() == 0) return boost::multiprecision::pow(A.leading(), static_cast<unsigned>(B.degree()));

  Integer a = content(A), b = content(B);
  A = A.divided_exactly(a);
  B = B.divided_exactly(b);
  Integer g = 1, h = 1, s = 1;
  Integer t = boost::multiprecision::pow(a, static_cast<unsigned>(B.degree())) *
              boost::multiprecision::pow(b, static_cast<unsigned>(A.degree()));
  if (A.degree() < B.degree()) {
    std::swap(A, B);
    if (A.degree() % 2 == 1 && B.degree() % 2 == 1) s = -1;
  }
  while (true) {
    const int delta = A.degree() - B.degree();
    if (A.degree() % 2 == 1 && B.degree() % 2 == 1) s = -s;
    IntPoly R = pseudo_remainder(A, B);
    A = std::move(B);
    const Integer divisor = g * boost::multiprecision::pow(h, static_cast<unsigned>(delta));
    if (R.is_zero()) return 0;
    B = R.divided_exactly(divisor);
    g = A.leading();
    // h <- h^(1 - delta) g^delta
    if (delta == 0) {
      // h unchanged
    } else {
      Integer num = boost::multiprecision::pow(g, static_cast<unsigned>(delta));
      Integer den = boost::multiprecision::pow(h, static_cast<unsigned>(delta - 1));
      mpz_divexact(h.backend().data(), num.backend().data(), den.backend().data());
    }
    if (B.degree() > 0) continue;
    Integer num = boost::multiprecision::pow(B.leading(), static_cast<unsigned>(A.degree()));
    Integer den = boost::multiprecision::pow(h, static_cast<unsigned>(A.degree() - 1));
    Integer hh;
    mpz_divexact(hh.backend().data(), num.backend().data(), den.backend().data());
    return s * t * hh;
  }
}

/// Reference resultant: Sylvester determinant by fraction-free (Bareiss) elimination.
inline Integer sylvester_resultant(const IntPoly& A, const IntPoly& B) {
  const int m = A.degree(), n = B.degree();
  if (m < 0 || n < 0) return 0;
  if (m == 0 && n == 0) return 1;
  const int size = m + n;
  std::vector<std::vector<Integer>> M(size, std::vector<Integer>(size, Integer(0)));
  for (int r = 0; r < n; ++r) {
    for (int k = 0; k <= m; ++k) M[r][r + k] = A.coefficient(m - k);
  }
  for (int r = 0; r < m; ++r) {
    for (int k = 0; k <= n; ++k) M[n + r][r + k] = B.coefficient(n - k);
  }
  Integer prev = 1;
  int sign = 1;
  for (int k = 0; k + 1 < size; ++k) {
    if (M[k][k] == 0) {
      int swap_row = -1;
      for (int r = k + 1; r < size; ++r) {
        if (M[r][k] != 0) {
          swap_row = r;
          break;
        }
      }
      if (swap_row < 0) return 0;
      std::swap(M[k], M[swap_row]);
      sign = -sign;
    }
    for (int i = k + 1; i < size; ++i) {
      for (int j = k + 1; j < size; ++j) {
        Integer v = M[i][j] * M[k][k] - M[i][k] * M[k][j];
        mpz_divexact(M[i][j].backend().data(), v.backend().data(), prev.backend().data());
      }
      M[i][k] = 0;
    }
    prev = M[k][k];
  }
  return sign * M[size - 1][size - 1];
}

// ---------------------------------------------------------------------------

/// f = numerator / denominator over Z, coprime, jointly content 1, with a
/// positive leading coefficient on the denominator.
struct ExactRationalMap {
  IntPoly numerator;
  IntPoly denominator;

  int degree() const { return std::max(numerator.degree(), denominator.degree()); }
};

inline std::pair<IntPoly, IntPoly> reduce_pair(IntPoly a, IntPoly b) {
  const Integer g = boost::multiprecision::gcd(content(a), content(b));
  if (g > 1) {
    a = a.divided_exactly(g);
    b = b.divided_exactly(g);
  }
  return {std::move(a), std::move(b)};
}

/// Builds an exact map from rational coefficients (by ascending power).
inline ExactRationalMap make_exact_map(const std::vector<Rational>& numerator, const std::vector<Rational>& denominator) {
  Integer lcm = 1;
  for (const auto* v : {&numerator, &denominator}) {
    for (const auto& q : *v) {
      const Integer den(boost::multiprecision::denominator(q));
      lcm = boost::multiprecision::lcm(lcm, den);
    }
  }
  auto scale = [&](const std::vector<Rational>& v) {
    std::vector<Integer> c;
    for (const auto& q : v) {
      const Rational s = q * Rational(lcm);
      c.push_back(Integer(boost::multiprecision::numerator(s)));
    }
    return IntPoly(std::move(c));
  };
  IntPoly num = scale(numerator);
  IntPoly den = scale(denominator);
  if (den.is_zero()) throw Error(ErrorCode::DegenerateMap, "denominator vanishes identically");
  if (num.is_zero()) throw Error(ErrorCode::DegreeError, "constant map");
  const int d = std::max(num.degree(), den.degree());
  if (d < 2) throw Error(ErrorCode::DegreeError, "degree " + std::to_string(d) + " < 2");
  auto [a, b] = reduce_pair(std::move(num), std::move(den));
  if (b.leading() < 0) {
    a = Integer(-1) * a;
    b = Integer(-1) * b;
  }
  if (poly_gcd(a, b).degree() > 0) throw Error(ErrorCode::DegenerateMap, "numerator and denominator share a root");
  return {std::move(a), std::move(b)};
}

inline constexpr int kDefaultExactDegreeCap = 128;

/// f^n by homogeneous composition, content-reduced at every step.
inline ExactRationalMap compose_exact(const ExactRationalMap& f, int n, int degree_cap = kDefaultExactDegreeCap) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "compose_exact needs n >= 1");
  const int d = f.degree();
  if (power_count(d, n) > degree_cap) {
    throw Error(ErrorCode::DegreeCapExceeded,
                "d^n = " + std::to_string(power_count(d, n)) + " exceeds the exact-degree cap " +
                    std::to_string(degree_cap));
  }
  IntPoly A = f.numerator, B = f.denominator;
  for (int step = 1; step < n; ++step) {
    // F_i(A, B) = sum_k f_i[k] A^k B^(d-k)
    std::vector<IntPoly> pa(d + 1), pb(d + 1);
    pa[0] = IntPoly::constant(1);
    pb[0] = IntPoly::constant(1);
    for (int k = 1; k <= d; ++k) {
      pa[k] = pa[k - 1] * A;
      pb[k] = pb[k - 1] * B;
    }
    IntPoly nA, nB;
    for (int k = 0; k <= d; ++k) {
      const Integer a = f.numerator.coefficient(k);
      const Integer b = f.denominator.coefficient(k);
      if (a == 0 && b == 0) continue;
      const IntPoly term = pa[k] * pb[d - k];
      if (a != 0) nA = nA + a * term;
      if (b != 0) nB = nB + b * term;
    }
    std::tie(A, B) = reduce_pair(std::move(nA), std::move(nB));
  }
  return {std::move(A), std::move(B)};
}

/// P_n = A_n − z·B_n, whose roots are the affine fixed points of f^n.
inline IntPoly fixed_numerator(const ExactRationalMap& fn) { return fn.numerator - fn.denominator.shifted(); }

inline IntPoly fixed_numerator(const ExactRationalMap& f, int n, int degree_cap = kDefaultExactDegreeCap) {
  return fixed_numerator(compose_exact(f, n, degree_cap));
}

/// (f^n)' = N / D in lowest terms.
inline std::pair<IntPoly, IntPoly> exact_derivative(const ExactRationalMap& fn) {
  const IntPoly& A = fn.numerator;
  const IntPoly& B = fn.denominator;
  IntPoly N = A.derivative() * B - A * B.derivative();
  IntPoly D = B * B;
  if (N.is_zero()) return {N, IntPoly::constant(1)};
  const IntPoly g = poly_gcd(N, D);
  if (g.degree() > 0) {
    N = exact_quotient(N, g);
    D = exact_quotient(D, g);
  }
  return {std::move(N), std::move(D)};
}

struct DeflatedFixedPoints {
  IntPoly polynomial;
  /// Affine superattracting fixed points removed (each a simple root of P_n).
  int deflated_count = 0;
};

inline DeflatedFixedPoints deflate_superattracting(const IntPoly& P, const IntPoly& derivative_numerator) {
  const IntPoly g = poly_gcd(P, derivative_numerator);
  if (g.degree() <= 0) return {P, 0};
  return {exact_quotient(P, g), g.degree()};
}

inline DeflatedFixedPoints deflate_superattracting(const ExactRationalMap& f, int n,
                                                   int degree_cap = kDefaultExactDegreeCap) {
  const ExactRationalMap fn = compose_exact(f, n, degree_cap);
  return deflate_superattracting(fixed_numerator(fn), exact_derivative(fn).first);
}

struct ExactMultiplierProduct {
  int n = 0;
  /// ∏ λ over Fix(f^n) with λ ≠ 0, with multiplicity, the point at infinity included.
  Rational product;
  /// Superattracting fixed points removed, the point at infinity included.
  int deflated_count = 0;
};

inline ExactMultiplierProduct multiplier_product(const ExactRationalMap& f, int n,
                                                 int degree_cap = kDefaultExactDegreeCap) {
  const ExactRationalMap fn = compose_exact(f, n, degree_cap);
  const int D = static_cast<int>(power_count(f.degree(), n));
  const IntPoly P = fixed_numerator(fn);
  const auto [N, Den] = exact_derivative(fn);
  const DeflatedFixedPoints defl = deflate_superattracting(P, N);
  const IntPoly& Pt = defl.polynomial;

  ExactMultiplierProduct out;
  out.n = n;
  out.deflated_count = defl.deflated_count;
  // ∏_{P̃(w)=0} Q(w) = Res(P̃, Q) / lc(P̃)^deg Q.
  auto root_product = [&](const IntPoly& Q) {
    Rational r(resultant(Pt, Q));
    r /= Rational(boost::multiprecision::pow(Pt.leading(), static_cast<unsigned>(std::max(Q.degree(), 0))));
    return r;
  };
  Rational product(1);
  if (Pt.degree() > 0) {
    const Rational num = root_product(N);
    const Rational den = root_product(Den);
    if (num == 0 || den == 0) {
      throw Error(ErrorCode::InternalInconsistency, "vanishing multiplier resultant after deflation");
    }
    product = num / den;
  }

  // Infinity is fixed iff deg B_n < d^n; its multiplicity in the fixed-point
  // form is (d^n + 1) − deg P_n.
  if (fn.denominator.degree() < D) {
    const int m_inf = D + 1 - P.degree();
    const Integer b = fn.denominator.coefficient(D - 1);
    if (b == 0) {
      out.deflated_count += m_inf;
    } else if (m_inf == 1) {
      product *= Rational(b) / Rational(fn.numerator.coefficient(D));
    }
    // m_inf >= 2 means multiplier 1 at infinity.
  }
  out.product = product;
  return out;
}

/// ∏ over exact-period-n points: ∏_{m|n} P_m^{μ(n/m)·n/m}, from the full products.
inline Rational exact_period_product(const std::vector<ExactMultiplierProduct>& full_by_level, int n) {
  Rational out(1);
  for (int m : divisors(n)) {
    const int mu = mobius(n / m);
    if (mu == 0) continue;
    const Rational& pm = full_by_level.at(m - 1).product;
    Rational power = 1;
    for (int k = 0; k < n / m; ++k) power *= pm;
    if (mu > 0) {
      out *= power;
    } else {
      out /= power;
    }
  }
  return out;
}

struct PAdicRow {
  int n = 0;
  std::uint64_t p = 0;
  /// −v_p(product)
  long valuation_numer = 0;
  /// n·d^n
  long denom = 0;
  /// valuation_numer·log p / denom
  Real estimate;
  /// The estimate as an exact rational multiple of log p.
  Rational log_p_coefficient;
};

inline PAdicRow padic_estimator(const ExactMultiplierProduct& product, int d, const PAdicContext& ctx) {
  PAdicRow row;
  row.n = product.n;
  row.p = ctx.prime();
  row.valuation_numer = -padic_valuation(product.product, ctx);
  row.denom = static_cast<long>(product.n * power_count(d, product.n));
  row.log_p_coefficient = Rational(row.valuation_numer) / Rational(row.denom);
  row.estimate = Real(row.valuation_numer) * log_of(Real(ctx.prime())) / Real(row.denom);
  return row;
}

inline PAdicRow padic_estimator(const ExactRationalMap& f, int n, const PAdicContext& ctx,
                                int degree_cap = kDefaultExactDegreeCap) {
  return padic_estimator(multiplier_product(f, n, degree_cap), f.degree(), ctx);
}

/// (1/(n d^n)) log|product| in the usual absolute value.
inline Real archimedean_crosscheck(const ExactMultiplierProduct& product, int d) {
  return log_abs(product.product) / (Real(product.n) * Real(power_count(d, product.n)));
}

inline Real archimedean_crosscheck(const ExactRationalMap& f, int n, int degree_cap = kDefaultExactDegreeCap) {
  return archimedean_crosscheck(multiplier_product(f, n, degree_cap), f.degree());
}

}  // namespace lyapunov

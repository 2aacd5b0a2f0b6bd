#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "lyapunov/errors.hpp"
#include "lyapunov/forms.hpp"
#include "lyapunov/numerics.hpp"
#include "lyapunov/roots.hpp"

namespace lyapunov {

inline constexpr std::size_t kDefaultCoefficientCap = (std::size_t{1} << 15) + 1;

/// A homogeneous lift F = (F0, F1) of a rational map. The true lift is
/// exp(log_scale) times the stored forms.
class HomogeneousLift {
 public:
  HomogeneousLift() = default;

  HomogeneousLift(Form<Scalar> f0, Form<Scalar> f1, Real log_scale = Real(0))
      : kit_(std::move(f0), std::move(f1)), log_scale_(std::move(log_scale)) {
    if (kit_.f0.size() != kit_.f1.size() || kit_.f0.size() < 2) {
      throw Error(ErrorCode::InvalidArgument, "lift forms must share a degree of at least 1");
    }
  }

  int degree() const { return kit_.degree; }
  const Form<Scalar>& f0() const { return kit_.f0; }
  const Form<Scalar>& f1() const { return kit_.f1; }
  const Real& log_scale() const { return log_scale_; }
  const FormKit<Scalar>& kit() const { return kit_; }

  /// Stored forms applied to p (without the exp(log_scale) factor).
  Pair apply(const Pair& p) const { return {eval_form(kit_.f0, p[0], p[1]), eval_form(kit_.f1, p[0], p[1])}; }

  Scalar jacobian_det(const Pair& p) const {
    return eval_form(kit_.d00, p[0], p[1]) * eval_form(kit_.d11, p[0], p[1]) -
           eval_form(kit_.d01, p[0], p[1]) * eval_form(kit_.d10, p[0], p[1]);
  }

  /// Largest coefficient magnitude of the stored forms.
  Real coefficient_scale() const {
    Real s = 0;
    for (const auto& c : kit_.f0) s = boost::multiprecision::max(s, abs(c));
    for (const auto& c : kit_.f1) s = boost::multiprecision::max(s, abs(c));
    return s;
  }

  /// Forms converted to another scalar type (true lift up to the scale factor).
  template <class C>
  FormKit<C> kit_as() const {
    Form<C> a(kit_.f0.size()), b(kit_.f1.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      a[k] = convert_scalar<C>(kit_.f0[k]);
      b[k] = convert_scalar<C>(kit_.f1[k]);
    }
    return FormKit<C>(std::move(a), std::move(b));
  }

 private:
  FormKit<Scalar> kit_;
  Real log_scale_{0};
};

/// Homogeneous resultant of the stored forms: the 2d x 2d Sylvester
/// determinant, by partial-pivot elimination.
inline Scalar stored_resultant(const HomogeneousLift& F) {
  const int d = F.degree();
  const int size = 2 * d;
  std::vector<std::vector<Scalar>> m(size, std::vector<Scalar>(size, Scalar(0)));
  for (int row = 0; row < d; ++row) {
    for (int k = 0; k <= d; ++k) {
      m[row][row + k] = F.f0()[d - k];
      m[d + row][row + k] = F.f1()[d - k];
    }
  }
  Scalar det(1);
  for (int col = 0; col < size; ++col) {
    int pivot = col;
    Real best = abs2(m[col][col]);
    for (int r = col + 1; r < size; ++r) {
      Real v = abs2(m[r][col]);
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best == 0) return Scalar(0);
    if (pivot != col) {
      std::swap(m[pivot], m[col]);
      det = -det;
    }
    det *= m[col][col];
    for (int r = col + 1; r < size; ++r) {
      if (m[r][col].is_zero()) continue;
      Scalar factor = m[r][col] / m[col][col];
      for (int c = col; c < size; ++c) m[r][c] -= factor * m[col][c];
    }
  }
  return det;
}

/// Res F, including the exp(log_scale) factor.
inline Scalar resultant(const HomogeneousLift& F) {
  Scalar r = stored_resultant(F);
  if (F.log_scale() != 0) r *= boost::multiprecision::exp(2 * F.degree() * F.log_scale());
  return r;
}

/// Homogenizes f = numerator/denominator (coefficients indexed by power).
inline HomogeneousLift make_lift(std::vector<Scalar> numerator, std::vector<Scalar> denominator) {
  auto trim = [](std::vector<Scalar>& v) {
    while (!v.empty() && v.back().is_zero()) v.pop_back();
  };
  trim(numerator);
  trim(denominator);
  if (denominator.empty()) throw Error(ErrorCode::DegenerateMap, "denominator vanishes identically");
  if (numerator.empty()) throw Error(ErrorCode::DegreeError, "constant map");
  const int d = static_cast<int>(std::max(numerator.size(), denominator.size())) - 1;
  if (d < 2) throw Error(ErrorCode::DegreeError, "degree " + std::to_string(d) + " < 2");
  numerator.resize(d + 1, Scalar(0));
  denominator.resize(d + 1, Scalar(0));
  HomogeneousLift F(std::move(numerator), std::move(denominator));

  const Real scale = F.coefficient_scale();
  const Real threshold = precision_tolerance(1, 2) * boost::multiprecision::pow(scale, 2 * d);
  if (abs(stored_resultant(F)) < threshold) {
    throw Error(ErrorCode::DegenerateMap, "resultant vanishes: numerator and denominator share a root");
  }
  return F;
}

/// Scales F to c·F with |Res(c·F)| = 1, so that g_F is the normalized Green function.
inline HomogeneousLift normalize_lift(const HomogeneousLift& F) {
  const Real r = abs(stored_resultant(F));
  if (r == 0) throw Error(ErrorCode::DegenerateMap, "resultant vanishes");
  const Real c = boost::multiprecision::pow(r, Real(-1) / (2 * F.degree()));
  Form<Scalar> a = F.f0(), b = F.f1();
  for (auto& x : a) x *= c;
  for (auto& x : b) x *= c;
  return HomogeneousLift(std::move(a), std::move(b));
}

/// Divides the stored forms by their largest coefficient magnitude and
/// moves the factor into log_scale.
inline HomogeneousLift renormalized(const HomogeneousLift& F) {
  const Real m = F.coefficient_scale();
  Form<Scalar> a = F.f0(), b = F.f1();
  for (auto& x : a) x /= m;
  for (auto& x : b) x /= m;
  return HomogeneousLift(std::move(a), std::move(b), F.log_scale() + log_of(m));
}

/// F∘G, renormalized.
inline HomogeneousLift compose(const HomogeneousLift& F, const HomogeneousLift& G) {
  auto [a, b] = compose_forms(F.f0(), F.f1(), G.f0(), G.f1());
  HomogeneousLift raw(std::move(a), std::move(b), F.log_scale() + F.degree() * G.log_scale());
  return renormalized(raw);
}

/// F^n with per-step renormalization.
inline HomogeneousLift iterate_lift(const HomogeneousLift& F, int n,
                                    std::size_t coefficient_cap = kDefaultCoefficientCap) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "iterate_lift needs n >= 1");
  double count = 1;
  for (int k = 0; k < n; ++k) count *= F.degree();
  if (count + 1 > static_cast<double>(coefficient_cap)) {
    throw Error(ErrorCode::IterationOverflow,
                "d^n + 1 = " + std::to_string(count + 1) + " exceeds the coefficient cap");
  }
  HomogeneousLift G = renormalized(F);
  for (int k = 1; k < n; ++k) G = compose(F, G);
  return G;
}

/// The lift of the conjugate 1/f(1/z): (F1(z1, z0), F0(z1, z0)).
inline HomogeneousLift conjugate_by_inversion(const HomogeneousLift& F) {
  Form<Scalar> a(F.f1().rbegin(), F.f1().rend());
  Form<Scalar> b(F.f0().rbegin(), F.f0().rend());
  return HomogeneousLift(std::move(a), std::move(b), F.log_scale());
}

inline ProjectivePoint eval_map(const HomogeneousLift& F, const ProjectivePoint& z) {
  return ProjectivePoint::from_pair(F.apply(z.lift()));
}

/// Chart derivative of f at z: affine coordinate at finite points, 1/z at
/// infinity, chosen independently for z and f(z).
inline Scalar derivative_at(const HomogeneousLift& F, const ProjectivePoint& z) {
  const Pair p = z.lift();
  const auto& k = F.kit();
  const Pair q = F.apply(p);
  Pair dq;
  if (z.is_infinity()) {
    dq = {eval_form(k.d01, p[0], p[1]), eval_form(k.d11, p[0], p[1])};
  } else {
    dq = {eval_form(k.d00, p[0], p[1]), eval_form(k.d10, p[0], p[1])};
  }
  if (q[1].is_zero()) {
    return (dq[1] * q[0] - q[1] * dq[0]) / (q[0] * q[0]);
  }
  return (dq[0] * q[1] - q[0] * dq[1]) / (q[1] * q[1]);
}

struct CriticalPoint {
  ProjectivePoint point;
  int multiplicity = 1;
};

/// det DF = kappa · prod_j (· ∧ C_j) with unit-norm C_j.
struct CriticalStructure {
  Real kappa_log_abs;
  Scalar kappa;
  std::vector<CriticalPoint> points;
  /// Unit-norm representatives C_j, one per factor (2d - 2 of them).
  std::vector<Pair> factors;

  int total_multiplicity() const {
    int s = 0;
    for (const auto& c : points) s += c.multiplicity;
    return s;
  }
};

inline Form<Scalar> jacobian_form(const HomogeneousLift& F) {
  const auto& k = F.kit();
  Form<Scalar> a = multiply_forms(k.d00, k.d11);
  Form<Scalar> b = multiply_forms(k.d01, k.d10);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

inline CriticalStructure critical_structure(const HomogeneousLift& F) {
  const Form<Scalar> det = jacobian_form(F);
  const FormRoots fr = binary_form_roots(det);

  CriticalStructure cs;
  Scalar kappa = fr.leading;
  if (fr.infinity_count % 2 == 1) kappa = -kappa;
  Real log_kappa = log_abs(fr.leading);
  for (const auto& r : fr.roots) {
    if (r.is_infinity()) {
      cs.factors.push_back({Scalar(1), Scalar(0)});
      continue;
    }
    const Pair lift = r.lift();
    const Real n = norm(lift);
    kappa *= n;
    log_kappa += log_of(n);
    cs.factors.push_back({lift[0] / n, lift[1] / n});
  }
  // Stored forms carry exp(log_scale); det DF scales by its square.
  log_kappa += 2 * F.log_scale();
  if (F.log_scale() != 0) kappa *= boost::multiprecision::exp(2 * F.log_scale());
  cs.kappa = kappa;
  cs.kappa_log_abs = log_kappa;
  for (const auto& c : cluster_points(fr.roots, precision_tolerance(1, 4))) {
    cs.points.push_back({c.point, c.multiplicity});
  }
  return cs;
}

}  // namespace lyapunov

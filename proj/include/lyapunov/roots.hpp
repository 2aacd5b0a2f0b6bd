#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "lyapunov/forms.hpp"
#include "lyapunov/numerics.hpp"

namespace lyapunov {

/// Initial approximations on circles whose radii come from the upper convex
/// hull of (k, log|a_k|); zero coefficients carry log|a_k| = -inf.
inline std::vector<std::complex<double>> hull_initial_guesses(const std::vector<double>& log_abs_coeffs) {
  const int degree = static_cast<int>(log_abs_coeffs.size()) - 1;
  std::vector<int> pts;
  for (int k = 0; k <= degree; ++k) {
    if (std::isfinite(log_abs_coeffs[k])) pts.push_back(k);
  }
  std::vector<std::complex<double>> guesses;
  if (degree <= 0 || pts.empty()) return guesses;
  guesses.reserve(degree);

  // Upper hull by monotone chain.
  std::vector<int> hull;
  for (int k : pts) {
    while (hull.size() >= 2) {
      const int a = hull[hull.size() - 2];
      const int b = hull.back();
      const double cross = (b - a) * (log_abs_coeffs[k] - log_abs_coeffs[a]) -
                           (log_abs_coeffs[b] - log_abs_coeffs[a]) * (k - a);
      if (cross >= 0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(k);
  }

  constexpr double kSigma = 0.7;
  const double two_pi = 2.0 * std::numbers::pi;
  double smallest_radius = std::numeric_limits<double>::infinity();
  int edge_index = 0;
  for (std::size_t e = 0; e + 1 < hull.size(); ++e, ++edge_index) {
    const int lo = hull[e];
    const int hi = hull[e + 1];
    const int count = hi - lo;
    double radius = std::exp((log_abs_coeffs[lo] - log_abs_coeffs[hi]) / count);
    radius = std::clamp(radius, 1e-150, 1e150);
    smallest_radius = std::min(smallest_radius, radius);
    for (int j = 0; j < count; ++j) {
      const double angle = two_pi * j / count + two_pi * lo / degree + kSigma;
      guesses.push_back(std::polar(radius, angle));
    }
  }
  // Roots hidden behind vanishing low-order coefficients sit near zero.
  const int missing = degree - static_cast<int>(guesses.size());
  if (missing > 0) {
    double radius = std::isfinite(smallest_radius) ? smallest_radius * 1e-2 : 1e-2;
    for (int j = 0; j < missing; ++j) {
      guesses.push_back(std::polar(radius, two_pi * j / missing + kSigma));
    }
  }
  return guesses;
}

/// Gauss–Seidel Aberth–Ehrlich sweeps. `newton_ratio(z)` returns p(z)/p'(z);
/// `converged(i, step, ratio, z)` decides when root i is frozen. Returns the number of
/// sweeps used, or -1 if the budget ran out.
template <class C, class Ratio, class Converged>
int aberth_iterate(std::vector<C>& z, Ratio&& newton_ratio, Converged&& converged, int max_sweeps) {
  const std::size_t n = z.size();
  std::vector<char> done(n, 0);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool all_done = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i]) continue;
      C ratio = newton_ratio(z[i]);
      if (!is_finite(ratio)) {
        // Critical point of p: nudge off it.
        z[i] = z[i] * C(1.0 + 1e-7) + C(1e-9);
        all_done = false;
        continue;
      }
      C repulsion(0);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        C diff = z[i] - z[j];
        auto m = mag2(diff);
        if (m == 0) continue;
        repulsion += conjugate(diff) / m;
      }
      C step = ratio / (C(1) - ratio * repulsion);
      if (!is_finite(step)) step = ratio;
      z[i] -= step;
      if (converged(i, step, ratio, z[i])) {
        done[i] = 1;
      } else {
        all_done = false;
      }
    }
    if (all_done) return sweep + 1;
  }
  return -1;
}

/// Horner evaluation of p and p' for coefficients indexed by power.
template <class C>
void horner_with_derivative(const std::vector<C>& a, const C& z, C& p, C& dp) {
  const int deg = static_cast<int>(a.size()) - 1;
  p = a[deg];
  dp = C(0);
  for (int k = deg - 1; k >= 0; --k) {
    dp = dp * z + p;
    p = p * z + a[k];
  }
}

/// Roots of a low-degree polynomial in hardware precision (coefficients by
/// power; vanishing top coefficients lower the degree). Quadratics use the
/// cancellation-free formula.
inline std::vector<std::complex<double>> solve_polynomial_double(std::vector<std::complex<double>> a) {
  using CD = std::complex<double>;
  while (!a.empty() && a.back() == CD(0)) a.pop_back();
  std::vector<CD> roots;
  const int degree = static_cast<int>(a.size()) - 1;
  if (degree <= 0) return roots;
  if (degree == 1) return {-a[0] / a[1]};
  if (degree == 2) {
    const CD disc = std::sqrt(a[1] * a[1] - 4.0 * a[2] * a[0]);
    const CD q = -0.5 * (a[1] + (std::real(std::conj(a[1]) * disc) >= 0 ? disc : -disc));
    if (q == CD(0)) return {CD(0), CD(0)};
    return {q / a[2], a[0] / q};
  }
  std::vector<double> logs(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    logs[k] = a[k] == CD(0) ? -std::numeric_limits<double>::infinity() : std::log(std::abs(a[k]));
  }
  roots = hull_initial_guesses(logs);
  auto ratio = [&](const CD& x) {
    CD p, dp;
    horner_with_derivative(a, x, p, dp);
    return p / dp;
  };
  auto conv = [](std::size_t, const CD& step, const CD&, const CD& x) { return std::abs(step) <= 1e-15 * (1.0 + std::abs(x)); };
  aberth_iterate(roots, ratio, conv, 200);
  return roots;
}

/// All roots of a polynomial with nonzero leading and constant coefficients.
/// Hardware-precision Aberth, then Newton polish at working precision with
/// the Aberth repulsion of the other roots frozen in.
inline std::vector<Scalar> solve_polynomial(const std::vector<Scalar>& a) {
  const int degree = static_cast<int>(a.size()) - 1;
  std::vector<Scalar> roots;
  if (degree <= 0) return roots;
  if (degree == 1) {
    roots.push_back(-a[0] / a[1]);
    return roots;
  }

  std::vector<double> logs(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    logs[k] = a[k].is_zero() ? -std::numeric_limits<double>::infinity() : to_double(log_abs(a[k]));
  }
  // Normalize in log space before dropping to double.
  const double top = logs[degree];
  std::vector<std::complex<double>> ad(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].is_zero()) continue;
    Scalar scaled = a[k] / boost::multiprecision::exp(Real(top));
    ad[k] = convert_scalar<std::complex<double>>(scaled);
  }
  std::vector<std::complex<double>> z = hull_initial_guesses(logs);
  auto ratio_d = [&](const std::complex<double>& x) {
    std::complex<double> p, dp;
    horner_with_derivative(ad, x, p, dp);
    return p / dp;
  };
  auto conv_d = [](std::size_t, const std::complex<double>& step, const std::complex<double>&,
                   const std::complex<double>& x) {
    return std::abs(step) <= 1e-14 * (1.0 + std::abs(x));
  };
  aberth_iterate(z, ratio_d, conv_d, 500);

  // Repulsion from the hardware approximations, frozen.
  const Real tight = precision_tolerance(1, 1) * 64;
  roots.resize(degree);
  for (int i = 0; i < degree; ++i) {
    std::complex<double> rep(0);
    for (int j = 0; j < degree; ++j) {
      if (j == i) continue;
      const auto diff = z[i] - z[j];
      if (std::norm(diff) > 0) rep += std::conj(diff) / std::norm(diff);
    }
    const Scalar repulsion = to_scalar(rep);
    Scalar x = to_scalar(z[i]);
    Real last_step = real_infinity();
    for (int it = 0; it < 400; ++it) {
      Scalar p, dp;
      horner_with_derivative(a, x, p, dp);
      if (p.is_zero()) break;
      if (dp.is_zero()) {
        x += Scalar(tight);
        continue;
      }
      Scalar ratio = p / dp;
      Scalar step = ratio / (Scalar(1) - ratio * repulsion);
      x -= step;
      const Real s = abs(step);
      if (s <= tight * (1 + abs(x))) break;
      if (it > 20 && s >= last_step) break;  // stagnated at a multiple root
      last_step = s;
    }
    roots[i] = x;
  }
  return roots;
}

/// Roots in P^1 of a binary form, listed with multiplicity (degree entries).
/// Vanishing top coefficients are roots at infinity; exactly vanishing
/// bottom coefficients are roots at zero.
struct FormRoots {
  std::vector<ProjectivePoint> roots;
  int infinity_count = 0;
  int zero_count = 0;
  /// Coefficient of the highest surviving power after removing infinity roots.
  Scalar leading;
};

inline FormRoots binary_form_roots(const Form<Scalar>& c) {
  const int degree = form_degree(c);
  Real scale = 0;
  for (const auto& x : c) scale = boost::multiprecision::max(scale, abs(x));
  if (scale == 0) throw Error(ErrorCode::InvalidArgument, "roots of the zero form");
  const Real threshold = precision_tolerance(1, 2) * scale;

  FormRoots out;
  int top = degree;
  while (top >= 0 && abs(c[top]) <= threshold) --top;
  out.infinity_count = degree - top;
  int bottom = 0;
  while (bottom < top && c[bottom].is_zero()) ++bottom;
  out.zero_count = bottom;
  out.leading = c[top];

  std::vector<Scalar> middle(c.begin() + bottom, c.begin() + top + 1);
  for (const auto& r : solve_polynomial(middle)) out.roots.push_back(ProjectivePoint::affine(r));
  for (int k = 0; k < bottom; ++k) out.roots.push_back(ProjectivePoint::affine(Scalar(0)));
  for (int k = 0; k < out.infinity_count; ++k) out.roots.push_back(ProjectivePoint::infinity());
  return out;
}

struct ClusteredPoint {
  ProjectivePoint point;
  int multiplicity = 1;
};

/// Greedy chordal clustering; the first member of each cluster represents it.
inline std::vector<ClusteredPoint> cluster_points(const std::vector<ProjectivePoint>& pts, const Real& radius) {
  std::vector<ClusteredPoint> out;
  for (const auto& p : pts) {
    bool merged = false;
    for (auto& c : out) {
      if (chordal_distance(c.point, p) <= radius) {
        ++c.multiplicity;
        merged = true;
        break;
      }
    }
    if (!merged) out.push_back({p, 1});
  }
  return out;
}

}  // namespace lyapunov

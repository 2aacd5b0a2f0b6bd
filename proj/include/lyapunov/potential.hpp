#pragma once

#include <cstdint>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "lyapunov/errors.hpp"
#include "lyapunov/forms.hpp"
#include "lyapunov/numerics.hpp"
#include "lyapunov/rmap.hpp"
#include "lyapunov/roots.hpp"

namespace lyapunov {

/// T_F(z) = log‖F(p)‖ − d·log‖p‖ for any lift p of z (including log_scale).
inline Real t_function(const HomogeneousLift& F, const ProjectivePoint& z) {
  const Pair p = z.lift();
  const Pair q = F.apply(p);
  return log_norm(q[0], q[1]) - F.degree() * log_norm(p[0], p[1]) + F.log_scale();
}

/// Points of P^1 spread evenly on the Riemann sphere (Fibonacci lattice),
/// mapped to the plane by stereographic projection.
inline std::vector<ProjectivePoint> spherical_grid(int count) {
  std::vector<ProjectivePoint> pts;
  pts.reserve(count);
  const Real golden = pi_value() * (3 - boost::multiprecision::sqrt(Real(5)));
  for (int k = 0; k < count; ++k) {
    const Real height = 1 - (2 * Real(k) + 1) / count;  // in (-1, 1)
    const Real radius = boost::multiprecision::sqrt(1 - height * height);
    const Real theta = golden * k;
    // (x, y, h) on the unit sphere -> (x + iy) / (1 - h).
    pts.push_back(ProjectivePoint::affine(polar(radius / (1 - height), theta)));
  }
  return pts;
}

/// Dynamical Green function g_f of a resultant-normalized lift, by the
/// telescoping series sum_k d^-(k+1) T_F(f^k z).
class GreenEvaluator {
 public:
  explicit GreenEvaluator(const HomogeneousLift& F) : lift_(normalize_lift(F)) {
    Real bound = 0;
    for (const auto& z : spherical_grid(256)) {
      bound = boost::multiprecision::max(bound, boost::multiprecision::abs(t_function(lift_, z)));
    }
    bound = boost::multiprecision::max(bound, boost::multiprecision::abs(t_function(lift_, ProjectivePoint::infinity())));
    sup_bound_ = 2 * bound;
    if (sup_bound_ == 0) sup_bound_ = precision_tolerance(1, 1);
  }

  const HomogeneousLift& lift() const { return lift_; }
  int degree() const { return lift_.degree(); }
  /// B_F, a (safety-factored) bound on sup |T_F|.
  const Real& sup_bound() const { return sup_bound_; }

  /// Number of series terms K with B_F d^-K / (d - 1) < tol.
  int terms_for(const Real& tol) const {
    const int d = degree();
    Real tail = sup_bound_ / (d - 1);
    int K = 0;
    while (tail >= tol) {
      tail /= d;
      ++K;
    }
    return K;
  }

  Real operator()(const ProjectivePoint& z, const Real& tol) const {
    if (!(tol > 0)) throw Error(ErrorCode::InvalidArgument, "Green tolerance must be positive");
    const int K = terms_for(tol);
    const int d = degree();
    Pair p = normalized(z.lift());
    Real sum = 0;
    Real weight = Real(1) / d;
    for (int k = 0; k < K; ++k) {
      const Pair q = lift_.apply(p);
      const Real log_q = log_norm(q[0], q[1]);
      // ‖p‖ = 1, so T_F(p) = log‖F(p)‖.
      sum += weight * log_q;
      const Real scale = boost::multiprecision::exp(-log_q);
      p = {q[0] * scale, q[1] * scale};
      weight /= d;
    }
    return sum;
  }

 private:
  HomogeneousLift lift_;
  Real sup_bound_;
};

inline Real default_green_tolerance() { return pow2(-static_cast<long>(precision_bits()) + 16); }

inline Real green_function(const GreenEvaluator& G, const ProjectivePoint& z, const Real& tol) { return G(z, tol); }

/// g(f(z)) − d·g(z) + T_F(z), which vanishes for the exact Green function.
inline Real functional_equation_residual(const GreenEvaluator& G, const ProjectivePoint& z, const Real& tol) {
  const ProjectivePoint fz = eval_map(G.lift(), z);
  return G(fz, tol) - G.degree() * G(z, tol) + t_function(G.lift(), z);
}

/// Φ_g(z, w) = log[z, w] − g(z) − g(w); −∞ on the diagonal.
inline Real potential_kernel(const GreenEvaluator& G, const ProjectivePoint& z, const ProjectivePoint& w,
                             const Real& tol) {
  const Real dist = chordal_distance(z, w);
  if (dist == 0) return -real_infinity();
  return log_of(dist) - G(z, tol) - G(w, tol);
}

/// log f♯(z), with f♯ = ‖p‖²·|det DF(p)| / (d·‖F(p)‖²); −∞ at critical points.
inline Real log_chordal_derivative(const HomogeneousLift& F, const ProjectivePoint& z) {
  const Pair p = normalized(z.lift());
  const Pair q = F.apply(p);
  const Scalar det = F.jacobian_det(p);
  if (det.is_zero()) return -real_infinity();
  return log_abs(det) - log_of(norm2(q)) - log_of(Real(F.degree()));
}

inline Real chordal_derivative(const HomogeneousLift& F, const ProjectivePoint& z) {
  const Real v = log_chordal_derivative(F, z);
  if (boost::multiprecision::isinf(v)) return Real(0);
  return boost::multiprecision::exp(v);
}

// ---------------------------------------------------------------------------
// Equilibrium-measure sampling by backward iteration.

struct EquilibriumSample {
  ProjectivePoint point;
  std::size_t index = 0;
  int chain = 0;
  std::uint64_t seed = 0;
};

/// All d preimages of w with multiplicity; infinity appears when the
/// preimage equation loses degree.
inline std::vector<ProjectivePoint> preimages(const HomogeneousLift& F, const ProjectivePoint& w) {
  const Pair t = w.lift();
  const int d = F.degree();
  std::vector<Scalar> poly(d + 1);
  for (int k = 0; k <= d; ++k) poly[k] = t[1] * F.f0()[k] - t[0] * F.f1()[k];
  Real scale = 0;
  for (const auto& c : poly) scale = boost::multiprecision::max(scale, abs(c));
  const Real threshold = precision_tolerance(1, 2) * scale;
  int top = d;
  while (top > 0 && abs(poly[top]) <= threshold) --top;
  if (top == 0) throw Error(ErrorCode::PreimageFailure, "preimage equation vanishes identically");
  poly.resize(top + 1);

  std::vector<ProjectivePoint> out;
  out.reserve(d);
  if (top == 2) {
    // Stable quadratic formula.
    const Scalar& a = poly[2];
    const Scalar& b = poly[1];
    const Scalar& c = poly[0];
    const Scalar disc = sqrt(b * b - Scalar(4) * a * c);
    const Real align = b.re * disc.re + b.im * disc.im;
    const Scalar q = Scalar(Real(-0.5)) * (b + (align >= 0 ? disc : -disc));
    if (q.is_zero()) {
      out.push_back(ProjectivePoint::affine(Scalar(0)));
      out.push_back(ProjectivePoint::affine(Scalar(0)));
    } else {
      out.push_back(ProjectivePoint::affine(q / a));
      out.push_back(ProjectivePoint::affine(c / q));
    }
  } else {
    // Factor out exact roots at 0 so the solver sees a nonzero constant term.
    int zeros = 0;
    while (zeros < top && poly[zeros].is_zero()) ++zeros;
    std::vector<Scalar> reduced(poly.begin() + zeros, poly.end());
    for (const auto& r : solve_polynomial(reduced)) {
      if (!is_finite(r)) throw Error(ErrorCode::PreimageFailure, "non-finite preimage");
      out.push_back(ProjectivePoint::affine(r));
    }
    for (int k = 0; k < zeros; ++k) out.push_back(ProjectivePoint::affine(Scalar(0)));
  }
  for (int k = top; k < d; ++k) out.push_back(ProjectivePoint::infinity());
  return out;
}

struct SamplerOptions {
  std::size_t count = 100000;
  std::size_t burn_in = 100;
  std::uint64_t seed = 1;
  ProjectivePoint start = ProjectivePoint::affine(Scalar(1));
};

/// Balanced backward random walk: each step picks one of the d preimages
/// uniformly (with multiplicity). Points converge to the Julia set and are
/// distributed by the equilibrium measure.
inline std::vector<EquilibriumSample> sample_equilibrium(const HomogeneousLift& F, const SamplerOptions& opt) {
  const HomogeneousLift lift = renormalized(F);
  const int d = lift.degree();
  std::mt19937_64 rng(opt.seed);

  // A totally invariant start (an exceptional point) would never leave
  // itself; nudge it off.
  ProjectivePoint z = opt.start;
  const Real match_tol = precision_tolerance(1, 4);
  for (int attempt = 0; attempt < 8; ++attempt) {
    bool exceptional = true;
    for (const auto& w : preimages(lift, z)) {
      if (chordal_distance(w, z) > match_tol) {
        exceptional = false;
        break;
      }
    }
    if (!exceptional) break;
    z = z.is_infinity() ? ProjectivePoint::affine(Scalar(Real(0.5), Real(0.25)))
                        : ProjectivePoint::affine(z.value() + Scalar(Real(0.125), Real(0.0625)));
  }

  std::vector<EquilibriumSample> out;
  out.reserve(opt.count);
  const std::size_t total = opt.burn_in + opt.count;
  for (std::size_t step = 0; step < total; ++step) {
    const auto pre = preimages(lift, z);
    z = pre[static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(d))];
    if (step >= opt.burn_in) out.push_back({z, step - opt.burn_in, 0, opt.seed});
  }
  return out;
}

inline std::vector<EquilibriumSample> sample_equilibrium(const HomogeneousLift& F, std::size_t count,
                                                         std::size_t burn_in, std::uint64_t seed) {
  SamplerOptions opt;
  opt.count = count;
  opt.burn_in = burn_in;
  opt.seed = seed;
  return sample_equilibrium(F, opt);
}

/// CSV with columns index, re, im, chart.
inline void write_samples_csv(std::ostream& os, const std::vector<EquilibriumSample>& samples) {
  os << "index,re,im,chart\n";
  char buf[64];
  for (const auto& s : samples) {
    os << s.index << ',';
    if (s.point.is_infinity()) {
      os << "0,0,infinity\n";
      continue;
    }
    std::snprintf(buf, sizeof buf, "%.17g", to_double(s.point.value().re));
    os << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", to_double(s.point.value().im));
    os << buf << ",affine\n";
  }
}

}  // namespace lyapunov

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numbers>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "lyapunov/errors.hpp"
#include "lyapunov/forms.hpp"
#include "lyapunov/numerics.hpp"
#include "lyapunov/rmap.hpp"
#include "lyapunov/roots.hpp"

namespace lyapunov {

inline std::vector<int> divisors(int n) {
  std::vector<int> out;
  for (int m = 1; m <= n; ++m) {
    if (n % m == 0) out.push_back(m);
  }
  return out;
}

/// Möbius function by trial factorization.
inline int mobius(int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "mobius needs n >= 1");
  int result = 1;
  for (int p = 2; p * p <= n; ++p) {
    if (n % p != 0) continue;
    n /= p;
    if (n % p == 0) return 0;
    result = -result;
  }
  if (n > 1) result = -result;
  return result;
}

inline double power_count(int d, int n) {
  double c = 1;
  for (int k = 0; k < n; ++k) c *= d;
  return c;
}

// ---------------------------------------------------------------------------
// Orbit jets: F^n applied to (z, 1) with the z-derivative carried along.
// The pair is renormalized every step; p(z) = a - z·b is the dehomogenized
// fixed-point form up to a positive factor.

template <class C>
struct OrbitJet {
  C a, b, da, db;

  C form_value(const C& z) const { return a - z * b; }
  C form_derivative(const C& z) const { return da - b - z * db; }
  /// (f^n)'(z) at a fixed point z: (a' - z b') / b.
  C multiplier(const C& z) const { return (da - z * db) / b; }
};

template <class C>
OrbitJet<C> affine_orbit_jet(const FormKit<C>& k, const C& z, int n) {
  OrbitJet<C> j{z, C(1), C(1), C(0)};
  for (int s = 0; s < n; ++s) {
    C A = eval_form(k.f0, j.a, j.b);
    C B = eval_form(k.f1, j.a, j.b);
    C dA = eval_form(k.d00, j.a, j.b) * j.da + eval_form(k.d01, j.a, j.b) * j.db;
    C dB = eval_form(k.d10, j.a, j.b) * j.da + eval_form(k.d11, j.a, j.b) * j.db;
    auto m = std::max(box_magnitude(A), box_magnitude(B));
    j.a = A / m;
    j.b = B / m;
    j.da = dA / m;
    j.db = dB / m;
  }
  return j;
}

template <>
inline OrbitJet<Scalar> affine_orbit_jet<Scalar>(const FormKit<Scalar>& k, const Scalar& z, int n) {
  OrbitJet<Scalar> j{z, Scalar(1), Scalar(1), Scalar(0)};
  for (int s = 0; s < n; ++s) {
    Scalar A = eval_form(k.f0, j.a, j.b);
    Scalar B = eval_form(k.f1, j.a, j.b);
    Scalar dA = eval_form(k.d00, j.a, j.b) * j.da + eval_form(k.d01, j.a, j.b) * j.db;
    Scalar dB = eval_form(k.d10, j.a, j.b) * j.da + eval_form(k.d11, j.a, j.b) * j.db;
    Real m = boost::multiprecision::max(box_magnitude(A), box_magnitude(B));
    j.a = A / m;
    j.b = B / m;
    j.da = dA / m;
    j.db = dB / m;
  }
  return j;
}

namespace detail {

/// Orbit jets on raw MPFR registers. Polishing evaluates thousands of jets
/// per level; the expression-template arithmetic of `Scalar` allocates a
/// temporary for nearly every operation, which this evaluator avoids by
/// keeping every coefficient and scratch value in preallocated registers.
class RawOrbitJet {
 public:
  explicit RawOrbitJet(const FormKit<Scalar>& kit) : prec_(precision_bits()) {
    for (const Form<Scalar>* f : {&kit.f0, &kit.f1, &kit.d00, &kit.d01, &kit.d10, &kit.d11}) {
      forms_.emplace_back();
      for (const Scalar& c : *f) {
        forms_.back().push_back(regs_.size());
        zero_.push_back(c.is_zero());
        push(c);
      }
    }
    degree_ = static_cast<int>(kit.f0.size()) - 1;
    scratch_ = regs_.size();
    // a, b, da, db, A, B, dA, dB, s, t, u, then the powers of b.
    for (int k = 0; k < 11 + degree_ + 1; ++k) push(Scalar());
  }
  ~RawOrbitJet() {
    for (auto& r : regs_) {
      mpfr_clear(r.re);
      mpfr_clear(r.im);
    }
  }
  RawOrbitJet(const RawOrbitJet&) = delete;
  RawOrbitJet& operator=(const RawOrbitJet&) = delete;

  OrbitJet<Scalar> operator()(const Scalar& z, int n) {
    Reg& a = reg(0);
    Reg& b = reg(1);
    Reg& da = reg(2);
    Reg& db = reg(3);
    set(a, z);
    set_ui(b, 1);
    set_ui(da, 1);
    set_ui(db, 0);
    Reg& A = reg(4);
    Reg& B = reg(5);
    Reg& dA = reg(6);
    Reg& dB = reg(7);
    Reg& u = reg(10);
    set_ui(reg(11), 1);
    for (int s = 0; s < n; ++s) {
      for (int k = 1; k <= degree_; ++k) mul(reg(11 + k), reg(11 + k - 1), b);
      eval(0, a, A);
      eval(1, a, B);
      eval(2, a, dA);
      eval(3, a, u);
      fma_into(dA, da, u, db);
      eval(4, a, dB);
      eval(5, a, u);
      fma_into(dB, da, u, db);
      // Rescale by the box magnitude max(|Re|, |Im|) of A and B.
      mpfr_t m, x;
      mpfr_init2(m, prec_);
      mpfr_init2(x, prec_);
      mpfr_abs(m, A.re, MPFR_RNDN);
      for (mpfr_srcptr v : {A.im, B.re, B.im}) {
        mpfr_abs(x, v, MPFR_RNDN);
        if (mpfr_greater_p(x, m)) mpfr_set(m, x, MPFR_RNDN);
      }
      if (!mpfr_zero_p(m)) {
        div_real(a, A, m);
        div_real(b, B, m);
        div_real(da, dA, m);
        div_real(db, dB, m);
      } else {
        set_reg(a, A);
        set_reg(b, B);
        set_reg(da, dA);
        set_reg(db, dB);
      }
      mpfr_clear(m);
      mpfr_clear(x);
    }
    return {get(a), get(b), get(da), get(db)};
  }

 private:
  struct Reg {
    mpfr_t re, im;
  };

  void push(const Scalar& c) {
    regs_.emplace_back();
    mpfr_init2(regs_.back().re, prec_);
    mpfr_init2(regs_.back().im, prec_);
    set(regs_.back(), c);
  }
  Reg& reg(std::size_t k) { return regs_[scratch_ + k]; }

  static void set(Reg& r, const Scalar& c) {
    mpfr_set(r.re, c.re.backend().data(), MPFR_RNDN);
    mpfr_set(r.im, c.im.backend().data(), MPFR_RNDN);
  }
  static void set_ui(Reg& r, unsigned long v) {
    mpfr_set_ui(r.re, v, MPFR_RNDN);
    mpfr_set_ui(r.im, 0, MPFR_RNDN);
  }
  static void set_reg(Reg& r, const Reg& v) {
    mpfr_set(r.re, v.re, MPFR_RNDN);
    mpfr_set(r.im, v.im, MPFR_RNDN);
  }
  static Scalar get(const Reg& r) {
    Real re, im;
    mpfr_set(re.backend().data(), r.re, MPFR_RNDN);
    mpfr_set(im.backend().data(), r.im, MPFR_RNDN);
    return Scalar(std::move(re), std::move(im));
  }
  // out = x·y; out must not alias x or y.
  static void mul(Reg& out, const Reg& x, const Reg& y) {
    mpfr_fmms(out.re, x.re, y.re, x.im, y.im, MPFR_RNDN);
    mpfr_fmma(out.im, x.re, y.im, x.im, y.re, MPFR_RNDN);
  }
  static void div_real(Reg& out, const Reg& x, mpfr_srcptr m) {
    mpfr_div(out.re, x.re, m, MPFR_RNDN);
    mpfr_div(out.im, x.im, m, MPFR_RNDN);
  }
  // acc = acc·da + u·db, with acc holding the d/dz0 partial on entry.
  void fma_into(Reg& acc, const Reg& da, const Reg& u, const Reg& db) {
    Reg& s = reg(8);
    Reg& t = reg(9);
    mul(s, acc, da);
    mul(t, u, db);
    mpfr_add(acc.re, s.re, t.re, MPFR_RNDN);
    mpfr_add(acc.im, s.im, t.im, MPFR_RNDN);
  }
  // out = Σ c_k x0^k x1^(deg-k) by homogeneous Horner, powers of x1 precomputed.
  void eval(int form, const Reg& x0, Reg& out) {
    const auto& idx = forms_[form];
    const int deg = static_cast<int>(idx.size()) - 1;
    Reg& s = reg(8);
    Reg& t = reg(9);
    set_reg(out, regs_[idx[deg]]);
    for (int k = deg - 1; k >= 0; --k) {
      mul(s, out, x0);
      if (zero_[idx[k]]) {
        set_reg(out, s);
        continue;
      }
      mul(t, regs_[idx[k]], reg(11 + deg - k));
      mpfr_add(out.re, s.re, t.re, MPFR_RNDN);
      mpfr_add(out.im, s.im, t.im, MPFR_RNDN);
    }
  }

  mpfr_prec_t prec_;
  std::vector<Reg> regs_;
  std::vector<char> zero_;
  std::vector<std::vector<std::size_t>> forms_;
  std::size_t scratch_ = 0;
  int degree_ = 0;
};

}  // namespace detail

// ---------------------------------------------------------------------------

/// Coefficients of z1·F0^(n) - z0·F1^(n), degree d^n + 1, with the scale of
/// the iterated lift.
struct FixedPointForm {
  Form<Scalar> coefficients;
  Real log_scale;

  int degree() const { return form_degree(coefficients); }
};

inline FixedPointForm fixed_point_form(const HomogeneousLift& F, int n,
                                       std::size_t coefficient_cap = kDefaultCoefficientCap) {
  const HomogeneousLift G = iterate_lift(F, n, coefficient_cap);
  const std::size_t size = G.f0().size() + 1;
  Form<Scalar> h(size, Scalar(0));
  for (std::size_t k = 0; k < G.f0().size(); ++k) h[k] += G.f0()[k];
  for (std::size_t k = 0; k < G.f1().size(); ++k) h[k + 1] -= G.f1()[k];
  return {std::move(h), G.log_scale()};
}

enum class Classification { superattracting, attracting, indifferent, repelling };

constexpr std::string_view classification_name(Classification c) {
  switch (c) {
    case Classification::superattracting: return "superattracting";
    case Classification::attracting: return "attracting";
    case Classification::indifferent: return "indifferent";
    case Classification::repelling: return "repelling";
  }
  return "unknown";
}

struct ClassificationPolicy {
  /// |λ| below this counts as a zero multiplier (with critical-orbit membership).
  Real superattracting_eps = precision_tolerance(1, 4);
  /// |log|λ|| at most this is indifferent.
  Real indifferent_band = pow2(-20);
};

inline Classification classify(const Scalar& multiplier, const ClassificationPolicy& policy = {},
                               bool on_critical_orbit = true) {
  const Real modulus = abs(multiplier);
  if (on_critical_orbit && modulus < policy.superattracting_eps) return Classification::superattracting;
  if (modulus == 0) return Classification::attracting;
  const Real log_modulus = log_of(modulus);
  if (boost::multiprecision::abs(log_modulus) <= policy.indifferent_band) return Classification::indifferent;
  return log_modulus > 0 ? Classification::repelling : Classification::attracting;
}

struct PeriodicPointRecord {
  ProjectivePoint location;
  int n = 1;
  Scalar multiplier;
  int multiplicity = 1;
  Classification classification = Classification::repelling;
  bool exact_period = false;

  bool superattracting() const { return classification == Classification::superattracting; }
  Real log_abs_multiplier() const { return log_abs(multiplier); }
};

struct PeriodicOptions {
  std::size_t root_cap = kDefaultCoefficientCap;
  int max_sweeps = 3000;
  double rough_tolerance = 1e-14;
  ClassificationPolicy classification{};
};

/// Fixed points of f^n with multiplicity, multipliers and classification.
///
/// Affine roots of the fixed-point form are found by Aberth iteration in
/// double precision, evaluating the form through the orbit of (z, 1) rather
/// than through expanded coefficients, then Newton-polished at working
/// precision. The root at infinity is detected from a truncated Taylor
/// expansion of the form at (1 : 0).
class PeriodicSolver {
 public:
  explicit PeriodicSolver(const HomogeneousLift& F, PeriodicOptions options = {})
      : lift_(renormalized(F)),
        inverted_(conjugate_by_inversion(lift_)),
        kit_d_(lift_.kit_as<std::complex<double>>()),
        options_(std::move(options)),
        critical_(critical_structure(lift_)) {}

  const HomogeneousLift& lift() const { return lift_; }
  const CriticalStructure& critical() const { return critical_; }
  int degree() const { return lift_.degree(); }

  /// Multiplicity of (1 : 0) as a root of the fixed-point form of f^n.
  int infinity_multiplicity(int n) const;

  std::vector<PeriodicPointRecord> solve(int n) const;

  /// Points f^k(c), 1 <= k <= n, over all critical points c.
  const std::vector<ProjectivePoint>& critical_orbit(int n) const;

 private:
  std::vector<double> form_log_magnitudes(int n, int affine_degree) const;
  std::vector<std::complex<double>> preimage_guesses(int n, int affine_degree) const;
  std::vector<std::complex<double>> rough_roots(int n, std::vector<std::complex<double>> guesses) const;

  HomogeneousLift lift_;
  HomogeneousLift inverted_;
  FormKit<std::complex<double>> kit_d_;
  PeriodicOptions options_;
  CriticalStructure critical_;
  mutable std::vector<std::vector<ProjectivePoint>> critical_orbits_;  // [k-1] = f^k(C(f))
  mutable std::vector<FormKit<std::complex<long double>>> iterates_ld_;
  mutable std::vector<ProjectivePoint> critical_orbit_cache_;
};

namespace detail {

/// Truncated power series in t.
struct Series {
  std::vector<Scalar> c;

  Series() = default;
  explicit Series(std::size_t order) : c(order, Scalar(0)) {}
  Series(int v) : c(series_order(), Scalar(0)) { c[0] = Scalar(v); }  // NOLINT(google-explicit-constructor)

  static std::size_t& series_order() {
    static std::size_t order = 8;
    return order;
  }

  Series& operator+=(const Series& o) {
    for (std::size_t k = 0; k < c.size(); ++k) c[k] += o.c[k];
    return *this;
  }
  Series& operator*=(const Series& o) {
    Series r(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i].is_zero()) continue;
      for (std::size_t j = 0; i + j < c.size(); ++j) {
        if (o.c[j].is_zero()) continue;
        r.c[i + j] += c[i] * o.c[j];
      }
    }
    *this = std::move(r);
    return *this;
  }
  friend Series operator+(Series a, const Series& b) { return a += b; }
  friend Series operator*(Series a, const Series& b) { return a *= b; }
};

}  // namespace detail

inline int PeriodicSolver::infinity_multiplicity(int n) const {
  const double total = power_count(degree(), n) + 1;
  const std::size_t order = static_cast<std::size_t>(std::min(total, 24.0)) + 1;
  detail::Series::series_order() = order;
  using detail::Series;

  auto constant = [&](const Scalar& v) {
    Series s(order);
    s.c[0] = v;
    return s;
  };
  Form<Series> g0, g1;
  for (const auto& x : lift_.f0()) g0.push_back(constant(x));
  for (const auto& x : lift_.f1()) g1.push_back(constant(x));

  Series a = constant(Scalar(1));
  Series b(order);
  b.c[1] = Scalar(1);
  for (int s = 0; s < n; ++s) {
    Series A = eval_form(g0, a, b);
    Series B = eval_form(g1, a, b);
    Real m = boost::multiprecision::max(abs(A.c[0]), abs(B.c[0]));
    for (auto& x : A.c) x /= m;
    for (auto& x : B.c) x /= m;
    a = std::move(A);
    b = std::move(B);
  }
  // Form at (1, t): t·a(t) - b(t).
  const Real threshold = precision_tolerance(1, 2);
  for (std::size_t k = 0; k < order; ++k) {
    Scalar h = (k > 0 ? a.c[k - 1] : Scalar(0)) - b.c[k];
    if (abs(h) > threshold) return static_cast<int>(k);
  }
  throw Error(ErrorCode::RootFindingDivergence, "fixed point at infinity of unresolvable multiplicity");
}

inline const std::vector<ProjectivePoint>& PeriodicSolver::critical_orbit(int n) const {
  while (static_cast<int>(critical_orbits_.size()) < n) {
    std::vector<ProjectivePoint> next;
    if (critical_orbits_.empty()) {
      for (const auto& c : critical_.points) next.push_back(eval_map(lift_, c.point));
    } else {
      for (const auto& z : critical_orbits_.back()) next.push_back(eval_map(lift_, z));
    }
    critical_orbits_.push_back(std::move(next));
  }
  critical_orbit_cache_.clear();
  for (int k = 0; k < n; ++k) {
    critical_orbit_cache_.insert(critical_orbit_cache_.end(), critical_orbits_[k].begin(), critical_orbits_[k].end());
  }
  return critical_orbit_cache_;
}

inline std::vector<double> PeriodicSolver::form_log_magnitudes(int n, int affine_degree) const {
  using CL = std::complex<long double>;
  if (iterates_ld_.empty()) {
    FormKit<CL> base = lift_.kit_as<CL>();
    iterates_ld_.push_back(FormKit<CL>(base.f0, base.f1));
  }
  const FormKit<CL> base = iterates_ld_.front();
  while (static_cast<int>(iterates_ld_.size()) < n) {
    const auto& g = iterates_ld_.back();
    auto [a, b] = compose_forms(base.f0, base.f1, g.f0, g.f1);
    long double m = 0;
    for (const auto& x : a) m = std::max(m, box_magnitude(x));
    for (const auto& x : b) m = std::max(m, box_magnitude(x));
    for (auto& x : a) x /= m;
    for (auto& x : b) x /= m;
    FormKit<CL> next;
    next.degree = form_degree(a);
    next.f0 = std::move(a);
    next.f1 = std::move(b);
    iterates_ld_.push_back(std::move(next));
  }
  const auto& g = iterates_ld_[n - 1];
  std::vector<double> logs(affine_degree + 1, -std::numeric_limits<double>::infinity());
  for (int k = 0; k <= affine_degree; ++k) {
    CL h(0);
    if (k < static_cast<int>(g.f0.size())) h += g.f0[k];
    if (k >= 1 && k - 1 < static_cast<int>(g.f1.size())) h -= g.f1[k - 1];
    const long double m = std::abs(h);
    if (m > 0) logs[k] = static_cast<double>(std::log(m));
  }
  if (!std::isfinite(logs[affine_degree])) {
    // Leading coefficient lost to underflow: pin it below everything else.
    double lowest = 0;
    for (double v : logs) {
      if (std::isfinite(v)) lowest = std::min(lowest, v);
    }
    logs[affine_degree] = lowest - 50;
  }
  return logs;
}

inline std::vector<std::complex<double>> PeriodicSolver::preimage_guesses(int n, int affine_degree) const {
  using CD = std::complex<double>;
  // Leaves of the n-th backward tree of a generic base point: each inverse
  // branch of f^n contracts toward a fixed point of f^n, so the leaves lie
  // within about one root spacing of the repelling periodic points.
  std::vector<CD> level{CD(0.3141592653589793, 0.1414213562373095)};
  for (int k = 0; k < n; ++k) {
    std::vector<CD> next;
    next.reserve(level.size() * degree());
    for (const CD& w : level) {
      std::vector<CD> poly(kit_d_.f0.size());
      for (std::size_t j = 0; j < poly.size(); ++j) poly[j] = kit_d_.f0[j] - w * kit_d_.f1[j];
      for (const CD& r : solve_polynomial_double(std::move(poly))) {
        if (is_finite(r)) next.push_back(r);
      }
    }
    level = std::move(next);
  }
  std::sort(level.begin(), level.end(), [](const CD& a, const CD& b) { return std::abs(a) < std::abs(b); });
  if (static_cast<int>(level.size()) > affine_degree) level.resize(affine_degree);
  double radius = 1;
  for (const CD& z : level) radius = std::max(radius, 2 * std::abs(z));
  const int missing = affine_degree - static_cast<int>(level.size());
  for (int j = 0; j < missing; ++j) level.push_back(std::polar(radius, 2 * std::numbers::pi * (j + 0.5) / missing));
  return level;
}

inline std::vector<std::complex<double>> PeriodicSolver::rough_roots(int n, std::vector<std::complex<double>> z) const {
  using CD = std::complex<double>;
  auto ratio = [&](const CD& x) {
    const auto jet = affine_orbit_jet(kit_d_, x, n);
    return jet.form_value(x) / jet.form_derivative(x);
  };
  std::vector<double> last(z.size(), std::numeric_limits<double>::infinity());
  const double tol = options_.rough_tolerance;
  // A small Aberth step alone proves nothing (tight clusters of
  // approximations repel each other into tiny steps); stagnation also
  // requires a small Newton correction.
  auto converged = [&](std::size_t i, const CD& step, const CD& ratio, const CD& x) {
    const double s = std::abs(step);
    const double scale = 1.0 + std::abs(x);
    const bool stalled = s <= 1e-9 * scale && s >= 0.5 * last[i] && std::abs(ratio) <= 1e-8 * scale;
    last[i] = s;
    return (s <= tol * scale && std::abs(ratio) <= 1e3 * tol * scale) || stalled;
  };
  if (aberth_iterate(z, ratio, converged, options_.max_sweeps) < 0) {
    throw Error(ErrorCode::RootFindingDivergence,
                "Aberth iteration for period " + std::to_string(n) + " did not converge");
  }
  return z;
}

inline std::vector<PeriodicPointRecord> PeriodicSolver::solve(int n) const {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "period must be >= 1");
  const double total = power_count(degree(), n) + 1;
  if (total > static_cast<double>(options_.root_cap)) {
    throw Error(ErrorCode::IterationOverflow,
                "d^n + 1 = " + std::to_string(total) + " exceeds the root-count cap");
  }
  const int total_roots = static_cast<int>(total);
  const int m_inf = infinity_multiplicity(n);
  const int affine_degree = total_roots - m_inf;

  std::vector<PeriodicPointRecord> records;
  const ClassificationPolicy& policy = options_.classification;
  const Real match_tol = precision_tolerance(1, 4);
  const auto& crit_orbit = critical_orbit(n);
  auto on_critical_orbit = [&](const ProjectivePoint& w) {
    for (const auto& c : crit_orbit) {
      if (chordal_distance(c, w) <= match_tol) return true;
    }
    return false;
  };
  auto set_classification = [&](PeriodicPointRecord& rec) {
    const bool near_zero = abs(rec.multiplier) < policy.superattracting_eps;
    rec.classification = classify(rec.multiplier, policy, near_zero && on_critical_orbit(rec.location));
    if (rec.superattracting()) rec.multiplier = Scalar(0);
    rec.exact_period = n == 1;
  };

  auto affine_pass = [&](const std::vector<std::complex<double>>& rough) {
    std::vector<PeriodicPointRecord> out;
    const std::size_t count = rough.size();

    // Multiple roots of the form are parabolic (multiplier 1); their rough
    // copies sit close together. Those are polished by multiplicity-scaled
    // Newton, everything else by Newton with frozen Aberth repulsion.
    std::vector<int> rough_multiplicity(count, 1);
    for (std::size_t i = 0; i < count; ++i) {
      const auto jet = affine_orbit_jet(kit_d_, rough[i], n);
      if (std::abs(jet.multiplier(rough[i]) - 1.0) > 1e-3) continue;
      for (std::size_t j = 0; j < count; ++j) {
        if (j != i && std::abs(rough[i] - rough[j]) <= 1e-4 * (1 + std::abs(rough[i]))) ++rough_multiplicity[i];
      }
    }

    const Real tight = precision_tolerance(1, 1) * 256;
    detail::RawOrbitJet raw_jet(lift_.kit());
    std::vector<Scalar> roots(count);
    std::vector<OrbitJet<Scalar>> jets(count);
    for (std::size_t i = 0; i < count; ++i) {
      const int m = rough_multiplicity[i];
      Scalar repulsion(0);
      if (m == 1) {
        std::complex<double> rep(0);
        for (std::size_t j = 0; j < count; ++j) {
          if (j == i) continue;
          const auto diff = rough[i] - rough[j];
          const double mag = std::norm(diff);
          if (mag > 0) rep += std::conj(diff) / mag;
        }
        repulsion = to_scalar(rep);
      }
      Scalar x = to_scalar(rough[i]);
      Real last_step = real_infinity();
      Real step_size = real_infinity();
      OrbitJet<Scalar> jet;
      for (int it = 0; it < 300; ++it) {
        jet = raw_jet(x, n);
        const Scalar p = jet.form_value(x);
        const Scalar dp = jet.form_derivative(x);
        if (p.is_zero() || dp.is_zero()) {
          step_size = 0;
          break;
        }
        const Scalar ratio = p / dp;
        Scalar step = m == 1 ? ratio / (Scalar(1) - ratio * repulsion) : ratio * Real(m);
        if (!is_finite(step)) step = ratio;
        x -= step;
        step_size = boost::multiprecision::max(abs(step), abs(ratio) * m);
        if (step_size <= tight * (1 + abs(x))) {
          jet = raw_jet(x, n);
          break;
        }
        if (it >= 2 && step_size > last_step / 2) break;  // rounding floor reached
        last_step = step_size;
      }
      // An m-fold root is only determined to about precision/m bits.
      const Real polish_tol = pow2(-static_cast<long>(precision_bits() / (2 * m))) * 4;
      if (!(step_size <= polish_tol * (1 + abs(x)))) {
        throw Error(ErrorCode::RootFindingDivergence,
                    "Newton polish failed for a period-" + std::to_string(n) + " point");
      }
      roots[i] = std::move(x);
      jets[i] = std::move(jet);
    }

    // Group copies of multiple roots. Those are parabolic (multiplier 1);
    // simple roots may lie far closer together than the matching tolerance
    // (z^2 - 2 at n = 12 has pairs about 2^-32 apart), so they are only
    // merged as a failure signal when they polished onto the same point.
    std::vector<int> parent(count);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int i) {
      while (parent[i] != i) i = parent[i] = parent[parent[i]];
      return i;
    };
    const Real parabolic_band = precision_tolerance(1, 8);
    const Real collision_tol = precision_tolerance(3, 4);
    std::vector<std::complex<double>> approx(count);
    std::vector<char> parabolic(count, 0);
    for (std::size_t i = 0; i < count; ++i) {
      approx[i] = convert_scalar<std::complex<double>>(roots[i]);
      parabolic[i] = abs(jets[i].multiplier(roots[i]) - Scalar(1)) <= parabolic_band;
    }
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t j = i + 1; j < count; ++j) {
        const double scale = 1.0 + std::norm(approx[i]);
        if (std::norm(approx[i] - approx[j]) > 1e-12 * scale * scale) continue;
        const Real dist = chordal_distance(ProjectivePoint::affine(roots[i]), ProjectivePoint::affine(roots[j]));
        if (parabolic[i] && parabolic[j]) {
          if (dist <= match_tol) parent[find(static_cast<int>(j))] = find(static_cast<int>(i));
        } else if (dist <= collision_tol) {
          throw Error(ErrorCode::RootFindingDivergence,
                      "distinct period-" + std::to_string(n) + " points collided during polishing");
        }
      }
    }
    std::map<int, int> group_size;
    for (std::size_t i = 0; i < count; ++i) ++group_size[find(static_cast<int>(i))];

    for (std::size_t i = 0; i < count; ++i) {
      if (find(static_cast<int>(i)) != static_cast<int>(i)) continue;
      PeriodicPointRecord rec;
      rec.location = ProjectivePoint::affine(roots[i]);
      rec.n = n;
      rec.multiplier = jets[i].multiplier(roots[i]);
      rec.multiplicity = group_size[static_cast<int>(i)];
      set_classification(rec);
      out.push_back(std::move(rec));
    }
    return out;
  };

  if (affine_degree > 0) {
    std::vector<PeriodicPointRecord> affine;
    try {
      affine = affine_pass(rough_roots(n, preimage_guesses(n, affine_degree)));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::RootFindingDivergence) throw;
      // Fall back to Newton-polygon circles around the origin.
      affine = affine_pass(rough_roots(n, hull_initial_guesses(form_log_magnitudes(n, affine_degree))));
    }
    records = std::move(affine);
  }

  if (m_inf > 0) {
    const auto jet = affine_orbit_jet(inverted_.kit(), Scalar(0), n);
    PeriodicPointRecord rec;
    rec.location = ProjectivePoint::infinity();
    rec.n = n;
    rec.multiplier = jet.multiplier(Scalar(0));
    rec.multiplicity = m_inf;
    set_classification(rec);
    records.push_back(std::move(rec));
  }
  return records;
}

inline std::vector<PeriodicPointRecord> solve_periodic(const HomogeneousLift& F, int n, PeriodicOptions options = {}) {
  return PeriodicSolver(F, std::move(options)).solve(n);
}

inline int total_multiplicity(const std::vector<PeriodicPointRecord>& records) {
  int s = 0;
  for (const auto& r : records) s += r.multiplicity;
  return s;
}

// ---------------------------------------------------------------------------
// Exact-period partition.

using PeriodicTable = std::map<int, std::vector<PeriodicPointRecord>>;

struct MatchingPolicy {
  /// Chordal distance at or below which two points are the same point.
  Real match_tol = precision_tolerance(1, 4);
  /// Upper end of the band in which a match is decided by a Newton test.
  Real ambiguity_band = precision_tolerance(1, 8);
};

namespace detail {

/// Newton displacement |p_m / p_m'| at w for the fixed-point form of f^m,
/// converted to chordal units.
inline Real newton_displacement(const HomogeneousLift& F, const ProjectivePoint& w, int m) {
  const bool use_inverse = w.is_infinity() || abs(w.value()) > 1;
  const HomogeneousLift G = use_inverse ? conjugate_by_inversion(F) : F;
  const Scalar z = use_inverse ? w.inverted().value() : w.value();
  const auto jet = affine_orbit_jet(G.kit(), z, m);
  const Scalar dp = jet.form_derivative(z);
  if (dp.is_zero()) return Real(0);
  return abs(jet.form_value(z) / dp) / (1 + abs2(z));
}

}  // namespace detail

/// Flags the records of level n whose points do not reappear at any proper
/// divisor level. All divisor levels must be present in the table.
inline std::vector<PeriodicPointRecord> exact_period_partition(const PeriodicTable& table, int n,
                                                               const HomogeneousLift& F,
                                                               const MatchingPolicy& policy = {}) {
  auto it = table.find(n);
  if (it == table.end()) throw Error(ErrorCode::ModeUnavailable, "level " + std::to_string(n) + " not solved");
  std::vector<PeriodicPointRecord> out = it->second;
  std::vector<int> proper;
  for (int m : divisors(n)) {
    if (m == n) continue;
    if (!table.count(m)) throw Error(ErrorCode::ModeUnavailable, "divisor level " + std::to_string(m) + " missing");
    proper.push_back(m);
  }
  const double band_d = to_double(policy.ambiguity_band);
  for (auto& rec : out) {
    bool matched = false;
    for (int m : proper) {
      for (const auto& low : table.at(m)) {
        if (rec.location.is_infinity() != low.location.is_infinity() && !rec.location.is_infinity() &&
            !low.location.is_infinity()) {
          continue;
        }
        // Cheap hardware-precision screen before the exact distance.
        if (!rec.location.is_infinity() && !low.location.is_infinity()) {
          const auto a = convert_scalar<std::complex<double>>(rec.location.value());
          const auto b = convert_scalar<std::complex<double>>(low.location.value());
          const double approx = std::abs(a - b) / std::sqrt((1 + std::norm(a)) * (1 + std::norm(b)));
          if (approx > 2 * band_d + 1e-12) continue;
        }
        const Real dist = chordal_distance(rec.location, low.location);
        if (dist <= policy.match_tol) {
          matched = true;
        } else if (dist <= policy.ambiguity_band) {
          const Real delta = detail::newton_displacement(F, rec.location, m);
          if (delta <= policy.match_tol) {
            matched = true;
          } else if (delta < dist / 4) {
            throw Error(ErrorCode::AmbiguousMatch,
                        "period-" + std::to_string(n) + " point inside the matching band of a period-" +
                            std::to_string(m) + " point; raise the precision");
          }
        }
        if (matched) break;
      }
      if (matched) break;
    }
    rec.exact_period = !matched;
  }
  return out;
}

/// Solved levels with exact-period flags, computed on demand.
class PeriodicAtlas {
 public:
  explicit PeriodicAtlas(const HomogeneousLift& F, PeriodicOptions options = {}, MatchingPolicy matching = {})
      : solver_(F, std::move(options)), matching_(std::move(matching)) {}

  const PeriodicSolver& solver() const { return solver_; }
  int degree() const { return solver_.degree(); }

  /// Raw records of Fix(f^n) (exact flags valid only after `flagged`).
  const std::vector<PeriodicPointRecord>& raw(int n) {
    auto it = raw_.find(n);
    if (it == raw_.end()) it = raw_.emplace(n, solver_.solve(n)).first;
    return it->second;
  }

  /// Records of Fix(f^n) with exact-period flags set.
  const std::vector<PeriodicPointRecord>& flagged(int n) {
    auto it = flagged_.find(n);
    if (it != flagged_.end()) return it->second;
    for (int m : divisors(n)) raw(m);
    return flagged_.emplace(n, exact_period_partition(raw_, n, solver_.lift(), matching_)).first->second;
  }

  const PeriodicTable& table() const { return raw_; }

 private:
  PeriodicSolver solver_;
  MatchingPolicy matching_;
  PeriodicTable raw_;
  PeriodicTable flagged_;
};

}  // namespace lyapunov

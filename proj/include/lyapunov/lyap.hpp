#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lyapunov/errors.hpp"
#include "lyapunov/numerics.hpp"
#include "lyapunov/periodic.hpp"
#include "lyapunov/potential.hpp"
#include "lyapunov/rmap.hpp"

namespace lyapunov {

enum class EstimatorMode { full, exact_period, repelling, repelling_exact, green_critical, monte_carlo };

constexpr std::string_view mode_name(EstimatorMode m) {
  switch (m) {
    case EstimatorMode::full: return "full";
    case EstimatorMode::exact_period: return "exact_period";
    case EstimatorMode::repelling: return "repelling";
    case EstimatorMode::repelling_exact: return "repelling_exact";
    case EstimatorMode::green_critical: return "green_critical";
    case EstimatorMode::monte_carlo: return "monte_carlo";
  }
  return "unknown";
}

inline EstimatorMode parse_mode(std::string_view s) {
  for (auto m : {EstimatorMode::full, EstimatorMode::exact_period, EstimatorMode::repelling,
                 EstimatorMode::repelling_exact, EstimatorMode::green_critical, EstimatorMode::monte_carlo}) {
    if (mode_name(m) == s) return m;
  }
  if (s == "exact") return EstimatorMode::exact_period;
  throw Error(ErrorCode::InvalidArgument, "unknown mode '" + std::string(s) + "'");
}

constexpr bool is_periodic_mode(EstimatorMode m) {
  return m == EstimatorMode::full || m == EstimatorMode::exact_period || m == EstimatorMode::repelling ||
         m == EstimatorMode::repelling_exact;
}

constexpr bool uses_exact_period(EstimatorMode m) {
  return m == EstimatorMode::exact_period || m == EstimatorMode::repelling_exact;
}

struct LyapunovEstimate {
  EstimatorMode mode = EstimatorMode::full;
  int n = 0;
  Real value;
  /// Points left out of the sum, with multiplicity.
  int excluded_count = 0;
  std::size_t sample_count = 0;
  /// Monte Carlo standard error (zero for the other modes).
  Real standard_error = 0;
  /// Indices into the level-n record list of the points left out.
  std::vector<std::size_t> excluded;
};

namespace detail {

/// Whether a record enters the sum for the given mode.
inline bool counts_in(const PeriodicPointRecord& r, EstimatorMode mode) {
  if (uses_exact_period(mode) && !r.exact_period) return false;
  if (mode == EstimatorMode::repelling || mode == EstimatorMode::repelling_exact) {
    return r.classification == Classification::repelling;
  }
  return !r.superattracting();
}

}  // namespace detail

/// Multiplier sum of one level, given records (flagged when the mode needs it).
inline LyapunovEstimate estimator_from_records(const std::vector<PeriodicPointRecord>& records, int n, int d,
                                               EstimatorMode mode) {
  if (!is_periodic_mode(mode)) throw Error(ErrorCode::InvalidArgument, "not a periodic-point mode");
  LyapunovEstimate e;
  e.mode = mode;
  e.n = n;
  Real sum = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (uses_exact_period(mode) && !r.exact_period) continue;
    if (detail::counts_in(r, mode)) {
      sum += r.multiplicity * r.log_abs_multiplier();
    } else {
      e.excluded_count += r.multiplicity;
      e.excluded.push_back(i);
    }
  }
  e.value = sum / (Real(n) * Real(power_count(d, n)));
  return e;
}

/// Periodic-point estimator for level n. Exact-period modes need all divisor
/// levels, which the atlas solves on demand.
inline LyapunovEstimate estimator(PeriodicAtlas& atlas, int n, EstimatorMode mode) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
  const auto& records = uses_exact_period(mode) ? atlas.flagged(n) : atlas.raw(n);
  return estimator_from_records(records, n, atlas.degree(), mode);
}

/// Estimator over a precomputed table; exact modes require every divisor level.
inline LyapunovEstimate estimator(const PeriodicTable& table, const HomogeneousLift& F, int n, EstimatorMode mode) {
  if (!table.count(n)) throw Error(ErrorCode::ModeUnavailable, "level " + std::to_string(n) + " not solved");
  if (uses_exact_period(mode)) {
    return estimator_from_records(exact_period_partition(table, n, F), n, F.degree(), mode);
  }
  return estimator_from_records(table.at(n), n, F.degree(), mode);
}

inline LyapunovEstimate estimator(const HomogeneousLift& F, int n, EstimatorMode mode, PeriodicOptions options = {}) {
  PeriodicAtlas atlas(F, std::move(options));
  return estimator(atlas, n, mode);
}

/// |(1/n) Σ_{Fix*(f^n)} log|λ| − Σ_{m|n} μ(n/m) (1/m) Σ_{Fix(f^m)} log|λ||,
/// zero multipliers left out on both sides.
inline Real mobius_check(PeriodicAtlas& atlas, int n) {
  auto level_sum = [](const std::vector<PeriodicPointRecord>& recs, bool exact_only) {
    Real s = 0;
    for (const auto& r : recs) {
      if (r.superattracting() || (exact_only && !r.exact_period)) continue;
      s += r.multiplicity * r.log_abs_multiplier();
    }
    return s;
  };
  const Real lhs = level_sum(atlas.flagged(n), true) / n;
  Real rhs = 0;
  for (int m : divisors(n)) {
    const int mu = mobius(n / m);
    if (mu == 0) continue;
    rhs += mu * level_sum(atlas.raw(m), false) / m;
  }
  return boost::multiprecision::abs(lhs - rhs);
}

// ---------------------------------------------------------------------------

/// L = −log d + log|κ| + Σ_j m_j g(c_j) for the resultant-normalized lift.
inline LyapunovEstimate lyapunov_green_critical(const GreenEvaluator& G, const Real& tol) {
  const CriticalStructure cs = critical_structure(G.lift());
  Real value = cs.kappa_log_abs - log_of(Real(G.degree()));
  for (const auto& c : cs.points) value += c.multiplicity * G(c.point, tol);
  LyapunovEstimate e;
  e.mode = EstimatorMode::green_critical;
  e.value = value;
  return e;
}

inline LyapunovEstimate lyapunov_green_critical(const HomogeneousLift& F) {
  return lyapunov_green_critical(GreenEvaluator(F), default_green_tolerance());
}

inline LyapunovEstimate lyapunov_green_critical(const HomogeneousLift& F, const Real& tol) {
  return lyapunov_green_critical(GreenEvaluator(F), tol);
}

/// Mean of log f♯ over equilibrium samples. The standard error combines
/// batch means (the backward walk is correlated) with a working-precision
/// floor, so maps with f♯ constant on the Julia set get a meaningful band.
inline LyapunovEstimate lyapunov_monte_carlo(const HomogeneousLift& F, std::size_t samples, std::size_t burn_in,
                                             std::uint64_t seed) {
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "need at least one sample");
  const auto pts = sample_equilibrium(F, samples, burn_in, seed);
  std::vector<Real> values;
  values.reserve(pts.size());
  Real sum = 0;
  for (const auto& s : pts) {
    values.push_back(log_chordal_derivative(F, s.point));
    if (boost::multiprecision::isinf(values.back())) {
      throw Error(ErrorCode::PreimageFailure, "equilibrium sample landed on a critical point");
    }
    sum += values.back();
  }
  const std::size_t N = values.size();
  const Real mean = sum / N;

  const std::size_t batches = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(N))));
  const std::size_t batch_size = N / batches;
  Real se2 = 0;
  if (batches >= 2 && batch_size >= 1) {
    Real acc = 0;
    std::vector<Real> means;
    for (std::size_t b = 0; b < batches; ++b) {
      Real s = 0;
      for (std::size_t k = b * batch_size; k < (b + 1) * batch_size; ++k) s += values[k];
      means.push_back(s / batch_size);
    }
    Real grand = 0;
    for (const auto& m : means) grand += m;
    grand /= batches;
    for (const auto& m : means) acc += (m - grand) * (m - grand);
    se2 = acc / (batches - 1) / batches;
  }
  const Real floor = precision_tolerance(1, 2) * (1 + boost::multiprecision::abs(mean));
  LyapunovEstimate e;
  e.mode = EstimatorMode::monte_carlo;
  e.value = mean;
  e.sample_count = N;
  e.standard_error = boost::multiprecision::sqrt(se2 + floor * floor);
  return e;
}

/// |log f♯(z) − (L + Σ_c Φ(z, c) + 2g(f z) − 2g(z))|, critical points with multiplicity.
inline Real multiplier_formula_residual(const GreenEvaluator& G, const Real& L, const ProjectivePoint& z,
                                        const Real& tol) {
  const CriticalStructure cs = critical_structure(G.lift());
  const Real match_tol = precision_tolerance(1, 4);
  for (const auto& c : cs.points) {
    if (chordal_distance(c.point, z) <= match_tol) {
      throw Error(ErrorCode::CriticalPointInput, "residual requested at a critical point");
    }
  }
  const Real gz = G(z, tol);
  Real rhs = L + 2 * G(eval_map(G.lift(), z), tol) - 2 * gz;
  for (const auto& c : cs.points) {
    rhs += c.multiplicity * (log_of(chordal_distance(z, c.point)) - gz - G(c.point, tol));
  }
  return boost::multiprecision::abs(log_chordal_derivative(G.lift(), z) - rhs);
}

// ---------------------------------------------------------------------------
// Convergence-rate reports.

struct RateRow {
  int n = 0;
  EstimatorMode mode = EstimatorMode::full;
  Real estimate;
  std::optional<Real> error;
  std::optional<Real> error_ndinv;  // error · d^n / n
  std::optional<Real> error_dhalf;  // error · d^(n/2)
};

struct RateReport {
  std::vector<RateRow> rows;
  std::optional<Real> reference;
  EstimatorMode reference_mode = EstimatorMode::green_critical;
  /// max over n >= 3 of the scaled errors within 4x their median.
  std::optional<bool> full_bounded;
  std::optional<bool> exact_bounded;
};

namespace detail {

inline Real median_of(std::vector<Real> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  if (k % 2 == 1) return v[k / 2];
  return (v[k / 2 - 1] + v[k / 2]) / 2;
}

inline std::optional<bool> bounded_by_median(const std::vector<Real>& column) {
  if (column.empty()) return std::nullopt;
  const Real max = *std::max_element(column.begin(), column.end());
  return max <= 4 * median_of(column);
}

}  // namespace detail

/// Full and exact-period rows for 1 <= n <= n_max, sorted by n.
inline RateReport rate_table(PeriodicAtlas& atlas, int n_max, const std::optional<LyapunovEstimate>& reference) {
  RateReport report;
  if (reference) {
    report.reference = reference->value;
    report.reference_mode = reference->mode;
  }
  const int d = atlas.degree();
  std::vector<Real> full_column, exact_column;
  for (int n = 1; n <= n_max; ++n) {
    for (EstimatorMode mode : {EstimatorMode::full, EstimatorMode::exact_period}) {
      RateRow row;
      row.n = n;
      row.mode = mode;
      row.estimate = estimator(atlas, n, mode).value;
      if (report.reference) {
        const Real err = boost::multiprecision::abs(row.estimate - *report.reference);
        row.error = err;
        row.error_ndinv = err * Real(power_count(d, n)) / n;
        row.error_dhalf = err * boost::multiprecision::pow(Real(d), Real(n) / 2);
        if (n >= 3) {
          (mode == EstimatorMode::full ? full_column : exact_column)
              .push_back(mode == EstimatorMode::full ? *row.error_ndinv : *row.error_dhalf);
        }
      }
      report.rows.push_back(std::move(row));
    }
  }
  report.full_bounded = detail::bounded_by_median(full_column);
  report.exact_bounded = detail::bounded_by_median(exact_column);
  return report;
}

inline RateReport rate_table(const HomogeneousLift& F, int n_max, const std::optional<LyapunovEstimate>& reference,
                             PeriodicOptions options = {}) {
  PeriodicAtlas atlas(F, std::move(options));
  return rate_table(atlas, n_max, reference);
}

}  // namespace lyapunov

#include <gtest/gtest.h>

#include <random>

#include "lyapunov/lyap.hpp"
#include "lyapunov/map_spec.hpp"

using namespace lyapunov;

namespace {

Scalar cx(double re, double im = 0) { return Scalar(Real(re), Real(im)); }
ProjectivePoint at(double re, double im = 0) { return ProjectivePoint::affine(cx(re, im)); }
HomogeneousLift lift_of(const char* text) { return to_lift(parse_map_spec(text)); }

Real log2r() { return log_of(Real(2)); }
Real gap(const Real& a, const Real& b) { return boost::multiprecision::abs(a - b); }

class Lyap : public ::testing::Test {
 protected:
  void SetUp() override { set_precision_bits(128); }
};

}  // namespace

TEST_F(Lyap, ModeNames) {
  for (auto m : {EstimatorMode::full, EstimatorMode::exact_period, EstimatorMode::repelling,
                 EstimatorMode::repelling_exact, EstimatorMode::green_critical, EstimatorMode::monte_carlo}) {
    EXPECT_EQ(parse_mode(mode_name(m)), m);
  }
  EXPECT_EQ(parse_mode("exact"), EstimatorMode::exact_period);
  EXPECT_THROW(parse_mode("fastest"), Error);
}

TEST_F(Lyap, EstimatorExamples) {
  const auto z2 = estimator(lift_of("z^2"), 3, EstimatorMode::full);
  EXPECT_LT(gap(z2.value, (1 - Real(0.125)) * log2r()), 1e-30);
  EXPECT_EQ(z2.excluded_count, 2);  // 0 and infinity

  PeriodicAtlas cheb(lift_of("z^2-2"));
  EXPECT_LT(gap(estimator(cheb, 1, EstimatorMode::full).value, Real(1.5) * log2r()), 1e-30);
  // Two exact-period points with multiplier -4: 2 log 4 / (2 * 4).
  EXPECT_LT(gap(estimator(cheb, 2, EstimatorMode::exact_period).value, log2r() / 2), 1e-30);
  EXPECT_LT(gap(estimator(cheb, 2, EstimatorMode::full).value, Real(1.25) * log2r()), 1e-30);
}

TEST_F(Lyap, EstimatorNeedsDivisorLevels) {
  PeriodicTable table;
  const HomogeneousLift F = lift_of("z^2-1");
  table[4] = solve_periodic(F, 4);
  try {
    estimator(table, F, 4, EstimatorMode::exact_period);
    FAIL() << "expected ModeUnavailable";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ModeUnavailable);
  }
  EXPECT_NO_THROW(estimator(table, F, 4, EstimatorMode::full));
}

TEST_F(Lyap, MobiusExamples) {
  PeriodicAtlas cheb(lift_of("z^2-2"));
  EXPECT_LT(mobius_check(cheb, 2), 1e-9);
  PeriodicAtlas basilica(lift_of("z^2-1"));
  EXPECT_EQ(mobius_check(basilica, 1), 0);
  PeriodicAtlas power(lift_of("z^2"));
  EXPECT_LT(mobius_check(power, 4), 1e-9);
}

TEST_F(Lyap, GreenCriticalExamples) {
  EXPECT_LT(gap(lyapunov_green_critical(lift_of("z^2")).value, log2r()), 1e-30);
  EXPECT_LT(gap(lyapunov_green_critical(lift_of("z^3")).value, log_of(Real(3))), 1e-30);
  EXPECT_LT(gap(lyapunov_green_critical(lift_of("z^5")).value, log_of(Real(5))), 1e-30);
  EXPECT_LT(gap(lyapunov_green_critical(lift_of("z^2-2")).value, log2r()), 1e-6);
  EXPECT_EQ(lyapunov_green_critical(lift_of("z^2")).mode, EstimatorMode::green_critical);
}

TEST_F(Lyap, GreenCriticalFrozenValues) {
  // Regression values at 128 bits with the default Green tolerance. Both maps
  // have an escaping critical point, so L(f) = log 2 + G(0) exceeds log 2;
  // the periodic route at n = 10 agrees to double precision.
  EXPECT_NEAR(to_double(lyapunov_green_critical(lift_of("z^2+1")).value), 0.89682444192968536, 1e-12);
  EXPECT_NEAR(to_double(lyapunov_green_critical(lift_of("z^2+2")).value), 1.147931985621063, 1e-12);
  // Connected polynomial Julia sets and the Newton map of z^2+1 sit at log 2.
  for (const char* map : {"z^2-1", "z^2+i/4", "(z^2+1)/(2*z)"}) {
    EXPECT_LT(gap(lyapunov_green_critical(lift_of(map)).value, log2r()), 1e-12) << map;
  }
}

TEST_F(Lyap, MonteCarloExamples) {
  const auto a = lyapunov_monte_carlo(lift_of("z^2"), 100000, 100, 1);
  EXPECT_LT(gap(a.value, log2r()), 0.02);
  EXPECT_EQ(a.sample_count, 100000u);
  const auto b = lyapunov_monte_carlo(lift_of("z^2-2"), 100000, 100, 2);
  EXPECT_LT(gap(b.value, log2r()), 0.02);
  EXPECT_GT(b.standard_error, 0);
  EXPECT_EQ(lyapunov_monte_carlo(lift_of("z^2-2"), 500, 10, 3).value,
            lyapunov_monte_carlo(lift_of("z^2-2"), 500, 10, 3).value);
  EXPECT_THROW(lyapunov_monte_carlo(lift_of("z^2"), 0, 10, 1), Error);
}

TEST_F(Lyap, MultiplierFormulaOnBasilica) {
  const GreenEvaluator G(lift_of("z^2-1"));
  const Real tol = Real(1e-8);
  const Real L = lyapunov_green_critical(G, tol).value;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int k = 0; k < 100; ++k) {
    EXPECT_LT(multiplier_formula_residual(G, L, at(u(rng), u(rng)), tol), 1e-6);
  }
}

TEST_F(Lyap, MultiplierFormulaPowerMapAtOne) {
  const GreenEvaluator G(lift_of("z^2"));
  const Real tol = pow2(-100);
  const Real L = lyapunov_green_critical(G, tol).value;
  EXPECT_LT(multiplier_formula_residual(G, L, at(1), tol), pow2(-90));
}

TEST_F(Lyap, MultiplierFormulaNearCriticalPoint) {
  const GreenEvaluator G(lift_of("z^2+i/4"));
  const Real tol = Real(1e-10);
  const Real L = lyapunov_green_critical(G, tol).value;
  // Chordal distance about 1e-3 from the critical point 0.
  EXPECT_LT(multiplier_formula_residual(G, L, at(1e-3), tol), 1e-6);
  EXPECT_LT(multiplier_formula_residual(G, L, at(0, -1e-3), tol), 1e-6);
  try {
    multiplier_formula_residual(G, L, at(0), tol);
    FAIL() << "expected CriticalPointInput";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CriticalPointInput);
  }
}

TEST_F(Lyap, RateTablePowerMap) {
  LyapunovEstimate ref;
  ref.value = log2r();
  const RateReport r = rate_table(lift_of("z^2"), 8, ref);
  ASSERT_EQ(r.rows.size(), 16u);
  for (const auto& row : r.rows) {
    if (row.mode != EstimatorMode::full) continue;
    EXPECT_LT(gap(*row.error, log2r() / Real(power_count(2, row.n))), 1e-30);
    EXPECT_LT(gap(*row.error_ndinv, log2r() / row.n), 1e-28);
  }
  ASSERT_TRUE(r.full_bounded.has_value());
  EXPECT_TRUE(*r.full_bounded);
}

TEST_F(Lyap, RateTableChebyshev) {
  const HomogeneousLift F = lift_of("z^2-2");
  const RateReport r = rate_table(F, 10, lyapunov_green_critical(F));
  EXPECT_NEAR(to_double(*r.rows[0].error), 0.5 * std::log(2.0), 1e-9);
  EXPECT_NEAR(to_double(*r.rows[2].error), 0.25 * std::log(2.0), 1e-9);
  EXPECT_EQ(r.rows[0].mode, EstimatorMode::full);
  EXPECT_EQ(r.rows[1].mode, EstimatorMode::exact_period);
  for (std::size_t k = 1; k < r.rows.size(); ++k) EXPECT_LE(r.rows[k - 1].n, r.rows[k].n);
  EXPECT_TRUE(r.full_bounded.value());
  EXPECT_TRUE(r.exact_bounded.value());
}

TEST_F(Lyap, RateTableWithoutReferenceOrRows) {
  const RateReport empty = rate_table(lift_of("z^2"), 0, std::nullopt);
  EXPECT_TRUE(empty.rows.empty());
  const RateReport bare = rate_table(lift_of("z^2"), 3, std::nullopt);
  ASSERT_EQ(bare.rows.size(), 6u);
  for (const auto& row : bare.rows) EXPECT_FALSE(row.error.has_value());
  EXPECT_FALSE(bare.full_bounded.has_value());
}

TEST_F(Lyap, ExactPeriodClosedFormForChebyshev) {
  // Every point of exact period n >= 2 of z^2-2 has |(f^n)'| = 2^n, so the
  // exact-period sum is #Fix*(f^n) n log 2 with #Fix* = sum mu(n/m) 2^m over
  // affine points. The missing lower-period mass makes its error of order
  // 2^(-n/2), larger than the full-mode error of order 2^(-n).
  PeriodicAtlas atlas(lift_of("z^2-2"));
  for (int n = 2; n <= 12; ++n) {
    long count = 0;
    for (int m : divisors(n)) count += mobius(n / m) * (1L << m);
    const Real expected = log2r() * Real(count) / Real(1L << n);
    EXPECT_LT(gap(estimator(atlas, n, EstimatorMode::exact_period).value, expected), 1e-25) << n;
    const Real full = gap(estimator(atlas, n, EstimatorMode::full).value, log2r());
    const Real exact = gap(estimator(atlas, n, EstimatorMode::exact_period).value, log2r());
    EXPECT_GE(exact, full) << n;
    EXPECT_LE(exact * pow2(n / 2), 2 * log2r()) << n;
  }
}

TEST_F(Lyap, RepellingModesMatchWhenNothingAttracts) {
  for (const char* map : {"z^2", "z^2-2"}) {
    PeriodicAtlas atlas(lift_of(map));
    for (int n = 1; n <= 8; ++n) {
      const auto full = estimator(atlas, n, EstimatorMode::full);
      const auto rep = estimator(atlas, n, EstimatorMode::repelling);
      EXPECT_EQ(full.value, rep.value);
      EXPECT_EQ(full.excluded, rep.excluded);
      const auto exact = estimator(atlas, n, EstimatorMode::exact_period);
      const auto rep_exact = estimator(atlas, n, EstimatorMode::repelling_exact);
      EXPECT_EQ(exact.value, rep_exact.value);
      EXPECT_EQ(exact.excluded, rep_exact.excluded);
    }
  }
}

TEST_F(Lyap, RepellingModeDropsParabolicPoint) {
  PeriodicAtlas atlas(lift_of("z^2+1/4"));
  const auto full = estimator(atlas, 1, EstimatorMode::full);
  const auto rep = estimator(atlas, 1, EstimatorMode::repelling);
  EXPECT_EQ(full.value, 0);
  EXPECT_EQ(rep.value, 0);
  EXPECT_EQ(full.excluded_count, 1);  // infinity
  EXPECT_EQ(rep.excluded_count, 3);   // infinity plus the double parabolic point
}

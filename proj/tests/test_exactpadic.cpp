#include <gtest/gtest.h>

#include <random>

#include "lyapunov/exactpadic.hpp"
#include "lyapunov/lyap.hpp"
#include "lyapunov/map_spec.hpp"

using namespace lyapunov;

namespace {

IntPoly poly(std::initializer_list<long> c) {
  std::vector<Integer> v;
  for (long x : c) v.emplace_back(x);
  return IntPoly(std::move(v));
}

ExactRationalMap exact_of(const char* text) { return to_exact_map(parse_map_spec(text)); }

Real log2r() { return log_of(Real(2)); }

class ExactPadic : public ::testing::Test {
 protected:
  void SetUp() override { set_precision_bits(128); }
};

}  // namespace

TEST_F(ExactPadic, PolynomialArithmetic) {
  const IntPoly a = poly({-1, 0, 1});  // z^2 - 1
  const IntPoly b = poly({1, 1});      // z + 1
  EXPECT_EQ(exact_quotient(a, b), poly({-1, 1}));
  EXPECT_EQ(poly_gcd(a * poly({2, 3}), b * poly({5, 0, 7})), b);
  EXPECT_EQ(content(poly({6, -4, 10})), Integer(2));
  EXPECT_EQ(primitive_part(poly({6, -4, 10})), poly({3, -2, 5}));
  EXPECT_EQ(a.derivative(), poly({0, 2}));
  EXPECT_EQ(b.shifted(), poly({0, 1, 1}));
}

TEST_F(ExactPadic, SubresultantMatchesSylvesterDeterminant) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<long> coef(-9, 9);
  std::uniform_int_distribution<int> deg(1, 7);
  for (int trial = 0; trial < 200; ++trial) {
    auto random_poly = [&] {
      std::vector<Integer> c(deg(rng) + 1);
      for (auto& x : c) x = coef(rng);
      if (c.back() == 0) c.back() = 1;
      return IntPoly(std::move(c));
    };
    const IntPoly A = random_poly(), B = random_poly();
    EXPECT_EQ(resultant(A, B), sylvester_resultant(A, B)) << trial;
  }
}

TEST_F(ExactPadic, ResultantBasics) {
  // Res(z^2 - z - 2, 2z) = 2^2 · (product of the roots) = -8.
  EXPECT_EQ(resultant(poly({-2, -1, 1}), poly({0, 2})), Integer(-8));
  EXPECT_EQ(resultant(poly({-1, 0, 1}), poly({1, 1})), Integer(0));
  EXPECT_EQ(resultant(poly({3}), poly({1, 2, 1})), Integer(9));
}

TEST_F(ExactPadic, MakeExactMapClearsDenominators) {
  const ExactRationalMap f = exact_of("z^2 + 1/4");
  EXPECT_EQ(f.numerator, poly({1, 0, 4}));
  EXPECT_EQ(f.denominator, poly({4}));
  EXPECT_EQ(f.degree(), 2);
  EXPECT_THROW(exact_of("z^2 + i/4"), Error);
}

TEST_F(ExactPadic, ComposeChebyshev) {
  const ExactRationalMap f2 = compose_exact(exact_of("z^2-2"), 2);
  EXPECT_EQ(f2.numerator, poly({2, 0, -4, 0, 1}));
  EXPECT_EQ(f2.denominator, poly({1}));
  EXPECT_EQ(fixed_numerator(f2), poly({2, -1, -4, 0, 1}));
}

TEST_F(ExactPadic, ComposeKeepsContentOneAndCoprime) {
  for (const char* map : {"(z^2+1)/(2*z)", "z^2/2 + 3", "(3z^2 - 1)/(z^2 + 2z + 5)", "z^3/4 - z"}) {
    const ExactRationalMap f = exact_of(map);
    for (int n = 1; n <= 4; ++n) {
      const ExactRationalMap fn = compose_exact(f, n);
      Integer g = content(fn.numerator);
      mpz_gcd(g.backend().data(), g.backend().data(), content(fn.denominator).backend().data());
      EXPECT_EQ(g, Integer(1)) << map << " n=" << n;
      EXPECT_LE(poly_gcd(fn.numerator, fn.denominator).degree(), 0) << map << " n=" << n;
      EXPECT_GT(fn.denominator.leading(), 0);
    }
  }
}

TEST_F(ExactPadic, DegreeCap) {
  try {
    compose_exact(exact_of("z^2-1"), 8);
    FAIL() << "expected DegreeCapExceeded";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegreeCapExceeded);
  }
  EXPECT_NO_THROW(compose_exact(exact_of("z^2-1"), 8, 256));
}

TEST_F(ExactPadic, MultiplierProductExamples) {
  const ExactRationalMap cheb = exact_of("z^2-2");
  EXPECT_EQ(multiplier_product(cheb, 1).product, Rational(-8));
  EXPECT_EQ(multiplier_product(cheb, 2).product, Rational(1024));
  const ExactRationalMap power = exact_of("z^2");
  EXPECT_EQ(multiplier_product(power, 1).product, Rational(2));
  EXPECT_EQ(multiplier_product(power, 2).product, Rational(64));
  for (int n = 1; n <= 6; ++n) {
    // z^2: 2^n - 1 points, each with multiplier 2^n.
    Integer expected = boost::multiprecision::pow(Integer(2), static_cast<unsigned>(n * ((1 << n) - 1)));
    EXPECT_EQ(multiplier_product(power, n).product, Rational(expected)) << n;
  }
}

TEST_F(ExactPadic, NewtonMapProductIncludesInfinity) {
  // (z^2+1)/(2z): fixed points +-i (superattracting) and infinity (lambda 2).
  const auto p = multiplier_product(exact_of("(z^2+1)/(2*z)"), 1);
  EXPECT_EQ(p.product, Rational(2));
  EXPECT_EQ(p.deflated_count, 2);
}

TEST_F(ExactPadic, DeflationMatchesFloatingClassification) {
  for (const char* map : {"z^2", "z^2-1", "z^2-2", "(z^2+1)/(2*z)", "z^3-3z"}) {
    const ExactRationalMap f = exact_of(map);
    PeriodicAtlas atlas(to_lift(parse_map_spec(map)));
    for (int n = 1; n <= 6 && power_count(f.degree(), n) <= kDefaultExactDegreeCap; ++n) {
      int superattracting = 0;
      for (const auto& r : atlas.raw(n)) {
        if (r.superattracting()) superattracting += r.multiplicity;
      }
      EXPECT_EQ(multiplier_product(f, n).deflated_count, superattracting) << map << " n=" << n;
    }
  }
}

TEST_F(ExactPadic, PAdicExamples) {
  const PAdicContext two(2), three(3);
  const ExactRationalMap power = exact_of("z^2");
  for (int n = 1; n <= 6; ++n) {
    const PAdicRow row = padic_estimator(power, n, two);
    const long dn = 1L << n;
    EXPECT_EQ(row.valuation_numer, -n * (dn - 1));
    EXPECT_EQ(row.denom, n * dn);
    EXPECT_EQ(row.log_p_coefficient, -Rational(dn - 1, dn));
    EXPECT_LT(boost::multiprecision::abs(row.estimate + (1 - Real(1) / dn) * log2r()), pow2(-120));
  }
  const ExactRationalMap cheb = exact_of("z^2-2");
  const PAdicRow r1 = padic_estimator(cheb, 1, two);
  EXPECT_EQ(r1.valuation_numer, -3);
  EXPECT_EQ(r1.denom, 2);
  EXPECT_EQ(padic_estimator(cheb, 1, three).valuation_numer, 0);
  EXPECT_EQ(padic_estimator(cheb, 1, three).estimate, 0);
}

TEST_F(ExactPadic, ArchimedeanExamples) {
  const ExactRationalMap cheb = exact_of("z^2-2");
  EXPECT_LT(boost::multiprecision::abs(archimedean_crosscheck(cheb, 1) - Real(1.5) * log2r()), pow2(-120));
  EXPECT_LT(boost::multiprecision::abs(archimedean_crosscheck(cheb, 2) - Real(1.25) * log2r()), pow2(-120));
  EXPECT_LT(boost::multiprecision::abs(archimedean_crosscheck(exact_of("z^2"), 3) - Real(0.875) * log2r()), pow2(-120));
}

TEST_F(ExactPadic, RouteEquivalence) {
  for (const char* map : {"z^2-1", "z^2-2", "(z^2+1)/(2*z)", "z^2", "z^2+1/4"}) {
    const ExactRationalMap f = exact_of(map);
    PeriodicAtlas atlas(to_lift(parse_map_spec(map)));
    for (int n = 1; n <= 6; ++n) {
      const Real exact = archimedean_crosscheck(f, n);
      const Real floating = estimator(atlas, n, EstimatorMode::full).value;
      EXPECT_LT(boost::multiprecision::abs(exact - floating), 1e-6) << map << " n=" << n;
    }
  }
}

TEST_F(ExactPadic, ValuationTelescoping) {
  const PAdicContext two(2), three(3);
  for (const char* map : {"z^2-2", "(z^2+1)/(2*z)", "z^2/3 + 1/2"}) {
    const ExactRationalMap f = exact_of(map);
    std::vector<ExactMultiplierProduct> full;
    for (int n = 1; n <= 6; ++n) full.push_back(multiplier_product(f, n));
    for (int n = 1; n <= 6; ++n) {
      for (const auto& ctx : {two, three}) {
        long reconstructed = 0;
        for (int k : divisors(n)) reconstructed += (n / k) * padic_valuation(exact_period_product(full, k), ctx);
        EXPECT_EQ(padic_valuation(full[n - 1].product, ctx), reconstructed) << map << " n=" << n;
      }
    }
  }
}

TEST_F(ExactPadic, ExactPeriodProductOfChebyshev) {
  const ExactRationalMap cheb = exact_of("z^2-2");
  std::vector<ExactMultiplierProduct> full{multiplier_product(cheb, 1), multiplier_product(cheb, 2)};
  // Both points of the 2-cycle {(-1+-sqrt5)/2} have (f^2)' = -4.
  EXPECT_EQ(exact_period_product(full, 2), Rational(16));
  EXPECT_EQ(exact_period_product(full, 1), Rational(-8));
}

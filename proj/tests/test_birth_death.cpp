#include <gtest/gtest.h>

#include <cmath>

#include "wflow/birth_death.hpp"
#include "wflow/errors.hpp"

using namespace wflow;

// Frozen from mpmath maximisation over a fine z grid (increment constant)
// and from the closed-form maximisers (moment constant).
TEST(Constants, CRhoIncrement) {
  EXPECT_NEAR(c_rho_increment(1.5), 1.0, 1e-12);
  EXPECT_NEAR(c_rho_increment(2.0), 1.0, 1e-12);
  EXPECT_NEAR(c_rho_increment(3.0), 3.0, 1e-9);
  EXPECT_NEAR(c_rho_increment(4.5), 10.02831182232489, 1e-9);
  EXPECT_NEAR(c_rho_increment(2.5), 1.875, 1e-12);
}

TEST(Constants, CRhoMoment) {
  EXPECT_NEAR(c_rho_moment(1.0), 1.0, 1e-12);
  EXPECT_NEAR(c_rho_moment(1.5), 1.85537706803084, 1e-12);
  EXPECT_NEAR(c_rho_moment(2.0), 3.0, 1e-12);
  EXPECT_NEAR(c_rho_moment(3.0), 7.0, 1e-12);
}

TEST(Rates, CurvatureByHand) {
  const auto bd = BirthDeathSpec::mm_infty(2.0, 0.5, 40);
  EXPECT_DOUBLE_EQ(curvature(bd), 0.5);
  EXPECT_DOUBLE_EQ(truncated_curvature(bd, 40), 0.5);
  EXPECT_DOUBLE_EQ(bd.growth_C(), 2.0);
  const auto m = BirthDeathSpec::mm1(1.0, 3.0, 10);
  EXPECT_DOUBLE_EQ(curvature(m), 0.0);  // x = 0: 1 + 3 - 1 - 0 = 3, otherwise 0
  const auto alias = BirthDeathSpec::const_birth_linear_death(2.0, 0.5, 40);
  EXPECT_EQ(alias.nu(), bd.nu());
  EXPECT_EQ(bd.generator().lambda().back(), 40 * 0.5);
  EXPECT_THROW(BirthDeathSpec({1.0, -1.0}, {0.0, 1.0}), Error);
  // N = 10: min(b, eta(N-1) + nu(N) - nu(N-1)) = min(b, a + b) = b.
  EXPECT_DOUBLE_EQ(truncated_curvature(BirthDeathSpec::mm_infty(2.0, 0.5, 10), 10), 0.5);
}

TEST(Contraction, MmInftyAllRho) {
  const auto bd = BirthDeathSpec::mm_infty(1.0, 1.0, 40);
  for (double rho : {1.0, 1.5, 2.0, 3.0}) {
    const auto r = contraction_report(bd, DiscreteMeasure::dirac(3), DiscreteMeasure::dirac(7), rho, 1.0, 50);
    EXPECT_LE(r.max_violation, 1e-8) << rho;
    EXPECT_DOUBLE_EQ(r.kappa_N, 1.0);
    // W1 between two M/M/infty chains started at 3 and 7: the four extra
    // particles die independently, so W1(t) = 4 e^{-t}.
    EXPECT_NEAR(r.w1.back(), 4.0 * std::exp(-1.0), 1e-9) << rho;
  }
}

TEST(Contraction, ZeroCurvatureUsesLimit) {
  const auto bd = BirthDeathSpec::mm1(1.0, 1.0, 60);
  const auto r = contraction_report(bd, DiscreteMeasure::dirac(5), DiscreteMeasure::dirac(9), 1.5, 1.0, 20);
  EXPECT_LE(r.max_violation, 1e-8);
}

TEST(Moments, BoundHolds) {
  const auto bd = BirthDeathSpec::linear(1.0, 0.3, 0.5, 200);
  for (double alpha : {1.0, 2.0, 3.0}) {
    const auto m = bd_moment_bound(bd, DiscreteMeasure({0, 4}, {0.5, 0.5}), alpha, 2.0);
    EXPECT_LE(m.moment, m.bound) << alpha;
    EXPECT_NEAR(m.c_rho, c_rho_moment(alpha), 1e-12);
  }
}

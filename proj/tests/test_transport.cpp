#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "support/lp_simplex.hpp"
#include "support/oracles.hpp"
#include "wflow/errors.hpp"
#include "wflow/transport.hpp"

using namespace wflow;

TEST(LpOracle, SmallKnownProblem) {
  // min -x1 - x2 s.t. x1 + 2 x2 + s1 = 4, 3 x1 + x2 + s2 = 6.
  const auto r = oracle::solve_lp({{1, 2, 1, 0}, {3, 1, 0, 1}}, {4, 6}, {-1, -1, 0, 0});
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.value, -2.8, 1e-12);
  EXPECT_FALSE(oracle::solve_lp({{1, 1}}, {-1}, {1, 1}).feasible);
}

TEST(Wasserstein, MatchesLinearProgram) {
  std::mt19937_64 rng(2024);
  for (double rho : {1.0, 1.5, 2.0, 3.0})
    for (int rep = 0; rep < 40; ++rep) {
      const auto a = oracle::random_measure(rng, 6, -3.0, 3.0);
      const auto b = oracle::random_measure(rng, 6, -2.0, 4.0);
      const double lp = oracle::transport_lp(a.support(), a.weights(), b.support(), b.weights(), rho);
      EXPECT_NEAR(wasserstein_pow(a, b, rho), lp, 1e-9 * std::max(1.0, lp)) << rho << " " << rep;
    }
}

TEST(Wasserstein, CouplingHasTheRightMarginals) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    const auto a = oracle::random_measure(rng, 12, 0.0, 1.0);
    const auto b = oracle::random_measure(rng, 12, 0.0, 1.0);
    std::vector<double> ra(a.size()), rb(b.size());
    for (const auto& c : monotone_coupling(a, b)) {
      EXPECT_GT(c.mass, 0.0);
      ra[c.i] += c.mass;
      rb[c.j] += c.mass;
    }
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(ra[i], a.weights()[i], 1e-14);
    for (std::size_t j = 0; j < b.size(); ++j) EXPECT_NEAR(rb[j], b.weights()[j], 1e-14);
  }
}

TEST(Wasserstein, UniformClosedForms) {
  const auto u01 = GridMeasure::uniform(0.0, 1.0, 5);
  const auto u02 = GridMeasure::uniform(0.0, 2.0, 3);
  for (double rho : {1.0, 1.5, 2.0, 3.0}) {
    // Quantiles u and 2u.
    EXPECT_NEAR(wasserstein_pow(u01, u02, rho), 1.0 / (rho + 1.0), 1e-14);
    EXPECT_NEAR(wasserstein_pow(u01, u01.shifted(0.7), rho), std::pow(0.7, rho), 1e-14);
  }
  // Atom against a uniform: \int_0^1 |u - 1/2|^2 du.
  EXPECT_NEAR(wasserstein_pow(DiscreteMeasure::dirac(0.5), u01, 2.0), 1.0 / 12.0, 1e-15);
}

TEST(Potentials, AtomicDualityGap) {
  std::mt19937_64 rng(99);
  for (double rho : {1.5, 2.0, 3.0})
    for (int rep = 0; rep < 40; ++rep) {
      const auto a = oracle::random_measure(rng, 6, -3.0, 3.0);
      const auto b = oracle::random_measure(rng, 6, -3.0, 3.0);
      const auto pair = potentials(a, b, rho);
      EXPECT_LE(max_dual_violation(pair), 1e-12);
      const double w = wasserstein_pow(a, b, rho);
      EXPECT_LE(std::abs(duality_gap(pair, a, b, rho)), 1e-7 * std::max(1.0, w));
      EXPECT_EQ(pair.psi_values()[0], 0.0);
    }
  EXPECT_THROW(potentials(DiscreteMeasure::dirac(0), DiscreteMeasure::dirac(1), 1.0), Error);
}

TEST(Potentials, BatchTransformMatchesPointwise) {
  std::mt19937_64 rng(3);
  for (double rho : {1.5, 2.0, 3.0}) {
    const auto a = oracle::random_measure(rng, 15, 0.0, 5.0);
    const auto b = oracle::random_measure(rng, 15, 0.0, 5.0);
    const auto pair = potentials(a, b, rho);
    std::vector<double> q = uniform_grid(-2.0, 7.0, 300);
    q.insert(q.end(), a.support().begin(), a.support().end());
    q.insert(q.end(), b.support().begin(), b.support().end());
    std::sort(q.begin(), q.end());
    const auto ps = pair.psi(q), pt = pair.psi_tilde(q);
    for (std::size_t i = 0; i < q.size(); ++i) {
      EXPECT_NEAR(ps[i], pair.psi(q[i]), 1e-12 * std::max(1.0, std::abs(ps[i])));
      EXPECT_NEAR(pt[i], pair.psi_tilde(q[i]), 1e-12 * std::max(1.0, std::abs(pt[i])));
    }
    std::reverse(q.begin(), q.end());
    EXPECT_THROW(pair.psi(q), Error);
  }
}

TEST(Potentials, GridTranslation) {
  // U[0,1] -> U[1,2]: T(x) = x + 1 and W_2^2 = 1.
  const auto m1 = GridMeasure::uniform(0.0, 1.0, 8);
  const auto m2 = m1.shifted(1.0);
  const auto pair = potentials(m1, m2, 2.0);
  for (std::size_t k = 0; k < pair.x().size(); ++k) EXPECT_NEAR(pair.map_values()[k], pair.x()[k] + 1.0, 1e-14);
  EXPECT_NEAR(std::abs(duality_gap(pair, m1, m2, 2.0)), 0.0, 1e-12);
  EXPECT_NEAR(optimal_map_at(m1, GridMeasure::uniform(0.0, 2.0, 4), 0.3), 0.6, 1e-15);
}

TEST(Potentials, GridDualityGapOnSmoothedLaws) {
  const auto m1 = laplace_smooth(DiscreteMeasure({0.0, 1.0}, {0.3, 0.7}), 0.2, 800);
  const auto m2 = laplace_smooth(DiscreteMeasure({-1.0, 2.0}, {0.5, 0.5}), 0.4, 800);
  for (double rho : {1.5, 2.0, 3.0}) {
    const auto pair = potentials(m1, m2, rho);
    const double w = wasserstein_pow(m1, m2, rho);
    EXPECT_LE(std::abs(duality_gap(pair, m1, m2, rho)), 1e-7 * w) << rho;
  }
}

TEST(Bounds, PotentialMomentBoundOnRandomAtoms) {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 50; ++rep) {
    const auto a = oracle::random_measure(rng, 20, -4.0, 4.0);
    const auto b = oracle::random_measure(rng, 20, -4.0, 4.0);
    for (double eps : {0.0, 0.5}) {
      const auto chk = potential_moment_bound(a, b, 2.0, eps);
      EXPECT_TRUE(chk.holds()) << chk.lhs << " > " << chk.rhs;
    }
  }
}

TEST(Bounds, TranslatedMapMomentByHand) {
  // T(x) = 2x from U[0,1] to U[0,2], T = 2 beyond 1 and 0 below 0.
  const auto m1 = GridMeasure::uniform(0.0, 1.0, 4);
  const auto m2 = GridMeasure::uniform(0.0, 2.0, 4);
  EXPECT_NEAR(translated_map_moment(m1, m2, 0.5, 1.0), 1.75, 1e-14);
  EXPECT_NEAR(translated_map_moment(m1, m2, 0.5, 2.0), 3.5 / 3.0 + 2.0, 1e-13);
  EXPECT_NEAR(translated_map_moment(m1, m2, -0.5, 1.0), 0.25, 1e-14);
  EXPECT_NEAR(translated_map_moment(m1, m2, 0.0, 3.0), 2.0 * 2.0 * 2.0 / 4.0, 1e-13);
}

TEST(Bounds, TranslatedMapBoundWithConstantPhi) {
  const auto m1 = laplace_smooth(DiscreteMeasure::dirac(0.0), 0.5, 2000);
  const auto m2 = laplace_smooth(DiscreteMeasure({-1.0, 1.0}, {0.5, 0.5}), 0.3, 2000);
  const double y = 0.4;
  // F(F^{-1}(u) + y) - u <= (e^{y/eta} - 1) u for the Laplace law; the
  // truncated table needs a little room at the edges.
  const double k = 2.0 * (std::exp(y / 0.5) - 1.0);
  auto phi = [k](double) { return k; };
  for (double delta : {0.0, 1.0, double(INFINITY)}) {
    const auto chk = translated_map_bound(m1, m2, y, 2.0, phi, delta);
    EXPECT_TRUE(chk.holds()) << delta;
  }
  EXPECT_THROW(translated_map_bound(m1, m2, y, 2.0, [](double) { return 0.0; }, 1.0), Error);
  EXPECT_TRUE(translated_map_bound_bounded_below(m1, GridMeasure::uniform(0.0, 1.0), y, 2.0).holds());
}

TEST(Csv, PotentialTables) {
  const auto pair = potentials(DiscreteMeasure({0.0, 1.0}, {0.5, 0.5}), DiscreteMeasure::dirac(0.5), 2.0);
  std::stringstream s;
  write_psi_csv(s, pair);
  EXPECT_EQ(s.str().substr(0, 6), "x,psi\n");
  std::stringstream m;
  EXPECT_THROW(write_map_csv(m, pair), Error);
}

TEST(Wasserstein, TwoAtomExample) {
  const DiscreteMeasure a({0, 1}, {0.5, 0.5}), b({0, 2}, {0.5, 0.5});
  const double lp = oracle::transport_lp(a.support(), a.weights(), b.support(), b.weights(), 2.0);
  EXPECT_NEAR(lp, 0.5, 1e-15);  // 0 -> 0 and 1 -> 2
  EXPECT_NEAR(wasserstein_pow(a, b, 2.0), lp, 1e-15);
}

TEST(Bounds, ShiftPotentialIsLinear) {
  // m2 = m1 + c, rho = 2: psi(x) = 2 c x, psi_tilde(y) = c^2 - 2 c y is an optimal
  // pair, and V^1(psi) = 2|c| E|X - EX|.
  std::mt19937_64 rng(40);
  for (double c : {-1.5, 0.25, 2.0}) {
    const auto m1 = oracle::random_measure(rng, 10, -2.0, 2.0);
    const auto m2 = m1.shifted(c);
    std::vector<double> psi, pst;
    for (double x : m1.support()) psi.push_back(2.0 * c * x);
    for (double y : m2.support()) pst.push_back(c * c - 2.0 * c * y);
    const PotentialPair pair(2.0, m1.support(), psi, m2.support(), pst);
    EXPECT_NEAR(duality_gap(pair, m1, m2, 2.0), 0.0, 1e-12);
    const double mu = mean(m1);
    double mad = 0.0;
    for (std::size_t k = 0; k < m1.size(); ++k) mad += m1.weights()[k] * std::abs(m1.support()[k] - mu);
    const double v = generalized_variance(m1, Tabulated{m1.support(), psi}, 1.0);
    EXPECT_NEAR(v, 2.0 * std::abs(c) * mad, 1e-12);
    const auto chk = potential_moment_bound(m1, m2, 2.0, 0.0);
    EXPECT_LE(v, chk.rhs);
    EXPECT_TRUE(chk.holds());
  }
}

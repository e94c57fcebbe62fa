#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "support/oracles.hpp"
#include "wflow/errors.hpp"
#include "wflow/jump_process.hpp"
#include "wflow/transport.hpp"

using namespace wflow;

TEST(Generator, RejectsBadRows) {
  EXPECT_THROW(JumpGeneratorSpec::from_dense({0, 1}, {1, 1}, {{0, 0.9}, {1, 0}}), Error);
  EXPECT_THROW(JumpGeneratorSpec::from_dense({0, 1}, {-1, 1}, {{0, 1}, {1, 0}}), Error);
  EXPECT_THROW(JumpGeneratorSpec::from_dense({1, 0}, {1, 1}, {{0, 1}, {1, 0}}), Error);
}

TEST(Generator, FakeJumpsMoveIntoIntensity) {
  const auto g = JumpGeneratorSpec::without_fake_jumps({0, 1}, {2, 1}, {{{0, 0.25}, {1, 0.75}}, {{0, 1.0}}});
  EXPECT_DOUBLE_EQ(g.lambda()[0], 1.5);
  ASSERT_EQ(g.row(0).size(), 1u);
  EXPECT_DOUBLE_EQ(g.row(0)[0].prob, 1.0);
  EXPECT_EQ(g.lambda_bar(), 1.5);
  EXPECT_THROW(g.index_of(0.5), Error);
}

// Frozen from scipy.stats.poisson.sf: smallest M with P(N > M) < tol.
TEST(Uniformization, PoissonTruncationFrozen) {
  struct Case {
    double lt, tol;
    std::size_t n;
    double tail;
  };
  const Case cases[] = {{0.5, 1e-10, 10, 7.740840739228265e-12},
                        {5.0, 1e-10, 25, 3.049970780085191e-11},
                        {40.0, 1e-12, 92, 6.235665510039797e-13},
                        {200.0, 1e-10, 296, 9.23626685741005e-11}};
  for (const auto& c : cases) {
    const auto cut = poisson_truncation(c.lt, c.tol);
    EXPECT_EQ(cut.n_max, c.n) << c.lt;
    EXPECT_NEAR(cut.tail / c.tail, 1.0, 1e-6) << c.lt;
  }
}

TEST(Uniformization, MatchesMatrixExponential) {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    const auto gen = oracle::random_generator(rng, 12);
    const auto p0 = oracle::random_probs(rng, 12, 3);
    for (double t : {0.01, 0.7, 3.0}) {
      double err = 0.0;
      const auto p = propagate(gen, p0, t, 1e-14, &err);
      const auto ref = oracle::expm_row(gen, p0, t);
      EXPECT_LT(err, 1e-14);
      for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], ref[i], 1e-13) << t;
    }
  }
}

TEST(Uniformization, ChapmanKolmogorovAndMass) {
  std::mt19937_64 rng(81);
  const auto gen = oracle::random_generator(rng, 20);
  const auto p0 = oracle::random_probs(rng, 20, 5);
  const auto direct = propagate(gen, p0, 1.3, 1e-15);
  const auto two = propagate(gen, propagate(gen, p0, 0.4, 1e-15), 0.9, 1e-15);
  double mass = 0.0;
  for (std::size_t i = 0; i < direct.size(); ++i) {
    EXPECT_NEAR(direct[i], two[i], 1e-14);
    EXPECT_GE(direct[i], 0.0);
    mass += direct[i];
  }
  EXPECT_NEAR(mass, 1.0, 1e-13);
}

TEST(Uniformization, TwoStateClosedForm) {
  // Rates a: 0 -> 1 and b: 1 -> 0. P(X_t = 1 | X_0 = 0) = a/(a+b) (1 - e^{-(a+b)t}).
  const double a = 1.0, b = 2.0, t = 0.8;
  const auto gen = JumpGeneratorSpec::from_dense({0, 1}, {a, b}, {{0, 1}, {1, 0}});
  const auto p = propagate(gen, {1.0, 0.0}, t, 1e-15);
  EXPECT_NEAR(p[1], a / (a + b) * (1.0 - std::exp(-(a + b) * t)), 1e-15);
}

TEST(Layers, SumToMarginalAndSatisfyInequalities) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 5; ++rep) {
    const auto gen = oracle::random_generator(rng, 20);
    const auto p0 = DiscreteMeasure::on_states(gen.states(), oracle::random_probs(rng, 20, 4));
    const auto stack = layer_stack(gen, p0, 1.0, 60);
    const auto pt = propagate(gen, gen.to_vector(p0), 1.0, 1e-15);
    for (std::size_t x = 0; x < gen.size(); ++x) {
      double s = 0.0;
      for (const auto& layer : stack.layers) s += layer[x];
      EXPECT_NEAR(s, pt[x], 1e-13);
    }
    const auto rep_ = layer_inequality_report(gen, p0, 0.5, 1.0, 15);
    EXPECT_LE(rep_.max_violation(), 1e-10);
  }
}

TEST(Layers, ZeroLayerIsNoJump) {
  const auto gen = JumpGeneratorSpec::from_dense({0, 1, 2}, {1.0, 0.5, 0.0}, {{0, 1, 0}, {0, 0, 1}, {0, 0, 1}});
  const auto stack = layer_stack(gen, DiscreteMeasure::dirac(0), 2.0, 5);
  EXPECT_NEAR(stack.layers[0][0], std::exp(-2.0), 1e-15);
  // One jump 0 -> 1 then no jump: \int_0^2 e^{-s} e^{-0.5 (2 - s)} ds.
  const double one = std::exp(-1.0) * (1.0 - std::exp(-1.0)) / 0.5;
  EXPECT_NEAR(stack.layers[1][1], one, 1e-14);
}

// Frozen from mpmath at 30 digits.
TEST(CEta, FrozenValues) {
  EXPECT_NEAR(c_eta(1.0, 0.5, 1.0), 5.2327879774038618, 1e-13);
  EXPECT_NEAR(c_eta(2.5, 1.0, 0.3), 5.1675106551831372, 1e-13);
  EXPECT_NEAR(c_eta(0.7, 2.0, 2.0), 4.7771414430131623, 1e-13);
  EXPECT_NEAR(c_eta_limit(1.0, 0.5), 1.4446678610097661, 1e-14);
  EXPECT_NEAR(c_eta_limit(2.5, 1.0), 2.2842204516172103, 1e-14);
  double prev = INFINITY;
  for (int k = 1; k <= 8; ++k) {
    const double d = std::abs(c_eta(1.0, 0.5, std::pow(10.0, -k)) - c_eta_limit(1.0, 0.5));
    EXPECT_LT(d, prev);
    prev = d;
  }
  EXPECT_THROW(c_eta(1.0, 0.5, 0.0), Error);
}

TEST(Bounds, KernelAndMomentLemma) {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 10; ++rep) {
    const auto gen = oracle::random_generator(rng, 20);
    const auto p0 = DiscreteMeasure::on_states(gen.states(), oracle::random_probs(rng, 20, 3));
    std::vector<double> f(gen.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::sin(gen.states()[i]) * 3.0;
    for (double t : {1e-4, 0.1, 1.0, 2.0}) {
      const auto kb = kernel_moment_bound(gen, p0, t, f, 0.5);
      EXPECT_LE(kb.lhs, kb.rhs * (1 + 1e-10));
    }
    for (double alpha : {1.0, 2.0, 3.0, 2.5}) {
      const auto mb = moment_growth_bound(gen, p0, alpha, 1.5);
      EXPECT_LE(mb.exact, mb.bound);
    }
  }
}

TEST(Simulation, DeterministicAcrossThreads) {
  std::mt19937_64 rng(1);
  const auto gen = oracle::random_generator(rng, 8);
  const auto p0 = DiscreteMeasure::dirac(gen.states()[0]);
  const auto a = simulate_endpoints(gen, p0, 1.0, 5000, 77, 1);
  const auto b = simulate_endpoints(gen, p0, 1.0, 5000, 77, 4);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, simulate_endpoints(gen, p0, 1.0, 5000, 78, 1));
}

TEST(Simulation, WithinDkwEnvelope) {
  // Poisson-type chain 0 -> 1 -> ... at rate 1.5, capped at 30.
  std::vector<double> states, lam;
  std::vector<std::vector<double>> k(31, std::vector<double>(31, 0.0));
  for (int i = 0; i <= 30; ++i) {
    states.push_back(i);
    lam.push_back(i < 30 ? 1.5 : 0.0);
    if (i < 30) k[i][i + 1] = 1.0;
  }
  k[30][29] = 1.0;
  const auto gen = JumpGeneratorSpec::from_dense(states, lam, k);
  const std::size_t n = 100000;
  const auto emp = simulate_paths(gen, DiscreteMeasure::dirac(0), 2.0, n, 123);
  const auto exact = uniformized_marginal(gen, DiscreteMeasure::dirac(0), 2.0, 1e-14);
  // Kolmogorov distance on the integer states.
  double ks = 0.0;
  for (int x = 0; x <= 30; ++x) ks = std::max(ks, std::abs(emp.cdf(x) - exact.cdf(x)));
  EXPECT_LE(ks, dkw_epsilon(n, 0.01));
  // Mean of Poisson(3): CLT at 5 sigma.
  EXPECT_NEAR(mean(emp), 3.0, 5.0 * std::sqrt(3.0 / n));
}

TEST(Simulation, DkwEpsilon) {
  EXPECT_NEAR(dkw_epsilon(100000, 0.01), std::sqrt(std::log(200.0) / 200000.0), 1e-16);
}

namespace {

// Poisson generator on {0..n}: rate lam, k = delta_{x+1}; the last state only steps back
// and is out of reach at the tested horizons.
JumpGeneratorSpec poisson_generator(double lam, int n) {
  std::vector<double> states, rates;
  std::vector<std::vector<double>> k(n + 1, std::vector<double>(n + 1, 0.0));
  for (int i = 0; i <= n; ++i) {
    states.push_back(i);
    rates.push_back(lam);
    k[i][i < n ? i + 1 : n - 1] = 1.0;
  }
  return JumpGeneratorSpec::from_dense(states, rates, k);
}

}  // namespace

TEST(Poisson, MarginalIsPoisson) {
  const double lam = 1.3, t = 1.7;
  const auto gen = poisson_generator(lam, 60);
  std::vector<double> p0(61, 0.0);
  p0[0] = 1.0;
  const auto p = propagate(gen, p0, t, 1e-15);
  double term = std::exp(-lam * t);
  for (int n = 0; n <= 25; ++n) {
    EXPECT_NEAR(p[n], term, 1e-15) << n;
    term *= lam * t / (n + 1);
  }
}

TEST(Poisson, SandwichKernelAndMoment) {
  const auto gen = poisson_generator(1.0, 60);
  const auto d0 = DiscreteMeasure::dirac(0);
  EXPECT_LE(layer_inequality_report(gen, d0, 1.0, 2.0, 10).max_violation(), 1e-12);
  const auto kb = kernel_moment_bound(gen, d0, 1.0, gen.states(), 1.0);
  EXPECT_LE(kb.lhs, kb.rhs);
  const auto mb = moment_growth_bound(gen, d0, 1.0, 1.0);
  EXPECT_NEAR(mb.exact, 1.0, 1e-13);  // E N_1 = lambda t
  EXPECT_LE(mb.exact, mb.bound);
}

TEST(Poisson, MonteCarloMeanAndW1) {
  const auto gen = poisson_generator(1.0, 60);
  const std::size_t n = 100000;
  const auto d0 = DiscreteMeasure::dirac(0);
  const auto emp = simulate_paths(gen, d0, 2.0, n, 2026);
  EXPECT_NEAR(mean(emp), 2.0, 4.0 * std::sqrt(2.0 / n));
  const auto exact = uniformized_marginal(gen, d0, 2.0, 1e-14);
  const double range = std::max(emp.support().back(), exact.support().back());
  EXPECT_LE(wasserstein(emp, exact, 1.0), 5.0 * dkw_epsilon(n, 0.01) * range);
}

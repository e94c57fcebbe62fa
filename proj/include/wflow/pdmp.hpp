#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "wflow/evolution.hpp"
#include "wflow/jump_process.hpp"
#include "wflow/measures.hpp"

namespace wflow {

struct Drift {
  enum class Kind { zero, constant, neg_tanh };
  Kind kind = Kind::zero;
  double c = 0.0;  // value for `constant`

  static Drift zero() { return {}; }
  static Drift constant(double c) { return {Kind::constant, c}; }
  static Drift neg_tanh() { return {Kind::neg_tanh, 0.0}; }

  double operator()(double x) const;
  double sup_norm() const;
  double lipschitz() const;
};

// Constant, or piecewise linear through (nodes, values) and flat beyond.
struct Intensity {
  std::vector<double> nodes;
  std::vector<double> values;

  static Intensity constant(double v) { return {{}, {v}}; }
  static Intensity tabulated(std::vector<double> nodes, std::vector<double> values);

  double operator()(double x) const;
  double bar() const;
  bool is_zero() const { return bar() == 0.0; }
};

struct JumpKernel {
  enum class Kind { uniform_pm, shift };
  Kind kind = Kind::shift;
  double param = 0.0;  // M for uniform_pm, d for shift

  static JumpKernel uniform_pm(double M) { return {Kind::uniform_pm, M}; }
  static JumpKernel shift(double d) { return {Kind::shift, d}; }

  double bound() const;
  bool continuous() const { return kind == Kind::uniform_pm; }
  // H(x, u) = inf{z : k(x, (-inf, z]) > u}.
  double sample(double x, double u) const;
};

class PdmpSpec {
 public:
  // Declared constants <= 0 are replaced by the exact ones of the named
  // families. Declared values are checked on a sample grid.
  PdmpSpec(Drift drift, Intensity intensity, JumpKernel kernel, double v_sup = 0.0, double lambda_bar = 0.0,
           double jump_bound = 0.0);

  const Drift& drift() const { return drift_; }
  const Intensity& intensity() const { return intensity_; }
  const JumpKernel& kernel() const { return kernel_; }
  double v_sup() const { return v_sup_; }
  double lambda_bar() const { return lambda_bar_; }
  double jump_bound() const { return jump_bound_; }

 private:
  Drift drift_;
  Intensity intensity_;
  JumpKernel kernel_;
  double v_sup_, lambda_bar_, jump_bound_;
};

// Phi(x, s), closed form for each drift kind (s < 0 runs the flow backwards).
double flow(const PdmpSpec& spec, double x, double s);

struct MuApproximation {
  double mu = 1.0;
  std::vector<double> grid;
  std::vector<double> flow_target;  // Phi(x_i, 1/mu), before snapping
  JumpGeneratorSpec generator;
  std::size_t clamped_nodes = 0;    // nodes whose flow or jump mass left the grid
};

// Pure jump chain with intensity mu + lambda and kernel k^mu on a uniform grid.
MuApproximation mu_generator(const PdmpSpec& spec, double mu, const std::vector<double>& grid);

// Probability of each node's cell [x_i - h/2, x_i + h/2] (end cells unbounded).
std::vector<double> discretize(const GridMeasure& m, const std::vector<double>& grid);
// Law of Phi(X, t) for X ~ m.
GridMeasure flow_pushforward(const PdmpSpec& spec, const GridMeasure& m, double t);

using InitialLaw = std::function<double(double)>;  // quantile function
InitialLaw initial_law(const DiscreteMeasure& m);
InitialLaw initial_law(const GridMeasure& m);

struct PathSample {
  std::vector<double> start, end;
  std::size_t bound_violations = 0;  // paths with |X_t - X_0| > ||V|| t + M N_t (or mu-chain analogue)
  double max_bound_excess = 0.0;
};

// mu = +infinity simulates the PDMP itself (exact flow between thinned events);
// finite mu simulates the continuous-state mu-chain.
PathSample simulate_process(const PdmpSpec& spec, const InitialLaw& p0, double t, double mu, std::size_t n_paths,
                            std::uint64_t seed, unsigned threads = 0);
DiscreteMeasure simulate_pdmp(const PdmpSpec& spec, const InitialLaw& p0, double t, std::size_t n_paths,
                              std::uint64_t seed, unsigned threads = 0);

struct MuStudyOptions {
  std::size_t identity_steps = 100;
  double solver_tol = 1e-13;
  EvolutionOptions evolution;
  unsigned threads = 0;
};

struct MuStudyRow {
  double mu = 0.0;
  double identity_residual = 0.0;
  std::size_t flagged_cells = 0;
  double cauchy_w = 0.0;         // W_rho(P^mu_t, P^{2 mu_max}_t)
  double flow_w1 = NAN;          // W_1(P^mu_t, flow pushforward), lambda = 0 only
  double potential_cauchy = NAN; // sup_window |L^mu psi^mu - L^{next} psi^{next}|
  double edge_mass = 0.0;        // mass on the two end nodes at t
};

struct MuStudy {
  double grid_step = 0.0;
  double reference_mu = 0.0;
  std::vector<MuStudyRow> rows;
  bool cauchy_decreasing = true;
  bool flow_decreasing = true;
};

MuStudy mu_convergence_study(const PdmpSpec& specX, const PdmpSpec& specY, const GridMeasure& p0X,
                             const GridMeasure& p0Y, double rho, double t, const std::vector<double>& mu_list,
                             const std::vector<double>& grid, const MuStudyOptions& opts = {});

struct PropagationConstants {
  double moment_bound = 0.0;
  double c_t = 0.0;
};

// sup_mu E|X^mu_t - X_0|^q bound and the tail constant c_t for initial (c0, C0).
PropagationConstants propagation_constants(const PdmpSpec& spec, double c0, double C0, double t, double q,
                                           double mu = std::numeric_limits<double>::infinity());

struct MomentSimCheck {
  double mu = 0.0;
  double mean = 0.0;     // sample mean of |X_t - X_0|^q
  double sigma = 0.0;    // standard error
  double bound = 0.0;
  bool holds() const { return mean <= bound + 4.0 * sigma; }
};
MomentSimCheck simulated_moment_check(const PdmpSpec& spec, const InitialLaw& p0, double t, double q, double mu,
                                      std::size_t n_paths, std::uint64_t seed, unsigned threads = 0);

// Marginal of the grid mu-chain at t as a histogram GridMeasure.
GridMeasure mu_chain_marginal(const PdmpSpec& spec, const GridMeasure& p0, double mu, double t,
                              const std::vector<double>& grid, double tol = 1e-13);

}  // namespace wflow

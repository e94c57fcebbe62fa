#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "wflow/measures.hpp"

namespace wflow {

struct KernelEntry {
  std::size_t target;
  double prob;
};

// Pure jump generator on a finite sorted state set:
// Lf(x) = lambda(x) sum_y k(x,y) (f(y) - f(x)).
class JumpGeneratorSpec {
 public:
  JumpGeneratorSpec(std::vector<double> states, std::vector<double> lambda,
                    std::vector<std::vector<KernelEntry>> kernel);

  static JumpGeneratorSpec from_dense(std::vector<double> states, std::vector<double> lambda,
                                      const std::vector<std::vector<double>>& kernel);
  // Moves self-loop mass of the kernel into a lower intensity, so that
  // lambda(x) k(x,{x}) = 0. Duplicate targets are merged.
  static JumpGeneratorSpec without_fake_jumps(std::vector<double> states, std::vector<double> lambda,
                                              std::vector<std::vector<KernelEntry>> kernel);

  const std::vector<double>& states() const { return states_; }
  const std::vector<double>& lambda() const { return lambda_; }
  const std::vector<KernelEntry>& row(std::size_t i) const { return kernel_[i]; }
  std::size_t size() const { return states_.size(); }
  double lambda_bar() const { return lambda_bar_; }

  std::size_t index_of(double x) const;  // throws a domain error if x is not a state
  std::vector<double> to_vector(const DiscreteMeasure& m) const;

 private:
  std::vector<double> states_;
  std::vector<double> lambda_;
  std::vector<std::vector<KernelEntry>> kernel_;
  double lambda_bar_ = 0.0;
};

// Smallest M with P(Poisson(lt) > M) < tol, and that tail.
struct PoissonCut {
  std::size_t n_max;
  double tail;
};
PoissonCut poisson_truncation(double lt, double tol);

// p0 e^{tQ} by uniformization at rate lambda_bar. truncation_error < tol.
std::vector<double> propagate(const JumpGeneratorSpec& gen, const std::vector<double>& p0, double t, double tol,
                              double* truncation_error = nullptr);

DiscreteMeasure uniformized_marginal(const JumpGeneratorSpec& gen, const DiscreteMeasure& p0, double t,
                                     double tol = 1e-10, double* truncation_error = nullptr);

struct LayerStack {
  double t = 0.0;
  std::vector<std::vector<double>> layers;   // P_{n,t}, n = 0..n_max
  std::vector<std::vector<double>> q_chain;  // Q_n, n = 0..n_max
  double truncation_error = 0.0;
};

// Exact jump-count layers: uniformization of the chain (state, #jumps), where
// fake uniformization events leave the count unchanged.
LayerStack layer_stack(const JumpGeneratorSpec& gen, const DiscreteMeasure& p0, double t, std::size_t n_max,
                       double tol = 1e-14);

struct LayerReport {
  double sandwich_upper = 0.0;   // max (P_{n,t} - t^n/n! Q_n)^+
  double sandwich_lower = 0.0;   // max (e^{-lbar t} t^n/n! Q_n - P_{n,t})^+
  double equivalence = 0.0;      // max (P_{n,s} - e^{lbar (t-s)^+} (s/t)^n P_{n,t})^+
  double q_mass_excess = 0.0;    // max (Q_n(all) - lbar^n)^+ / max(1, lbar^n)
  double max_violation() const;
};

LayerReport layer_inequality_report(const JumpGeneratorSpec& gen, const DiscreteMeasure& p0, double s, double t,
                                    std::size_t n_max, double tol = 1e-14);

double c_eta(double lambda_bar, double eta, double t);
double c_eta_limit(double lambda_bar, double eta);

struct KernelBound {
  double lhs = 0.0;
  double rhs = 0.0;
  double c_eta_t = 0.0;
};

// \int\int lambda |f(y)| k(x,dy) P_t(dx) <= C_eta(t) (sum_{n>=1} \int |f|^{1+eta} dP_{n,t} / t)^{1/(1+eta)}.
KernelBound kernel_moment_bound(const JumpGeneratorSpec& gen, const DiscreteMeasure& p0, double t,
                                const std::vector<double>& f, double eta, double tol = 1e-14);

struct MomentBound {
  double exact = 0.0;
  double bound = 0.0;
  double kbar = 0.0;
};

MomentBound moment_growth_bound(const JumpGeneratorSpec& gen, const DiscreteMeasure& p0, double alpha, double t,
                                double tol = 1e-14);

// Thinning at rate lambda_bar; endpoint of path i depends only on (seed, i).
std::vector<double> simulate_endpoints(const JumpGeneratorSpec& gen, const DiscreteMeasure& p0, double t,
                                       std::size_t n_paths, std::uint64_t seed, unsigned threads = 0);
DiscreteMeasure simulate_paths(const JumpGeneratorSpec& gen, const DiscreteMeasure& p0, double t,
                               std::size_t n_paths, std::uint64_t seed, unsigned threads = 0);

// Empirical measure of a sample (equal weights).
DiscreteMeasure empirical_measure(const std::vector<double>& sample);

// sqrt(log(2/alpha) / (2n)).
double dkw_epsilon(std::size_t n, double alpha);

}  // namespace wflow

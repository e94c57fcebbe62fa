#pragma once

#include <iosfwd>
#include <vector>

#include "wflow/jump_process.hpp"
#include "wflow/measures.hpp"
#include "wflow/transport.hpp"

namespace wflow {

// Lf(x) = lambda(x) sum_y k(x,y) (f(y) - f(x)), f given on every state.
std::vector<double> apply_generator(const JumpGeneratorSpec& gen, const std::vector<double>& f);
// f looked up at each state (domain error if a state is missing).
Tabulated apply_generator(const JumpGeneratorSpec& gen, const Tabulated& f);

// -\int L psi dmX - \int L~ psi~ dmY for the potentials of (mX, mY).
double rhs_integrand(const JumpGeneratorSpec& genX, const JumpGeneratorSpec& genY, const DiscreteMeasure& mX,
                     const DiscreteMeasure& mY, double rho);

enum class Quadrature { simpson, trapezoid };

struct EvolutionOptions {
  Quadrature quadrature = Quadrature::simpson;
  double solver_tol = 1e-14;
  // Split cells where the coupling changes structure.
  bool split_kinks = true;
  // Cells with more crossings than this are integrated unsplit and flagged.
  std::size_t max_kinks_per_cell = 64;
  // Exponent offset for the diagnostic \int |L psi_t|^{1+delta} dP_t.
  double diag_delta = 0.5;
  unsigned threads = 0;
};

struct EvolutionReport {
  std::vector<double> time_grid;
  std::vector<double> w_values;     // W_rho^rho(P_t, P~_t)
  std::vector<double> integrand;    // right limit at t = 0
  std::vector<double> cumulative;   // \int_0^t integrand
  std::vector<double> residual;     // |W(t) - W(0) - cumulative|
  std::vector<double> diagnostics;  // \int |L psi_t|^{1+delta} dP_t
  std::vector<std::size_t> kinks;   // crossings located in cell (t_{i-1}, t_i]; index 0 unused
  std::vector<std::size_t> flagged_cells;
  bool right_limit_at_zero = true;
  double max_residual = 0.0;
};

EvolutionReport verify_identity(const JumpGeneratorSpec& genX, const JumpGeneratorSpec& genY,
                                const DiscreteMeasure& p0X, const DiscreteMeasure& p0Y, double rho, double t_end,
                                std::size_t n_steps, const EvolutionOptions& opts = {});

struct IncrementCheck {
  double lhs = 0.0;  // W(t+h) - W(t)
  double rhs = 0.0;  // -\int psi_t d(P_{t+h} - P_t) - \int psi~_t d(P~_{t+h} - P~_t)
};
// Potentials at t are dual-feasible at t+h, so lhs >= rhs.
IncrementCheck increment_inequality(const JumpGeneratorSpec& genX, const JumpGeneratorSpec& genY,
                                    const DiscreteMeasure& p0X, const DiscreteMeasure& p0Y, double rho, double t,
                                    double h, double tol = 1e-14);

// `t,w_rho_rho,integrand,cumulative,residual,diag`
void write_csv(std::ostream& out, const EvolutionReport& r);

}  // namespace wflow

#pragma once

#include <cmath>
#include <functional>
#include <iosfwd>
#include <memory>
#include <utility>
#include <vector>

#include "wflow/measures.hpp"

namespace wflow {

// One cell of the monotone (quantile) coupling of two atomic measures.
struct CouplingCell {
  std::size_t i;
  std::size_t j;
  double mass;
};

std::vector<CouplingCell> monotone_coupling(const DiscreteMeasure& m1, const DiscreteMeasure& m2);

// \int_0^1 |Q1(u) - Q2(u)|^rho du, exact for piecewise-linear quantiles.
double wasserstein_pow_pieces(const std::vector<QuantilePiece>& a, const std::vector<QuantilePiece>& b,
                              double rho);

template <class A, class B>
double wasserstein_pow(const A& m1, const B& m2, double rho) {
  return wasserstein_pow_pieces(quantile_pieces(m1), quantile_pieces(m2), rho);
}

template <class A, class B>
double wasserstein(const A& m1, const B& m2, double rho) {
  return std::pow(wasserstein_pow(m1, m2, rho), 1.0 / rho);
}

// Kantorovich pair for cost |x-y|^rho, normalised so psi(leftmost)=0.
class PotentialPair {
 public:
  // Tabulated atomic pair. Off-table values are rho-transforms of the table.
  PotentialPair(double rho, std::vector<double> x, std::vector<double> psi, std::vector<double> y,
                std::vector<double> psi_tilde,
                std::vector<std::pair<std::size_t, std::size_t>> coupled = {});
  static PotentialPair zero(double rho, const std::vector<double>& x, const std::vector<double>& y);

  double rho() const { return rho_; }
  bool is_grid() const { return static_cast<bool>(grid_); }
  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& psi_values() const { return psi_; }
  const std::vector<double>& y() const { return y_; }
  const std::vector<double>& psi_tilde_values() const { return psi_tilde_; }
  // T at the source grid nodes (grid pairs only; empty otherwise).
  const std::vector<double>& map_values() const { return map_; }
  // Index pairs of the monotone coupling (atomic pairs only).
  const std::vector<std::pair<std::size_t, std::size_t>>& coupled() const { return coupled_; }

  double psi(double x) const;
  double psi_tilde(double y) const;
  // Same at sorted points; off-table values in O((n + m) log m) total.
  std::vector<double> psi(const std::vector<double>& xs) const;
  std::vector<double> psi_tilde(const std::vector<double>& ys) const;

  struct GridData;
  const GridData* grid_data() const { return grid_.get(); }

 private:
  friend PotentialPair potentials(const GridMeasure&, const GridMeasure&, double);
  PotentialPair() = default;

  double rho_ = 2.0;
  std::vector<double> x_, psi_, y_, psi_tilde_, map_;
  std::vector<std::pair<std::size_t, std::size_t>> coupled_;
  std::shared_ptr<const GridData> grid_;
};

struct PotentialOptions {
  // Close psi_tilde by the rho-transform over the whole support and verify
  // feasibility/slackness. O(n m); the evolution loop switches it off.
  bool close_and_check = true;
  double tol = 1e-9;
};

PotentialPair potentials(const DiscreteMeasure& m1, const DiscreteMeasure& m2, double rho,
                         const PotentialOptions& opts = {});
PotentialPair potentials(const GridMeasure& m1, const GridMeasure& m2, double rho);

// T = F2^{-1} o F1 at x (continuous inverse; constant beyond the grid).
double optimal_map_at(const GridMeasure& m1, const GridMeasure& m2, double x);
Tabulated optimal_map(const GridMeasure& m1, const GridMeasure& m2);

double duality_value(const PotentialPair& pair, const DiscreteMeasure& m1, const DiscreteMeasure& m2);
double duality_value(const PotentialPair& pair, const GridMeasure& m1, const GridMeasure& m2);

// max over tabulated (x, y) of -psi(x) - psi_tilde(y) - |x-y|^rho.
double max_dual_violation(const PotentialPair& pair);

// W^rho - (dual value). Throws a feasibility error if the pair is infeasible.
double duality_gap(const PotentialPair& pair, const DiscreteMeasure& m1, const DiscreteMeasure& m2, double rho);
double duality_gap(const PotentialPair& pair, const GridMeasure& m1, const GridMeasure& m2, double rho);

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds() const { return lhs <= rhs; }
};

// max(V^{1+eps}(psi), V^{1+eps}(psi_tilde)) against 2^{rho(1+eps)} (moment sum).
BoundCheck potential_moment_bound(const DiscreteMeasure& m1, const DiscreteMeasure& m2, double rho, double eps);
BoundCheck potential_moment_bound(const GridMeasure& m1, const GridMeasure& m2, double rho, double eps);

struct PhiCheck {
  double max_excess = 0.0;  // max_u [F(F^{-1}(u)+y) - u - \int_0^u phi]
  double worst_u = 0.0;
};

// Checks F(F^{-1}(u)+y) - u <= \int_0^u phi on u_i = (i+1/2)/n.
PhiCheck validate_phi(const GridMeasure& m1, double y, const std::function<double(double)>& phi,
                      std::size_t n_u = 10000);

// \int |T(x + shift)|^q m1(dx), exact.
double translated_map_moment(const GridMeasure& m1, const GridMeasure& m2, double shift, double q);

// lhs = \int |T(x-y)|^q dm1; rhs = E|Y|^q + || |Y|^q ||_{1+1/delta} ||phi(U)||_{1+delta}.
// delta may be 0 or +infinity. Throws a hypothesis error if phi is not admissible.
BoundCheck translated_map_bound(const GridMeasure& m1, const GridMeasure& m2, double y, double q,
                                const std::function<double(double)>& phi, double delta);
// Target bounded below: rhs = |F2^{-1}(0+)|^q + E|Y|^q.
BoundCheck translated_map_bound_bounded_below(const GridMeasure& m1, const GridMeasure& m2, double y,
                                              double q);

struct ShiftedMapBound {
  double lhs_plus = 0.0;
  double lhs_minus = 0.0;
  double rhs = 0.0;
};
// \int |T(x +- y)|^q dm1 <= c e^{Cy} \int |x|^q dm2 for a source with tail constants (c, C).
ShiftedMapBound shifted_map_moment_bound(const GridMeasure& m1, const GridMeasure& m2, double y, double q,
                                         const TailConstants& tail);

// CSV: `x,psi`, `y,psi_tilde`, `x,T`.
void write_psi_csv(std::ostream& out, const PotentialPair& pair);
void write_psi_tilde_csv(std::ostream& out, const PotentialPair& pair);
void write_map_csv(std::ostream& out, const PotentialPair& pair);

}  // namespace wflow

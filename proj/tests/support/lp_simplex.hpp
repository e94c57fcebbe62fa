#pragma once

#include <vector>

namespace oracle {

struct LpResult {
  bool feasible = false;
  double value = 0.0;
  std::vector<double> x;
};

// min c.x subject to A x = b, x >= 0, by the dense two-phase simplex method
// with Bland's rule. Rows with b < 0 are negated first. Small problems only.
LpResult solve_lp(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                  const std::vector<double>& c);

// Optimal transport cost sum c_ij pi_ij over couplings of (a, b) with
// c_ij = |x_i - y_j|^rho.
double transport_lp(const std::vector<double>& x, const std::vector<double>& a, const std::vector<double>& y,
                    const std::vector<double>& b, double rho);

}  // namespace oracle

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "wflow/jump_process.hpp"
#include "wflow/measures.hpp"

namespace wflow {

// Birth-death rates on {0..N}. eta and nu hold the raw (untruncated) rates;
// the generator uses eta(N) = 0.
class BirthDeathSpec {
 public:
  // growth_C <= 0 means "use the smallest C with eta(x) <= C (1 + x)".
  BirthDeathSpec(std::vector<double> eta, std::vector<double> nu, double growth_C = 0.0);

  // eta = a, nu(x) = b x.
  static BirthDeathSpec mm_infty(double a, double b, std::size_t N);
  // Same rates as mm_infty, named by birth and death rate.
  static BirthDeathSpec const_birth_linear_death(double birth, double death, std::size_t N);
  // eta = a, nu(x) = b 1_{x >= 1}.
  static BirthDeathSpec mm1(double a, double b, std::size_t N);
  // eta(x) = a0 + a1 x, nu(x) = b x.
  static BirthDeathSpec linear(double a0, double a1, double b, std::size_t N);

  std::size_t N() const { return eta_.size() - 1; }
  const std::vector<double>& eta() const { return eta_; }
  const std::vector<double>& nu() const { return nu_; }
  double lip_eta() const { return lip_eta_; }
  double lip_nu() const { return lip_nu_; }
  double growth_C() const { return growth_C_; }

  // Same rates cut at a lower level M <= N.
  BirthDeathSpec truncated(std::size_t M) const;
  JumpGeneratorSpec generator() const;

 private:
  std::vector<double> eta_, nu_;
  double lip_eta_ = 0.0, lip_nu_ = 0.0, growth_C_ = 0.0;
};

// inf_{x < N} eta(x) + nu(x+1) - eta(x+1) - nu(x), raw rates.
double curvature(const BirthDeathSpec& bd);
// Same with eta(x+1) dropped when x + 1 = M.
double truncated_curvature(const BirthDeathSpec& bd, std::size_t M);

// sup_z (|z+1|^rho - |z|^rho - rho z|z|^{rho-2}) / (1 + 1_{rho>2} |z|^{rho-2}).
double c_rho_increment(double rho);
// sup_x (1+x)((1+x)^rho - x^rho) / (1 + x^rho).
double c_rho_moment(double rho);

struct ContractionOptions {
  double solver_tol = 1e-14;
  // Simpson sub-intervals per cell for the integral form (rho > 2).
  std::size_t sub = 4;
};

struct ContractionReport {
  double rho = 1.0;
  double kappa = 0.0;
  double kappa_N = 0.0;  // the rate actually certified
  double lip = 0.0;      // Lip(eta) + Lip(nu)
  double C_rho = 0.0;
  bool kappa_limit_used = false;  // kappa (rho - 1) = 0
  bool iterated_available = false;
  std::vector<double> t, w1, bound1, w_rho, bound_rho, bound_iterated, violation;
  double max_violation = 0.0;
};

ContractionReport contraction_report(const BirthDeathSpec& bd, const DiscreteMeasure& p0X,
                                     const DiscreteMeasure& p0Y, double rho, double t_end, std::size_t n_steps,
                                     const ContractionOptions& opts = {});

struct BdMomentCheck {
  double moment = 0.0;
  double bound = 0.0;
  double c_rho = 0.0;
};
// E[X_t^rho] <= (E[X_0^rho] + 1) e^{c_rho C t} - 1.
BdMomentCheck bd_moment_bound(const BirthDeathSpec& bd, const DiscreteMeasure& p0, double rho, double t,
                              double tol = 1e-14);

// `t,w1,bound1,w_rho,bound_rho,violation`
void write_csv(std::ostream& out, const ContractionReport& r);

}  // namespace wflow

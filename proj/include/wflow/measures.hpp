#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace wflow {

// Finitely supported probability measure. Support strictly increasing,
// weights positive. cumulative()[k] = sum of weights[0..k] and
// tail()[k] = sum of weights[k+1..], both computed once.
class DiscreteMeasure {
 public:
  DiscreteMeasure(std::vector<double> support, std::vector<double> weights,
                  double mass_tol = 1e-12);

  static DiscreteMeasure dirac(double x);
  // Sorts, merges duplicate points and drops zero weights.
  static DiscreteMeasure from_unsorted(const std::vector<double>& xs,
                                       const std::vector<double>& ws,
                                       double mass_tol = 1e-12);
  // Probability vector over `states` (may contain zeros) -> measure on the
  // states with positive mass.
  static DiscreteMeasure on_states(const std::vector<double>& states,
                                   const std::vector<double>& probs,
                                   double mass_tol = 1e-12);

  const std::vector<double>& support() const { return support_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& cumulative() const { return cumulative_; }
  const std::vector<double>& tail() const { return tail_; }
  std::size_t size() const { return support_.size(); }
  double total_mass() const { return cumulative_.back(); }

  double cdf(double x) const;
  // Translate by a.
  DiscreteMeasure shifted(double a) const;

 private:
  std::vector<double> support_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  std::vector<double> tail_;
};

// Continuous measure with piecewise-linear CDF on a grid; F(x_0)=0,
// F(x_n)=1, strictly increasing. An accurate complementary CDF may be
// supplied for tail work; otherwise it is 1-F.
class GridMeasure {
 public:
  GridMeasure(std::vector<double> grid, std::vector<double> cdf);
  GridMeasure(std::vector<double> grid, std::vector<double> cdf, std::vector<double> ccdf);

  static GridMeasure uniform(double a, double b, std::size_t cells = 1);
  // Every atom spread uniformly over its cell [x_i - h/2, x_i + h/2] on a
  // uniform grid of nodes. All weights must be positive.
  static GridMeasure histogram(const std::vector<double>& nodes, const std::vector<double>& probs);

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& cdf_values() const { return cdf_; }
  const std::vector<double>& ccdf_values() const { return ccdf_; }
  std::size_t size() const { return grid_.size(); }

  double cdf(double x) const;
  double ccdf(double x) const;
  GridMeasure shifted(double a) const;

 private:
  std::vector<double> grid_;
  std::vector<double> cdf_;
  std::vector<double> ccdf_;
};

struct TailConstants {
  double c = 1.0;
  double C = 1.0;
};

// Quantile function as pieces linear in u: on (u_lo, u_hi) the quantile runs
// linearly from q_lo to q_hi (constant for atoms).
struct QuantilePiece {
  double u_lo, u_hi, q_lo, q_hi;
};
std::vector<QuantilePiece> quantile_pieces(const DiscreteMeasure& m);
std::vector<QuantilePiece> quantile_pieces(const GridMeasure& m);

// F^{-1}(u) = inf{x : F(x) > u}.
double quantile(const DiscreteMeasure& m, double u);
double quantile(const GridMeasure& m, double u);

double moment(const DiscreteMeasure& m, double q);
double moment(const GridMeasure& m, double q);
double mean(const DiscreteMeasure& m);
double mean(const GridMeasure& m);

// Function known at finitely many points.
struct Tabulated {
  std::vector<double> x;
  std::vector<double> y;

  // Exact lookup (relative tolerance 1e-12); throws a domain error if absent.
  double at(double xq) const;
  // Piecewise-linear interpolation, constant beyond the ends.
  double interp(double xq) const;
};

// V^q_m(phi) = \int |phi - m(phi)|^q dm.
double generalized_variance(const DiscreteMeasure& m, const Tabulated& phi, double q);
// phi interpolated linearly between grid nodes.
double generalized_variance(const GridMeasure& m, const Tabulated& phi, double q);

// Law of X + eta Z, Z with density exp(-|z|)/2, sampled on `grid`.
GridMeasure laplace_smooth(const DiscreteMeasure& m, double eta, const std::vector<double>& grid);
// Uniform grid over [min - 22 eta, max + 22 eta] with `cells` cells.
GridMeasure laplace_smooth(const DiscreteMeasure& m, double eta, std::size_t cells = 4096);

struct TailFit {
  TailConstants constants;
  std::vector<double> y;
  std::vector<double> max_left_ratio;   // max_x F(x+y)/F(x)
  std::vector<double> max_right_ratio;  // max_x Fbar(x-y)/Fbar(x)
};

// c = 1 and the smallest C with both ratio bounds on the sampled (x, y).
TailFit tail_ratio_constants(const GridMeasure& m, const std::vector<double>& y_grid);
// Smallest c >= 1 for a prescribed C.
double tail_ratio_c_for(const GridMeasure& m, const std::vector<double>& y_grid, double C);

// Mean of |a + (b - a)s|^q over s in [0, 1].
double mean_abs_pow_linear(double a, double b, double q);

std::vector<double> uniform_grid(double lo, double hi, std::size_t cells);

// CSV: `x,weight` and `x,cdf`.
void write_csv(std::ostream& out, const DiscreteMeasure& m);
void write_csv(std::ostream& out, const GridMeasure& m);
DiscreteMeasure read_discrete_csv(std::istream& in);
GridMeasure read_grid_csv(std::istream& in);

}  // namespace wflow

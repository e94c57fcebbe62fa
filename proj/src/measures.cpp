#include "wflow/measures.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include "wflow/csv.hpp"
#include "wflow/errors.hpp"

namespace wflow {

namespace {

void require_increasing(const std::vector<double>& v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]))
      throw Error(ErrorKind::domain, std::string(what) + ": non-finite entry");
    if (i > 0 && !(v[i] > v[i - 1]))
      throw Error(ErrorKind::domain, std::string(what) + ": not strictly increasing at index " +
                                         std::to_string(i));
  }
}

double laplace_cdf(double z) { return z < 0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z); }
double laplace_ccdf(double z) { return z < 0 ? 1.0 - 0.5 * std::exp(z) : 0.5 * std::exp(-z); }

std::vector<double> complement_of(const std::vector<double>& F) {
  std::vector<double> out(F.size());
  for (std::size_t i = 0; i < F.size(); ++i) out[i] = 1.0 - F[i];
  if (!out.empty()) out.back() = 0.0;
  return out;
}

}  // namespace

// ---------------------------------------------------------------- discrete

DiscreteMeasure::DiscreteMeasure(std::vector<double> support, std::vector<double> weights,
                                 double mass_tol)
    : support_(std::move(support)), weights_(std::move(weights)) {
  if (support_.empty() || support_.size() != weights_.size())
    throw Error(ErrorKind::domain, "discrete measure: support and weights must be nonempty and of equal length");
  require_increasing(support_, "discrete measure support");
  cumulative_.resize(weights_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i]))
      throw Error(ErrorKind::domain, "discrete measure: weight at index " + std::to_string(i) + " is not positive");
    acc += weights_[i];
    cumulative_[i] = acc;
  }
  tail_.assign(weights_.size(), 0.0);
  double rest = 0.0;
  for (std::size_t i = weights_.size(); i-- > 0;) {
    tail_[i] = rest;
    rest += weights_[i];
  }
  if (std::abs(acc - 1.0) > mass_tol)
    throw Error(ErrorKind::domain, "discrete measure: total mass " + format_double(acc) + " differs from 1");
}

DiscreteMeasure DiscreteMeasure::dirac(double x) { return DiscreteMeasure({x}, {1.0}); }

DiscreteMeasure DiscreteMeasure::from_unsorted(const std::vector<double>& xs,
                                               const std::vector<double>& ws, double mass_tol) {
  if (xs.size() != ws.size()) throw Error(ErrorKind::domain, "discrete measure: size mismatch");
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
  std::vector<double> s, w;
  for (auto i : idx) {
    if (ws[i] < 0) throw Error(ErrorKind::domain, "discrete measure: negative weight");
    if (ws[i] == 0) continue;
    if (!s.empty() && s.back() == xs[i]) {
      w.back() += ws[i];
    } else {
      s.push_back(xs[i]);
      w.push_back(ws[i]);
    }
  }
  return DiscreteMeasure(std::move(s), std::move(w), mass_tol);
}

DiscreteMeasure DiscreteMeasure::on_states(const std::vector<double>& states,
                                           const std::vector<double>& probs, double mass_tol) {
  if (states.size() != probs.size()) throw Error(ErrorKind::domain, "discrete measure: size mismatch");
  std::vector<double> s, w;
  s.reserve(states.size());
  w.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (probs[i] < 0) throw Error(ErrorKind::domain, "discrete measure: negative probability");
    if (probs[i] > 0) {
      s.push_back(states[i]);
      w.push_back(probs[i]);
    }
  }
  return DiscreteMeasure(std::move(s), std::move(w), mass_tol);
}

double DiscreteMeasure::cdf(double x) const {
  auto it = std::upper_bound(support_.begin(), support_.end(), x);
  if (it == support_.begin()) return 0.0;
  return cumulative_[static_cast<std::size_t>(it - support_.begin()) - 1];
}

DiscreteMeasure DiscreteMeasure::shifted(double a) const {
  auto s = support_;
  for (auto& x : s) x += a;
  return DiscreteMeasure(std::move(s), weights_, std::abs(total_mass() - 1.0) + 1e-12);
}

// -------------------------------------------------------------------- grid

GridMeasure::GridMeasure(std::vector<double> grid, std::vector<double> cdf)
    : GridMeasure(std::move(grid), cdf, complement_of(cdf)) {}

GridMeasure::GridMeasure(std::vector<double> grid, std::vector<double> cdf, std::vector<double> ccdf)
    : grid_(std::move(grid)), cdf_(std::move(cdf)), ccdf_(std::move(ccdf)) {
  if (grid_.size() < 2 || grid_.size() != cdf_.size() || grid_.size() != ccdf_.size())
    throw Error(ErrorKind::domain, "grid measure: need at least two nodes and matching cdf length");
  require_increasing(grid_, "grid measure nodes");
  if (cdf_.front() != 0.0 || cdf_.back() != 1.0)
    throw Error(ErrorKind::domain, "grid measure: cdf must run from 0 to 1");
  require_increasing(cdf_, "grid measure cdf");
  if (ccdf_.front() != 1.0 || ccdf_.back() != 0.0)
    throw Error(ErrorKind::domain, "grid measure: complementary cdf must run from 1 to 0");
  // In the lower half 1 - F rounds to 1 and carries no digits, so only
  // monotonicity is asked for there.
  for (std::size_t i = 1; i < ccdf_.size(); ++i)
    if (!(ccdf_[i] < ccdf_[i - 1]) && !(cdf_[i] < 0.5 && ccdf_[i] <= ccdf_[i - 1]))
      throw Error(ErrorKind::domain, "grid measure: complementary cdf not strictly decreasing");
}

GridMeasure GridMeasure::uniform(double a, double b, std::size_t cells) {
  auto g = uniform_grid(a, b, cells);
  std::vector<double> F(g.size()), Fb(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    F[i] = static_cast<double>(i) / static_cast<double>(cells);
    Fb[i] = static_cast<double>(cells - i) / static_cast<double>(cells);
  }
  return GridMeasure(std::move(g), std::move(F), std::move(Fb));
}

GridMeasure GridMeasure::histogram(const std::vector<double>& nodes, const std::vector<double>& probs) {
  if (nodes.size() < 2 || nodes.size() != probs.size())
    throw Error(ErrorKind::domain, "histogram: need at least two nodes");
  const double h = (nodes.back() - nodes.front()) / static_cast<double>(nodes.size() - 1);
  const std::size_t n = nodes.size();
  std::vector<double> edges(n + 1), F(n + 1), Fb(n + 1);
  for (std::size_t i = 0; i < n; ++i) edges[i] = nodes[i] - 0.5 * h;
  edges[n] = nodes.back() + 0.5 * h;
  double total = 0.0;
  for (double p : probs) total += p;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    F[i] = acc / total;
    acc += probs[i];
  }
  F[n] = 1.0;
  acc = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    acc += probs[i];
    Fb[i] = acc / total;
  }
  Fb[0] = 1.0;
  Fb[n] = 0.0;
  return GridMeasure(std::move(edges), std::move(F), std::move(Fb));
}

double GridMeasure::cdf(double x) const {
  if (x <= grid_.front()) return 0.0;
  if (x >= grid_.back()) return 1.0;
  auto k = static_cast<std::size_t>(std::upper_bound(grid_.begin(), grid_.end(), x) - grid_.begin()) - 1;
  const double s = (x - grid_[k]) / (grid_[k + 1] - grid_[k]);
  return cdf_[k] + s * (cdf_[k + 1] - cdf_[k]);
}

double GridMeasure::ccdf(double x) const {
  if (x <= grid_.front()) return 1.0;
  if (x >= grid_.back()) return 0.0;
  auto k = static_cast<std::size_t>(std::upper_bound(grid_.begin(), grid_.end(), x) - grid_.begin()) - 1;
  const double s = (x - grid_[k]) / (grid_[k + 1] - grid_[k]);
  return ccdf_[k] + s * (ccdf_[k + 1] - ccdf_[k]);
}

GridMeasure GridMeasure::shifted(double a) const {
  auto g = grid_;
  for (auto& x : g) x += a;
  return GridMeasure(std::move(g), cdf_, ccdf_);
}

// --------------------------------------------------------------- quantiles

std::vector<QuantilePiece> quantile_pieces(const DiscreteMeasure& m) {
  std::vector<QuantilePiece> out;
  out.reserve(m.size());
  double lo = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    const double hi = k + 1 == m.size() ? 1.0 : m.cumulative()[k];
    if (hi > lo) out.push_back({lo, hi, m.support()[k], m.support()[k]});
    lo = std::max(lo, hi);
  }
  return out;
}

std::vector<QuantilePiece> quantile_pieces(const GridMeasure& m) {
  std::vector<QuantilePiece> out;
  out.reserve(m.size());
  const auto& g = m.grid();
  const auto& F = m.cdf_values();
  for (std::size_t k = 0; k + 1 < g.size(); ++k) out.push_back({F[k], F[k + 1], g[k], g[k + 1]});
  return out;
}

double quantile(const DiscreteMeasure& m, double u) {
  if (!(u > 0.0 && u < 1.0)) throw Error(ErrorKind::domain, "quantile: u must lie in (0,1)");
  const auto& c = m.cumulative();
  auto it = std::upper_bound(c.begin(), c.end(), u);
  if (it == c.end()) return m.support().back();
  return m.support()[static_cast<std::size_t>(it - c.begin())];
}

double quantile(const GridMeasure& m, double u) {
  if (!(u > 0.0 && u < 1.0)) throw Error(ErrorKind::domain, "quantile: u must lie in (0,1)");
  const auto& F = m.cdf_values();
  const auto& g = m.grid();
  auto k = static_cast<std::size_t>(std::upper_bound(F.begin(), F.end(), u) - F.begin()) - 1;
  const double s = (u - F[k]) / (F[k + 1] - F[k]);
  return g[k] + s * (g[k + 1] - g[k]);
}

// ----------------------------------------------------------------- moments

double mean_abs_pow_linear(double a, double b, double q) {
  if (a == b) return std::pow(std::abs(a), q);
  if ((a < 0) != (b < 0) && a != 0 && b != 0) {
    const double A = std::abs(a), B = std::abs(b);
    return (std::pow(A, q + 1) + std::pow(B, q + 1)) / ((q + 1) * (A + B));
  }
  const double lo = std::min(std::abs(a), std::abs(b));
  const double hi = std::max(std::abs(a), std::abs(b));
  const double d = hi - lo;
  if (d > 1e-4 * hi) return (std::pow(hi, q + 1) - std::pow(lo, q + 1)) / ((q + 1) * d);
  const double m = 0.5 * (lo + hi);
  const double r2 = (d / m) * (d / m);
  return std::pow(m, q) * (1.0 + q * (q - 1) / 24.0 * r2 + q * (q - 1) * (q - 2) * (q - 3) / 1920.0 * r2 * r2);
}

double moment(const DiscreteMeasure& m, double q) {
  if (!(q > 0)) throw Error(ErrorKind::domain, "moment: q must be positive");
  double acc = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) acc += m.weights()[k] * std::pow(std::abs(m.support()[k]), q);
  return acc;
}

double moment(const GridMeasure& m, double q) {
  if (!(q > 0)) throw Error(ErrorKind::domain, "moment: q must be positive");
  double acc = 0.0;
  const auto& g = m.grid();
  const auto& F = m.cdf_values();
  for (std::size_t k = 0; k + 1 < g.size(); ++k) acc += (F[k + 1] - F[k]) * mean_abs_pow_linear(g[k], g[k + 1], q);
  return acc;
}

double mean(const DiscreteMeasure& m) {
  double acc = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) acc += m.weights()[k] * m.support()[k];
  return acc;
}

double mean(const GridMeasure& m) {
  double acc = 0.0;
  const auto& g = m.grid();
  const auto& F = m.cdf_values();
  for (std::size_t k = 0; k + 1 < g.size(); ++k) acc += (F[k + 1] - F[k]) * 0.5 * (g[k] + g[k + 1]);
  return acc;
}

double Tabulated::at(double xq) const {
  auto it = std::lower_bound(x.begin(), x.end(), xq - 1e-12 * std::max(1.0, std::abs(xq)));
  if (it == x.end() || std::abs(*it - xq) > 1e-12 * std::max(1.0, std::abs(xq)))
    throw Error(ErrorKind::domain, "tabulated function undefined at " + format_double(xq));
  return y[static_cast<std::size_t>(it - x.begin())];
}

double Tabulated::interp(double xq) const {
  if (x.empty()) throw Error(ErrorKind::domain, "tabulated function is empty");
  if (xq <= x.front()) return y.front();
  if (xq >= x.back()) return y.back();
  auto k = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), xq) - x.begin()) - 1;
  const double s = (xq - x[k]) / (x[k + 1] - x[k]);
  return y[k] + s * (y[k + 1] - y[k]);
}

double generalized_variance(const DiscreteMeasure& m, const Tabulated& phi, double q) {
  if (q < 1) throw Error(ErrorKind::domain, "generalized variance: q must be >= 1");
  std::vector<double> v(m.size());
  double avg = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    v[k] = phi.at(m.support()[k]);
    avg += m.weights()[k] * v[k];
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) acc += m.weights()[k] * std::pow(std::abs(v[k] - avg), q);
  return acc;
}

double generalized_variance(const GridMeasure& m, const Tabulated& phi, double q) {
  if (q < 1) throw Error(ErrorKind::domain, "generalized variance: q must be >= 1");
  const auto& g = m.grid();
  const auto& F = m.cdf_values();
  std::vector<double> v(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) v[k] = phi.at(g[k]);
  double avg = 0.0;
  for (std::size_t k = 0; k + 1 < g.size(); ++k) avg += (F[k + 1] - F[k]) * 0.5 * (v[k] + v[k + 1]);
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < g.size(); ++k)
    acc += (F[k + 1] - F[k]) * mean_abs_pow_linear(v[k] - avg, v[k + 1] - avg, q);
  return acc;
}

// --------------------------------------------------------------- smoothing

std::vector<double> uniform_grid(double lo, double hi, std::size_t cells) {
  if (cells == 0 || !(hi > lo)) throw Error(ErrorKind::domain, "uniform grid: need hi > lo and cells >= 1");
  std::vector<double> g(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cells);
  g.back() = hi;
  return g;
}

GridMeasure laplace_smooth(const DiscreteMeasure& m, double eta, const std::vector<double>& grid) {
  if (!(eta > 0)) throw Error(ErrorKind::domain, "laplace smoothing: eta must be positive");
  if (grid.size() < 2) throw Error(ErrorKind::domain, "laplace smoothing: grid too small");
  std::vector<double> F(grid.size()), Fb(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double a = 0.0, b = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      const double z = (grid[i] - m.support()[k]) / eta;
      a += m.weights()[k] * laplace_cdf(z);
      b += m.weights()[k] * laplace_ccdf(z);
    }
    F[i] = a;
    Fb[i] = b;
  }
  const double lost = F.front() + Fb.back();
  if (lost > 1e-9)
    throw Error(ErrorKind::coverage, "laplace smoothing: grid misses mass " + format_double(lost));
  const double mass = 1.0 - lost;
  const double F0 = F.front(), Fbn = Fb.back();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    F[i] = (F[i] - F0) / mass;
    Fb[i] = (Fb[i] - Fbn) / mass;
  }
  F.front() = 0.0;
  F.back() = 1.0;
  Fb.front() = 1.0;
  Fb.back() = 0.0;
  return GridMeasure(grid, std::move(F), std::move(Fb));
}

GridMeasure laplace_smooth(const DiscreteMeasure& m, double eta, std::size_t cells) {
  const double pad = 22.0 * eta;
  return laplace_smooth(m, eta, uniform_grid(m.support().front() - pad, m.support().back() + pad, cells));
}

// ------------------------------------------------------------- tail ratios

namespace {

constexpr double kTruncatedTail = 1e-9;

void tail_ratios(const GridMeasure& m, const std::vector<double>& y_grid, std::vector<double>& left,
                 std::vector<double>& right) {
  if (y_grid.empty()) throw Error(ErrorKind::domain, "tail ratios: empty y grid");
  const auto& g = m.grid();
  const auto& F = m.cdf_values();
  const auto& Fb = m.ccdf_values();
  const std::size_t n = g.size() - 1;
  if (n < 2) throw Error(ErrorKind::unboundable, "tail ratios: grid has no interior nodes");
  if (F[1] > kTruncatedTail)
    throw Error(ErrorKind::unboundable, "tail ratios: cdf vanishes at a finite left endpoint with mass " +
                                            format_double(F[1]) + " in the first cell");
  if (Fb[n - 1] > kTruncatedTail)
    throw Error(ErrorKind::unboundable, "tail ratios: finite right endpoint with mass " +
                                            format_double(Fb[n - 1]) + " in the last cell");
  left.assign(y_grid.size(), 0.0);
  right.assign(y_grid.size(), 0.0);
  for (std::size_t j = 0; j < y_grid.size(); ++j) {
    const double y = y_grid[j];
    if (!(y > 0)) throw Error(ErrorKind::domain, "tail ratios: y must be positive");
    for (std::size_t k = 1; k < n; ++k) {
      if (F[k] <= 0 || Fb[k] <= 0)
        throw Error(ErrorKind::unboundable, "tail ratios: cdf hits 0 or 1 inside the grid");
      left[j] = std::max(left[j], m.cdf(g[k] + y) / F[k]);
      right[j] = std::max(right[j], m.ccdf(g[k] - y) / Fb[k]);
    }
  }
}

}  // namespace

TailFit tail_ratio_constants(const GridMeasure& m, const std::vector<double>& y_grid) {
  TailFit fit;
  fit.y = y_grid;
  tail_ratios(m, y_grid, fit.max_left_ratio, fit.max_right_ratio);
  double C = 0.0;
  for (std::size_t j = 0; j < y_grid.size(); ++j) {
    const double r = std::max({fit.max_left_ratio[j], fit.max_right_ratio[j], 1.0});
    C = std::max(C, std::log(r) / y_grid[j]);
  }
  fit.constants = {1.0, C > 0 ? C : std::numeric_limits<double>::min()};
  return fit;
}

double tail_ratio_c_for(const GridMeasure& m, const std::vector<double>& y_grid, double C) {
  std::vector<double> left, right;
  tail_ratios(m, y_grid, left, right);
  double c = 1.0;
  for (std::size_t j = 0; j < y_grid.size(); ++j)
    c = std::max(c, std::max(left[j], right[j]) * std::exp(-C * y_grid[j]));
  return c;
}

// --------------------------------------------------------------------- csv

void write_csv(std::ostream& out, const DiscreteMeasure& m) {
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < m.size(); ++k) rows.push_back({m.support()[k], m.weights()[k]});
  write_rows(out, "x,weight", rows);
}

void write_csv(std::ostream& out, const GridMeasure& m) {
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < m.size(); ++k) rows.push_back({m.grid()[k], m.cdf_values()[k]});
  write_rows(out, "x,cdf", rows);
}

DiscreteMeasure read_discrete_csv(std::istream& in) {
  auto rows = read_rows(in, "x,weight");
  std::vector<double> x, w;
  for (const auto& r : rows) {
    if (r.size() != 2) throw Error(ErrorKind::domain, "csv: expected two columns");
    x.push_back(r[0]);
    w.push_back(r[1]);
  }
  return DiscreteMeasure(std::move(x), std::move(w));
}

GridMeasure read_grid_csv(std::istream& in) {
  auto rows = read_rows(in, "x,cdf");
  std::vector<double> x, F;
  for (const auto& r : rows) {
    if (r.size() != 2) throw Error(ErrorKind::domain, "csv: expected two columns");
    x.push_back(r[0]);
    F.push_back(r[1]);
  }
  return GridMeasure(std::move(x), std::move(F));
}

}  // namespace wflow

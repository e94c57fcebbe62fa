#include "wflow/transport.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <ostream>

#include "wflow/csv.hpp"
#include "wflow/errors.hpp"

namespace wflow {

namespace {

double cost(double x, double y, double rho) {
  const double d = std::abs(x - y);
  if (rho == 2.0) return d * d;
  if (rho == 1.0) return d;
  return std::pow(d, rho);
}

// Average of d/dz |z|^rho = rho |z|^{rho-2} z along the segment za -> zb.
double mean_cost_slope(double za, double zb, double rho) {
  auto fprime = [rho](double z) { return z == 0.0 ? 0.0 : rho * std::pow(std::abs(z), rho - 1) * (z > 0 ? 1 : -1); };
  if (za == zb) return fprime(za);
  const double d = zb - za;
  const double big = std::max(std::abs(za), std::abs(zb));
  if ((za >= 0) == (zb >= 0) && std::abs(d) <= 1e-4 * big) {
    const double zm = 0.5 * (za + zb);
    return fprime(zm) * (1.0 + (rho - 1) * (rho - 2) / 24.0 * (d / zm) * (d / zm));
  }
  return (std::pow(std::abs(zb), rho) - std::pow(std::abs(za), rho)) / d;
}

// Continuous inverse of a strictly increasing piecewise-linear CDF.
double inverse_cdf(const GridMeasure& m, double u) {
  const auto& g = m.grid();
  const auto& F = m.cdf_values();
  if (u <= 0.0) return g.front();
  if (u >= 1.0) return g.back();
  auto k = static_cast<std::size_t>(std::upper_bound(F.begin(), F.end(), u) - F.begin()) - 1;
  const double s = (u - F[k]) / (F[k + 1] - F[k]);
  return g[k] + s * (g[k + 1] - g[k]);
}

// 8-point Gauss-Legendre average of f over [a, b].
template <class Fn>
double gl_mean(double a, double b, Fn&& f) {
  static constexpr std::array<double, 4> x = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                              0.9602898564975363};
  static constexpr std::array<double, 4> w = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                              0.1012285362903763};
  if (a == b) return f(a);
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double acc = 0.0;
  for (std::size_t i = 0; i < 4; ++i) acc += w[i] * (f(c - h * x[i]) + f(c + h * x[i]));
  return 0.5 * acc;
}

// Average of f over [a, b], split where the linear function za -> zb vanishes.
template <class Fn>
double split_mean(double a, double b, double za, double zb, Fn&& f) {
  if ((za < 0 && zb > 0) || (za > 0 && zb < 0)) {
    const double r = a + (b - a) * za / (za - zb);
    const double wl = (r - a) / (b - a);
    return wl * gl_mean(a, r, f) + (1 - wl) * gl_mean(r, b, f);
  }
  return gl_mean(a, b, f);
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::size_t find_exact(const std::vector<double>& v, double x) {
  auto it = std::lower_bound(v.begin(), v.end(), x);
  if (it != v.end() && *it == x) return static_cast<std::size_t>(it - v.begin());
  return v.size();
}

// -min_j (|q - p_j|^rho + v_j) at each sorted q. The cost is Monge, so the
// leftmost argmin is nondecreasing in q and divide and conquer applies.
std::vector<double> transform_sorted(const std::vector<double>& q, const std::vector<double>& p,
                                     const std::vector<double>& v, double rho) {
  std::vector<double> out(q.size());
  struct Frame {
    std::size_t lo, hi, jlo, jhi;
  };
  std::vector<Frame> stack{{0, q.size(), 0, p.size()}};
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    if (f.lo >= f.hi) continue;
    const std::size_t mid = f.lo + (f.hi - f.lo) / 2;
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = f.jlo;
    for (std::size_t j = f.jlo; j < f.jhi; ++j) {
      const double c = cost(q[mid], p[j], rho) + v[j];
      if (c < best) {
        best = c;
        arg = j;
      }
    }
    out[mid] = -best;
    stack.push_back({f.lo, mid, f.jlo, arg + 1});
    stack.push_back({mid + 1, f.hi, arg, f.jhi});
  }
  return out;
}

}  // namespace

// ------------------------------------------------------------- distances

namespace {

// A cumulative level carried both as F and as 1 - F, so that levels close to
// 1 compare as accurately as levels close to 0.
struct Level {
  double lo, up;
};

bool below(const Level& a, const Level& b) { return a.lo + b.lo <= 1.0 ? a.lo < b.lo : b.up < a.up; }
double gap(const Level& a, const Level& b) { return a.lo + b.lo <= 1.0 ? b.lo - a.lo : a.up - b.up; }

}  // namespace

std::vector<CouplingCell> monotone_coupling(const DiscreteMeasure& m1, const DiscreteMeasure& m2) {
  const std::size_t n = m1.size(), m = m2.size();
  auto level = [](const DiscreteMeasure& d, std::size_t k) {
    return k + 1 == d.size() ? Level{1.0, 0.0} : Level{d.cumulative()[k], d.tail()[k]};
  };
  std::vector<CouplingCell> cells;
  cells.reserve(n + m);
  std::size_t i = 0, j = 0;
  Level u{0.0, 1.0};
  while (i < n && j < m) {
    const Level ci = level(m1, i), cj = level(m2, j);
    const bool i_first = below(ci, cj), j_first = below(cj, ci);
    const Level hi = i_first ? ci : cj;
    if (below(u, hi)) {
      cells.push_back({i, j, gap(u, hi)});
      u = hi;
    }
    if (!j_first) ++i;
    if (!i_first) ++j;
  }
  return cells;
}

double wasserstein_pow_pieces(const std::vector<QuantilePiece>& a, const std::vector<QuantilePiece>& b,
                              double rho) {
  if (!(rho >= 1.0)) throw Error(ErrorKind::domain, "wasserstein: rho must be >= 1");
  auto value = [](const QuantilePiece& p, double u) {
    if (p.q_lo == p.q_hi || p.u_hi == p.u_lo) return p.q_lo;
    return p.q_lo + (u - p.u_lo) / (p.u_hi - p.u_lo) * (p.q_hi - p.q_lo);
  };
  double acc = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double lo = std::max(a[i].u_lo, b[j].u_lo);
    const double hi = std::min(a[i].u_hi, b[j].u_hi);
    if (hi > lo) {
      const double da = value(a[i], lo) - value(b[j], lo);
      const double db = value(a[i], hi) - value(b[j], hi);
      acc += (hi - lo) * mean_abs_pow_linear(da, db, rho);
    }
    if (a[i].u_hi <= b[j].u_hi) ++i; else ++j;
  }
  return acc;
}

// -------------------------------------------------------------- potentials

struct PotentialPair::GridData {
  GridMeasure m1;
  GridMeasure m2;
  double rho;
  std::vector<double> u;    // merged cdf breakpoints
  std::vector<double> s;    // F1^{-1}(u)
  std::vector<double> t;    // F2^{-1}(u) = T(s)
  std::vector<double> psi;  // psi(s)

  double psi_at(double x) const {
    const std::size_t P = s.size() - 1;
    if (x <= s.front()) return cost(t.front(), s.front(), rho) - cost(t.front(), x, rho);
    if (x >= s.back()) return psi.back() + cost(t.back(), s.back(), rho) - cost(t.back(), x, rho);
    auto p = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), x) - s.begin()) - 1;
    p = std::min(p, P - 1);
    const double za = t[p] - s[p];
    const double zb = t[p + 1] - s[p + 1];
    const double zx = za + (x - s[p]) / (s[p + 1] - s[p]) * (zb - za);
    return psi[p] + (x - s[p]) * mean_cost_slope(za, zx, rho);
  }

  double map_inverse(double y) const { return inverse_cdf(m1, m2.cdf(y)); }

  double psi_tilde_at(double y) const {
    const double x = map_inverse(y);
    return -cost(x, y, rho) - psi_at(x);
  }
};

PotentialPair::PotentialPair(double rho, std::vector<double> x, std::vector<double> psi, std::vector<double> y,
                             std::vector<double> psi_tilde,
                             std::vector<std::pair<std::size_t, std::size_t>> coupled)
    : rho_(rho), x_(std::move(x)), psi_(std::move(psi)), y_(std::move(y)), psi_tilde_(std::move(psi_tilde)),
      coupled_(std::move(coupled)) {
  if (x_.size() != psi_.size() || y_.size() != psi_tilde_.size() || x_.empty() || y_.empty())
    throw Error(ErrorKind::domain, "potential pair: table sizes do not match");
}

PotentialPair PotentialPair::zero(double rho, const std::vector<double>& x, const std::vector<double>& y) {
  return PotentialPair(rho, x, std::vector<double>(x.size(), 0.0), y, std::vector<double>(y.size(), 0.0));
}

double PotentialPair::psi(double x) const {
  if (grid_) return grid_->psi_at(x);
  const std::size_t k = find_exact(x_, x);
  if (k < x_.size()) return psi_[k];
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < y_.size(); ++j) best = std::min(best, cost(x, y_[j], rho_) + psi_tilde_[j]);
  return -best;
}

double PotentialPair::psi_tilde(double y) const {
  if (grid_) return grid_->psi_tilde_at(y);
  const std::size_t k = find_exact(y_, y);
  if (k < y_.size()) return psi_tilde_[k];
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x_.size(); ++i) best = std::min(best, cost(x_[i], y, rho_) + psi_[i]);
  return -best;
}

std::vector<double> PotentialPair::psi(const std::vector<double>& xs) const {
  if (grid_) {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = grid_->psi_at(xs[i]);
    return out;
  }
  if (!std::is_sorted(xs.begin(), xs.end())) throw Error(ErrorKind::domain, "psi: query points must be sorted");
  std::vector<double> out = transform_sorted(xs, y_, psi_tilde_, rho_);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::size_t k = find_exact(x_, xs[i]);
    if (k < x_.size()) out[i] = psi_[k];
  }
  return out;
}

std::vector<double> PotentialPair::psi_tilde(const std::vector<double>& ys) const {
  if (grid_) {
    std::vector<double> out(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) out[i] = grid_->psi_tilde_at(ys[i]);
    return out;
  }
  if (!std::is_sorted(ys.begin(), ys.end())) throw Error(ErrorKind::domain, "psi_tilde: query points must be sorted");
  std::vector<double> out = transform_sorted(ys, x_, psi_, rho_);
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const std::size_t k = find_exact(y_, ys[i]);
    if (k < y_.size()) out[i] = psi_tilde_[k];
  }
  return out;
}

PotentialPair potentials(const DiscreteMeasure& m1, const DiscreteMeasure& m2, double rho,
                         const PotentialOptions& opts) {
  if (!(rho > 1.0))
    throw Error(ErrorKind::domain, "degenerate potentials: rho must exceed 1 (rho = 1 potentials are not unique)");
  const auto& xs = m1.support();
  const auto& ys = m2.support();
  const std::size_t n = xs.size(), m = ys.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> psi(n, nan), pst(m, nan);
  std::vector<std::size_t> known_y;
  std::vector<std::pair<std::size_t, std::size_t>> coupled;

  const auto cells = monotone_coupling(m1, m2);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto [i, j, mass] = cells[c];
    const double cij = cost(xs[i], ys[j], rho);
    const bool ki = !std::isnan(psi[i]), kj = !std::isnan(pst[j]);
    if (c == 0) {
      psi[i] = 0.0;
      pst[j] = -cij;
    } else if (ki && !kj) {
      pst[j] = -cij - psi[i];
    } else if (!ki && kj) {
      psi[i] = -cij - pst[j];
    } else if (!ki && !kj) {
      // New connected component of the staircase: join through the
      // rho-transform of what is known so far.
      double best = std::numeric_limits<double>::infinity();
      for (auto jj : known_y) best = std::min(best, cost(xs[i], ys[jj], rho) + pst[jj]);
      psi[i] = -best;
      pst[j] = -cij - psi[i];
    }
    if (!kj) known_y.push_back(j);
    coupled.emplace_back(i, j);
  }
  if (psi[0] != 0.0 && !std::isnan(psi[0])) {
    const double shift = psi[0];
    for (auto& v : psi) v -= shift;
    for (auto& v : pst) v += shift;
  }
  // Atoms lost to rounding of the cumulative sums: rho-transform extension.
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isnan(psi[i])) continue;
    double best = std::numeric_limits<double>::infinity();
    for (auto jj : known_y) best = std::min(best, cost(xs[i], ys[jj], rho) + pst[jj]);
    psi[i] = -best;
  }
  if (opts.close_and_check) {
    std::vector<double> closed(m);
    for (std::size_t j = 0; j < m; ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) best = std::min(best, cost(xs[i], ys[j], rho) + psi[i]);
      closed[j] = -best;
    }
    double scale = 1.0;
    for (auto [i, j] : coupled) scale = std::max(scale, cost(xs[i], ys[j], rho));
    for (auto [i, j] : coupled) {
      const double gap = -psi[i] - closed[j] - cost(xs[i], ys[j], rho);
      if (std::abs(gap) > opts.tol * scale)
        throw Error(ErrorKind::construction, "potentials: slackness fails on coupled pair (" + format_double(xs[i]) +
                                                 ", " + format_double(ys[j]) + "), gap " + format_double(gap));
    }
    pst = std::move(closed);
  } else {
    for (std::size_t j = 0; j < m; ++j) {
      if (!std::isnan(pst[j])) continue;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) best = std::min(best, cost(xs[i], ys[j], rho) + psi[i]);
      pst[j] = -best;
    }
  }
  return PotentialPair(rho, xs, std::move(psi), ys, std::move(pst), std::move(coupled));
}

PotentialPair potentials(const GridMeasure& m1, const GridMeasure& m2, double rho) {
  if (!(rho > 1.0))
    throw Error(ErrorKind::domain, "degenerate potentials: rho must exceed 1 (rho = 1 potentials are not unique)");
  auto data = std::make_shared<PotentialPair::GridData>(PotentialPair::GridData{m1, m2, rho, {}, {}, {}, {}});
  const auto& F = m1.cdf_values();
  const auto& G = m2.cdf_values();
  std::merge(F.begin(), F.end(), G.begin(), G.end(), std::back_inserter(data->u));
  data->u.erase(std::unique(data->u.begin(), data->u.end()), data->u.end());
  const std::size_t P = data->u.size();
  data->s.resize(P);
  data->t.resize(P);
  data->psi.resize(P);
  for (std::size_t p = 0; p < P; ++p) {
    data->s[p] = inverse_cdf(m1, data->u[p]);
    data->t[p] = inverse_cdf(m2, data->u[p]);
  }
  data->psi[0] = 0.0;
  for (std::size_t p = 0; p + 1 < P; ++p) {
    const double za = data->t[p] - data->s[p], zb = data->t[p + 1] - data->s[p + 1];
    data->psi[p + 1] = data->psi[p] + (data->s[p + 1] - data->s[p]) * mean_cost_slope(za, zb, rho);
  }

  PotentialPair out;
  out.rho_ = rho;
  out.x_ = m1.grid();
  out.y_ = m2.grid();
  out.psi_.resize(out.x_.size());
  out.map_.resize(out.x_.size());
  for (std::size_t k = 0; k < out.x_.size(); ++k) {
    out.psi_[k] = data->psi_at(out.x_[k]);
    out.map_[k] = inverse_cdf(m2, F[k]);
  }
  out.psi_tilde_.resize(out.y_.size());
  for (std::size_t k = 0; k < out.y_.size(); ++k) out.psi_tilde_[k] = data->psi_tilde_at(out.y_[k]);
  out.grid_ = std::move(data);
  return out;
}

double optimal_map_at(const GridMeasure& m1, const GridMeasure& m2, double x) {
  return inverse_cdf(m2, m1.cdf(x));
}

Tabulated optimal_map(const GridMeasure& m1, const GridMeasure& m2) {
  Tabulated T;
  T.x = m1.grid();
  T.y.resize(T.x.size());
  for (std::size_t k = 0; k < T.x.size(); ++k) T.y[k] = inverse_cdf(m2, m1.cdf_values()[k]);
  return T;
}

// ----------------------------------------------------------------- duality

double duality_value(const PotentialPair& pair, const DiscreteMeasure& m1, const DiscreteMeasure& m2) {
  double a = 0.0, b = 0.0;
  for (std::size_t k = 0; k < m1.size(); ++k) a += m1.weights()[k] * pair.psi(m1.support()[k]);
  for (std::size_t k = 0; k < m2.size(); ++k) b += m2.weights()[k] * pair.psi_tilde(m2.support()[k]);
  return -a - b;
}

namespace {

// \int g(psi) dm1 and \int g(psi_tilde) dm2 by Gauss-Legendre on each smooth piece.
template <class G>
double integrate_psi(const PotentialPair::GridData& d, G&& g) {
  double acc = 0.0;
  for (std::size_t p = 0; p + 1 < d.u.size(); ++p) {
    const double du = d.u[p + 1] - d.u[p];
    if (du <= 0) continue;
    const double za = d.t[p] - d.s[p], zb = d.t[p + 1] - d.s[p + 1];
    acc += du * split_mean(d.s[p], d.s[p + 1], za, zb, [&](double x) { return g(d.psi_at(x)); });
  }
  return acc;
}

template <class G>
double integrate_psi_tilde(const PotentialPair::GridData& d, G&& g) {
  double acc = 0.0;
  for (std::size_t p = 0; p + 1 < d.u.size(); ++p) {
    const double du = d.u[p + 1] - d.u[p];
    if (du <= 0) continue;
    const double za = d.s[p] - d.t[p], zb = d.s[p + 1] - d.t[p + 1];
    acc += du * split_mean(d.t[p], d.t[p + 1], za, zb, [&](double y) { return g(d.psi_tilde_at(y)); });
  }
  return acc;
}

const PotentialPair::GridData& grid_data_of(const PotentialPair& pair) {
  if (!pair.grid_data()) throw Error(ErrorKind::representation, "grid integrals need a pair built from grid measures");
  return *pair.grid_data();
}

}  // namespace

double duality_value(const PotentialPair& pair, const GridMeasure&, const GridMeasure&) {
  const auto& d = grid_data_of(pair);
  return -integrate_psi(d, [](double v) { return v; }) - integrate_psi_tilde(d, [](double v) { return v; });
}

double max_dual_violation(const PotentialPair& pair) {
  double worst = -std::numeric_limits<double>::infinity();
  const auto& x = pair.x();
  const auto& y = pair.y();
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j)
      worst = std::max(worst, -pair.psi_values()[i] - pair.psi_tilde_values()[j] - cost(x[i], y[j], pair.rho()));
  return worst;
}

namespace {

double feasibility_scale(const PotentialPair& pair) {
  return std::max({1.0, max_abs(pair.psi_values()), max_abs(pair.psi_tilde_values())});
}

void require_feasible(const PotentialPair& pair) {
  const double v = max_dual_violation(pair);
  if (v > 1e-9 * feasibility_scale(pair))
    throw Error(ErrorKind::feasibility, "potential pair violates -psi - psi_tilde <= cost by " + format_double(v));
}

}  // namespace

double duality_gap(const PotentialPair& pair, const DiscreteMeasure& m1, const DiscreteMeasure& m2, double rho) {
  require_feasible(pair);
  return wasserstein_pow(m1, m2, rho) - duality_value(pair, m1, m2);
}

double duality_gap(const PotentialPair& pair, const GridMeasure& m1, const GridMeasure& m2, double rho) {
  require_feasible(pair);
  return wasserstein_pow(m1, m2, rho) - duality_value(pair, m1, m2);
}

// ------------------------------------------------------------------ bounds

BoundCheck potential_moment_bound(const DiscreteMeasure& m1, const DiscreteMeasure& m2, double rho, double eps) {
  if (!(eps >= 0)) throw Error(ErrorKind::domain, "potential moment bound: eps must be >= 0");
  const auto pair = potentials(m1, m2, rho);
  const double q = 1.0 + eps;
  const double v1 = generalized_variance(m1, Tabulated{pair.x(), pair.psi_values()}, q);
  const double v2 = generalized_variance(m2, Tabulated{pair.y(), pair.psi_tilde_values()}, q);
  const double p = rho * q;
  return {std::max(v1, v2), std::pow(2.0, p) * (moment(m1, p) + moment(m2, p))};
}

BoundCheck potential_moment_bound(const GridMeasure& m1, const GridMeasure& m2, double rho, double eps) {
  if (!(eps >= 0)) throw Error(ErrorKind::domain, "potential moment bound: eps must be >= 0");
  const auto pair = potentials(m1, m2, rho);
  const auto& d = grid_data_of(pair);
  const double q = 1.0 + eps;
  const double a1 = integrate_psi(d, [](double v) { return v; });
  const double a2 = integrate_psi_tilde(d, [](double v) { return v; });
  const double v1 = integrate_psi(d, [&](double v) { return std::pow(std::abs(v - a1), q); });
  const double v2 = integrate_psi_tilde(d, [&](double v) { return std::pow(std::abs(v - a2), q); });
  const double p = rho * q;
  return {std::max(v1, v2), std::pow(2.0, p) * (moment(m1, p) + moment(m2, p))};
}

PhiCheck validate_phi(const GridMeasure& m1, double y, const std::function<double(double)>& phi, std::size_t n_u) {
  if (n_u == 0) throw Error(ErrorKind::domain, "phi validation: need at least one u point");
  PhiCheck out{-std::numeric_limits<double>::infinity(), 0.0};
  const double du = 1.0 / static_cast<double>(n_u);
  double integral = 0.0;  // \int_0^{u_i - du/2} phi
  for (std::size_t i = 0; i < n_u; ++i) {
    const double u = (static_cast<double>(i) + 0.5) * du;
    const double f = phi(u);
    const double lhs = m1.cdf(inverse_cdf(m1, u) + y) - u;
    const double excess = lhs - (integral + 0.5 * du * f);
    if (excess > out.max_excess) out = {excess, u};
    integral += du * f;
  }
  return out;
}

double translated_map_moment(const GridMeasure& m1, const GridMeasure& m2, double shift, double q) {
  const auto& g = m1.grid();
  const auto& F = m1.cdf_values();
  const auto& G = m2.cdf_values();
  // Breakpoints of x -> T(x + shift): cdf nodes of both measures pulled back.
  std::vector<double> cuts;
  cuts.reserve(g.size() + G.size());
  for (double gv : G) cuts.push_back(inverse_cdf(m1, gv) - shift);
  for (double x : g) cuts.push_back(x - shift);
  std::vector<double> pts = g;
  for (double c : cuts)
    if (c > g.front() && c < g.back()) pts.push_back(c);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double acc = 0.0;
  std::size_t k = 0;
  for (std::size_t p = 0; p + 1 < pts.size(); ++p) {
    const double a = pts[p], b = pts[p + 1];
    while (k + 2 < g.size() && g[k + 1] <= a) ++k;
    const double mass = (F[k + 1] - F[k]) * (b - a) / (g[k + 1] - g[k]);
    const double Ta = optimal_map_at(m1, m2, a + shift);
    const double Tb = optimal_map_at(m1, m2, b + shift);
    acc += mass * mean_abs_pow_linear(Ta, Tb, q);
  }
  return acc;
}

BoundCheck translated_map_bound(const GridMeasure& m1, const GridMeasure& m2, double y, double q,
                                const std::function<double(double)>& phi, double delta) {
  if (!(y > 0) || !(q > 0) || !(delta >= 0))
    throw Error(ErrorKind::domain, "translated map bound: need y > 0, q > 0, delta >= 0");
  const std::size_t n_u = 10000;
  const auto check = validate_phi(m1, y, phi, n_u);
  if (check.max_excess > 1e-12)
    throw Error(ErrorKind::hypothesis, "phi_y is not admissible: excess " + format_double(check.max_excess) +
                                           " at u = " + format_double(check.worst_u));
  const double lhs = translated_map_moment(m1, m2, -y, q);
  const double ey = moment(m2, q);
  double norm_y, norm_phi = 0.0;
  if (delta == 0.0) {
    norm_y = std::pow(std::max(std::abs(m2.grid().front()), std::abs(m2.grid().back())), q);
  } else if (std::isinf(delta)) {
    norm_y = ey;
  } else {
    const double p = 1.0 + 1.0 / delta;
    norm_y = std::pow(moment(m2, q * p), 1.0 / p);
  }
  const double du = 1.0 / static_cast<double>(n_u);
  if (std::isinf(delta)) {
    for (std::size_t i = 0; i < n_u; ++i) norm_phi = std::max(norm_phi, std::abs(phi((i + 0.5) * du)));
  } else {
    const double p = 1.0 + delta;
    for (std::size_t i = 0; i < n_u; ++i) norm_phi += du * std::pow(std::abs(phi((i + 0.5) * du)), p);
    norm_phi = std::pow(norm_phi, 1.0 / p);
  }
  return {lhs, ey + norm_y * norm_phi};
}

BoundCheck translated_map_bound_bounded_below(const GridMeasure& m1, const GridMeasure& m2, double y, double q) {
  if (!(y > 0) || !(q > 0)) throw Error(ErrorKind::domain, "translated map bound: need y > 0, q > 0");
  return {translated_map_moment(m1, m2, -y, q), std::pow(std::abs(m2.grid().front()), q) + moment(m2, q)};
}

ShiftedMapBound shifted_map_moment_bound(const GridMeasure& m1, const GridMeasure& m2, double y, double q,
                                         const TailConstants& tail) {
  return {translated_map_moment(m1, m2, y, q), translated_map_moment(m1, m2, -y, q),
          tail.c * std::exp(tail.C * y) * moment(m2, q)};
}

// --------------------------------------------------------------------- csv

void write_psi_csv(std::ostream& out, const PotentialPair& pair) {
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < pair.x().size(); ++k) rows.push_back({pair.x()[k], pair.psi_values()[k]});
  write_rows(out, "x,psi", rows);
}

void write_psi_tilde_csv(std::ostream& out, const PotentialPair& pair) {
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < pair.y().size(); ++k) rows.push_back({pair.y()[k], pair.psi_tilde_values()[k]});
  write_rows(out, "y,psi_tilde", rows);
}

void write_map_csv(std::ostream& out, const PotentialPair& pair) {
  if (pair.map_values().empty())
    throw Error(ErrorKind::representation, "transport map is only tabulated for grid measures");
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < pair.x().size(); ++k) rows.push_back({pair.x()[k], pair.map_values()[k]});
  write_rows(out, "x,T", rows);
}

}  // namespace wflow

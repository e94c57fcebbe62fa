#include "wflow/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <boost/math/tools/toms748_solve.hpp>

#include "wflow/csv.hpp"
#include "wflow/errors.hpp"
#include "wflow/parallel.hpp"

namespace wflow {

namespace {

constexpr double kLevelEdge = 1e-13;  // cumulative levels this close to 0 or 1 are ignored

// Cumulative level of every state, kept accurate at both ends: below 1/2 by
// the prefix sum F, above by the suffix sum U = 1 - F.
struct Levels {
  std::vector<double> lower, upper;
};

Levels levels(const std::vector<double>& p) {
  Levels l{std::vector<double>(p.size()), std::vector<double>(p.size())};
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) l.lower[i] = (s += p[i]);
  s = 0.0;
  for (std::size_t i = p.size(); i-- > 0;) {
    l.upper[i] = s;
    s += p[i];
  }
  return l;
}

// Orders levels: (0, F) below 1/2, (1, -U) above.
using LevelKey = std::pair<int, double>;
LevelKey key(const Levels& l, std::size_t i) {
  return l.lower[i] <= 0.5 ? LevelKey{0, l.lower[i]} : LevelKey{1, -l.upper[i]};
}

// Sign-faithful F(k) - G(j).
double level_gap(const Levels& f, std::size_t k, const Levels& g, std::size_t j) {
  if (f.lower[k] + g.lower[j] <= 1.0) return f.lower[k] - g.lower[j];
  return g.upper[j] - f.upper[k];
}

struct Marginals {
  std::vector<double> px, py;
};

struct Evaluation {
  double integrand = 0.0;
  double diag = 0.0;
};

// psi on every state of `gen`, through the table or the rho-transform.
std::vector<double> on_states(const JumpGeneratorSpec& gen, const PotentialPair& pair, bool source) {
  return source ? pair.psi(gen.states()) : pair.psi_tilde(gen.states());
}

Evaluation evaluate(const JumpGeneratorSpec& genX, const JumpGeneratorSpec& genY, const Marginals& m, double rho,
                    double mass_tol, double diag_delta) {
  const DiscreteMeasure mx = DiscreteMeasure::on_states(genX.states(), m.px, mass_tol);
  const DiscreteMeasure my = DiscreteMeasure::on_states(genY.states(), m.py, mass_tol);
  PotentialOptions fast;
  fast.close_and_check = false;
  const PotentialPair pair = potentials(mx, my, rho, fast);
  const std::vector<double> lpsi = apply_generator(genX, on_states(genX, pair, true));
  const std::vector<double> lpst = apply_generator(genY, on_states(genY, pair, false));
  Evaluation e;
  double ax = 0.0, ay = 0.0;
  for (std::size_t i = 0; i < m.px.size(); ++i) {
    ax += m.px[i] * lpsi[i];
    e.diag += m.px[i] * std::pow(std::abs(lpsi[i]), 1.0 + diag_delta);
  }
  for (std::size_t j = 0; j < m.py.size(); ++j) ay += m.py[j] * lpst[j];
  e.integrand = -ax - ay;
  return e;
}

double w_pow(const JumpGeneratorSpec& genX, const JumpGeneratorSpec& genY, const Marginals& m, double rho,
             double mass_tol) {
  return wasserstein_pow(DiscreteMeasure::on_states(genX.states(), m.px, mass_tol),
                         DiscreteMeasure::on_states(genY.states(), m.py, mass_tol), rho);
}

// Index range [lo, hi) of levels strictly inside (edge, 1 - edge) at both times.
std::pair<std::size_t, std::size_t> interior(const Levels& a, const Levels& b) {
  auto inside = [](const Levels& l, std::size_t i) { return l.lower[i] > kLevelEdge && l.upper[i] > kLevelEdge; };
  std::size_t lo = 0, hi = a.lower.size();
  while (lo < hi && !(inside(a, lo) && inside(b, lo))) ++lo;
  while (hi > lo && !(inside(a, hi - 1) && inside(b, hi - 1))) --hi;
  return {lo, hi};
}

// Pairs (k, j) where F(k) - G(j) changes sign between the two times. For a
// fixed k the j with G(j) < F(k) form a prefix, so only prefix lengths need
// comparing. Stops after `limit + 1` pairs.
std::vector<std::pair<std::size_t, std::size_t>> crossings(const Levels& Fa, const Levels& Ga, const Levels& Fb,
                                                           const Levels& Gb, std::size_t limit) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const auto [k0, k1] = interior(Fa, Fb);
  const auto [j0, j1] = interior(Ga, Gb);
  if (k0 >= k1 || j0 >= j1) return out;
  auto rank = [&](const Levels& G, const LevelKey& f) {
    std::size_t lo = j0, hi = j1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (key(G, mid) < f) lo = mid + 1;
      else hi = mid;
    }
    return lo;
  };
  for (std::size_t k = k0; k < k1; ++k) {
    const std::size_t ra = rank(Ga, key(Fa, k)), rb = rank(Gb, key(Fb, k));
    for (std::size_t j = std::min(ra, rb); j < std::max(ra, rb); ++j) {
      out.emplace_back(k, j);
      if (out.size() > limit) return out;
    }
  }
  return out;
}

}  // namespace

std::vector<double> apply_generator(const JumpGeneratorSpec& gen, const std::vector<double>& f) {
  if (f.size() != gen.size()) throw Error(ErrorKind::domain, "function must be given on every state");
  std::vector<double> out(gen.size(), 0.0);
  for (std::size_t x = 0; x < gen.size(); ++x) {
    const double lam = gen.lambda()[x];
    if (lam == 0.0) continue;
    double s = 0.0;
    for (const auto& e : gen.row(x)) s += e.prob * (f[e.target] - f[x]);
    out[x] = lam * s;
  }
  return out;
}

Tabulated apply_generator(const JumpGeneratorSpec& gen, const Tabulated& f) {
  std::vector<double> vals(gen.size());
  for (std::size_t i = 0; i < gen.size(); ++i) vals[i] = f.at(gen.states()[i]);
  return Tabulated{gen.states(), apply_generator(gen, vals)};
}

double rhs_integrand(const JumpGeneratorSpec& genX, const JumpGeneratorSpec& genY, const DiscreteMeasure& mX,
                     const DiscreteMeasure& mY, double rho) {
  Marginals m{genX.to_vector(mX), genY.to_vector(mY)};
  return evaluate(genX, genY, m, rho, 1e-9, 0.5).integrand;
}

EvolutionReport verify_identity(const JumpGeneratorSpec& genX, const JumpGeneratorSpec& genY,
                                const DiscreteMeasure& p0X, const DiscreteMeasure& p0Y, double rho, double t_end,
                                std::size_t n_steps, const EvolutionOptions& opts) {
  if (!(rho > 1.0))
    throw Error(ErrorKind::domain, "verify_identity needs rho > 1 (rho = 1 has no potentials; use birth_death)");
  if (n_steps < 2) throw Error(ErrorKind::domain, "n_steps must be >= 2");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw Error(ErrorKind::domain, "t_end must be finite and > 0");
  const double tol = opts.solver_tol;
  const double mass_tol = std::max(1e-12, 4.0 * static_cast<double>(n_steps) * tol);
  const double dt = t_end / static_cast<double>(n_steps);
  const double side = 1e-9 * dt;

  std::vector<Marginals> nodes(n_steps + 1);
  nodes[0] = {genX.to_vector(p0X), genY.to_vector(p0Y)};
  for (std::size_t i = 1; i <= n_steps; ++i)
    nodes[i] = {propagate(genX, nodes[i - 1].px, dt, tol), propagate(genY, nodes[i - 1].py, dt, tol)};

  EvolutionReport r;
  r.time_grid.resize(n_steps + 1);
  for (std::size_t i = 0; i <= n_steps; ++i) r.time_grid[i] = dt * static_cast<double>(i);
  r.time_grid[n_steps] = t_end;
  r.w_values.resize(n_steps + 1);
  r.integrand.resize(n_steps + 1);
  r.diagnostics.resize(n_steps + 1);
  r.kinks.assign(n_steps + 1, 0);
  std::vector<double> cell_integral(n_steps + 1, 0.0);
  std::vector<char> flagged(n_steps + 1, 0);

  auto at = [&](std::size_t i, double tau) {
    // Marginals at r.time_grid[i] + tau, propagated from node i.
    if (tau == 0.0) return nodes[i];
    return Marginals{propagate(genX, nodes[i].px, tau, tol), propagate(genY, nodes[i].py, tau, tol)};
  };
  auto g = [&](std::size_t i, double tau) {
    return evaluate(genX, genY, at(i, tau), rho, mass_tol, opts.diag_delta).integrand;
  };

  // Node quantities; node 0 takes the right limit.
  parallel_for(n_steps + 1, resolve_threads(opts.threads), [&](std::size_t i) {
    r.w_values[i] = w_pow(genX, genY, nodes[i], rho, mass_tol);
    const Evaluation e = evaluate(genX, genY, i == 0 ? at(0, side) : nodes[i], rho, mass_tol, opts.diag_delta);
    r.integrand[i] = e.integrand;
    r.diagnostics[i] = e.diag;
  });

  // Cell c covers (t_{c-1}, t_c].
  parallel_for(n_steps, resolve_threads(opts.threads), [&](std::size_t cell) {
    const std::size_t i = cell;
    const double len = r.time_grid[i + 1] - r.time_grid[i];
    std::vector<double> cuts{0.0};
    if (opts.split_kinks) {
      const Levels Fa = levels(nodes[i].px), Ga = levels(nodes[i].py);
      const Levels Fb = levels(nodes[i + 1].px), Gb = levels(nodes[i + 1].py);
      const auto pairs = crossings(Fa, Ga, Fb, Gb, opts.max_kinks_per_cell);
      if (pairs.size() > opts.max_kinks_per_cell) {
        flagged[i + 1] = 1;
      } else {
        for (const auto& [k, j] : pairs) {
          auto diff = [&, k = k, j = j](double tau) {
            const Marginals m = at(i, tau);
            return level_gap(levels(m.px), k, levels(m.py), j);
          };
          const double da = level_gap(Fa, k, Ga, j), db = level_gap(Fb, k, Gb, j);
          if (da == 0.0 || db == 0.0 || (da > 0.0) == (db > 0.0)) continue;
          std::uintmax_t iters = 100;
          const auto root = boost::math::tools::toms748_solve(
              diff, 0.0, len, da, db,
              [len](double lo, double hi) { return hi - lo <= 1e-13 * len; }, iters);
          cuts.push_back(0.5 * (root.first + root.second));
        }
      }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(len);
    std::size_t found = 0;
    double total = 0.0;
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
      const double lo = cuts[p], hi = cuts[p + 1];
      if (p > 0) ++found;
      const double h = hi - lo;
      if (h <= 0.0) continue;
      if (h < 4.0 * side) {
        total += h * g(i, 0.5 * (lo + hi));
        continue;
      }
      // One-sided values: the integrand jumps at coupling changes (and at 0).
      const double ga = g(i, lo + side), gb = g(i, hi - side);
      if (opts.quadrature == Quadrature::simpson)
        total += h / 6.0 * (ga + 4.0 * g(i, 0.5 * (lo + hi)) + gb);
      else
        total += 0.5 * h * (ga + gb);
    }
    r.kinks[i + 1] = found;
    cell_integral[i + 1] = total;
  });

  r.cumulative.assign(n_steps + 1, 0.0);
  r.residual.assign(n_steps + 1, 0.0);
  for (std::size_t i = 1; i <= n_steps; ++i) {
    r.cumulative[i] = r.cumulative[i - 1] + cell_integral[i];
    r.residual[i] = std::abs(r.w_values[i] - r.w_values[0] - r.cumulative[i]);
    if (!std::isfinite(r.residual[i]))
      throw Error(ErrorKind::integration, "non-finite residual at t = " + format_double(r.time_grid[i]));
    r.max_residual = std::max(r.max_residual, r.residual[i]);
    if (flagged[i]) r.flagged_cells.push_back(i);
  }
  return r;
}

IncrementCheck increment_inequality(const JumpGeneratorSpec& genX, const JumpGeneratorSpec& genY,
                                    const DiscreteMeasure& p0X, const DiscreteMeasure& p0Y, double rho, double t,
                                    double h, double tol) {
  if (!(t >= 0.0) || !(h > 0.0)) throw Error(ErrorKind::domain, "need t >= 0 and h > 0");
  const double mass_tol = std::max(1e-12, 4.0 * tol);
  const Marginals a{propagate(genX, genX.to_vector(p0X), t, tol), propagate(genY, genY.to_vector(p0Y), t, tol)};
  const Marginals b{propagate(genX, a.px, h, tol), propagate(genY, a.py, h, tol)};
  const DiscreteMeasure mx = DiscreteMeasure::on_states(genX.states(), a.px, mass_tol);
  const DiscreteMeasure my = DiscreteMeasure::on_states(genY.states(), a.py, mass_tol);
  const PotentialPair pair = potentials(mx, my, rho);
  const auto psi = on_states(genX, pair, true);
  const auto pst = on_states(genY, pair, false);
  IncrementCheck c;
  c.lhs = w_pow(genX, genY, b, rho, mass_tol) - w_pow(genX, genY, a, rho, mass_tol);
  for (std::size_t i = 0; i < psi.size(); ++i) c.rhs -= psi[i] * (b.px[i] - a.px[i]);
  for (std::size_t j = 0; j < pst.size(); ++j) c.rhs -= pst[j] * (b.py[j] - a.py[j]);
  return c;
}

void write_csv(std::ostream& out, const EvolutionReport& r) {
  std::vector<std::vector<double>> rows;
  rows.reserve(r.time_grid.size());
  for (std::size_t i = 0; i < r.time_grid.size(); ++i)
    rows.push_back({r.time_grid[i], r.w_values[i], r.integrand[i], r.cumulative[i], r.residual[i], r.diagnostics[i]});
  write_rows(out, "t,w_rho_rho,integrand,cumulative,residual,diag", rows);
}

}  // namespace wflow

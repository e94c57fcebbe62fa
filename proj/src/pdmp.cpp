#include "wflow/pdmp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wflow/csv.hpp"
#include "wflow/errors.hpp"
#include "wflow/parallel.hpp"
#include "wflow/transport.hpp"

namespace wflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double grid_step(const std::vector<double>& grid) {
  if (grid.size() < 2) throw Error(ErrorKind::coverage, "state grid needs at least two nodes");
  const double h = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    if (std::abs(grid[i + 1] - grid[i] - h) > 1e-9 * h)
      throw Error(ErrorKind::domain, "state grid must be uniform");
  return h;
}

// Mean-preserving split of a point mass at y between the two nearest nodes.
// Returns false if y had to be clamped to an end node.
bool split(double y, const std::vector<double>& grid, double h, double weight, std::vector<KernelEntry>& row) {
  const std::size_t n = grid.size();
  if (y <= grid.front()) {
    row.push_back({0, weight});
    return y >= grid.front() - 1e-12 * h;
  }
  if (y >= grid.back()) {
    row.push_back({n - 1, weight});
    return y <= grid.back() + 1e-12 * h;
  }
  const double pos = (y - grid.front()) / h;
  std::size_t j = std::min(static_cast<std::size_t>(pos), n - 2);
  const double theta = std::clamp(pos - static_cast<double>(j), 0.0, 1.0);
  if (theta < 1.0) row.push_back({j, weight * (1.0 - theta)});
  if (theta > 0.0) row.push_back({j + 1, weight * theta});
  return true;
}

}  // namespace

double Drift::operator()(double x) const {
  switch (kind) {
    case Kind::zero: return 0.0;
    case Kind::constant: return c;
    case Kind::neg_tanh: return -std::tanh(x);
  }
  return 0.0;
}

double Drift::sup_norm() const {
  switch (kind) {
    case Kind::zero: return 0.0;
    case Kind::constant: return std::abs(c);
    case Kind::neg_tanh: return 1.0;
  }
  return 0.0;
}

double Drift::lipschitz() const { return kind == Kind::neg_tanh ? 1.0 : 0.0; }

Intensity Intensity::tabulated(std::vector<double> nodes, std::vector<double> values) {
  if (nodes.empty() || nodes.size() != values.size())
    throw Error(ErrorKind::domain, "tabulated intensity needs matching nonempty nodes and values");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!(values[i] >= 0.0) || !std::isfinite(values[i])) throw Error(ErrorKind::domain, "intensity values must be >= 0");
    if (i > 0 && !(nodes[i] > nodes[i - 1])) throw Error(ErrorKind::domain, "intensity nodes must increase");
  }
  return {std::move(nodes), std::move(values)};
}

double Intensity::operator()(double x) const {
  if (nodes.empty()) return values.at(0);
  if (x <= nodes.front()) return values.front();
  if (x >= nodes.back()) return values.back();
  const auto k = static_cast<std::size_t>(std::upper_bound(nodes.begin(), nodes.end(), x) - nodes.begin()) - 1;
  const double s = (x - nodes[k]) / (nodes[k + 1] - nodes[k]);
  return values[k] + s * (values[k + 1] - values[k]);
}

double Intensity::bar() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }

double JumpKernel::bound() const { return std::abs(param); }

double JumpKernel::sample(double x, double u) const {
  if (kind == Kind::shift) return x + param;
  return x - param + 2.0 * param * u;
}

PdmpSpec::PdmpSpec(Drift drift, Intensity intensity, JumpKernel kernel, double v_sup, double lambda_bar,
                   double jump_bound)
    : drift_(drift), intensity_(std::move(intensity)), kernel_(kernel) {
  if (kernel_.kind == JumpKernel::Kind::uniform_pm && !(kernel_.param > 0.0))
    throw Error(ErrorKind::domain, "uniform_pm kernel needs M > 0");
  if (!std::isfinite(drift_.c) || !std::isfinite(kernel_.param))
    throw Error(ErrorKind::domain, "non-finite PDMP parameter");
  if (intensity_.values.empty() || (intensity_.nodes.empty() && intensity_.values.size() != 1))
    throw Error(ErrorKind::domain, "constant intensity needs exactly one value");
  if (!(intensity_.values[0] >= 0.0)) throw Error(ErrorKind::domain, "intensity must be >= 0");
  v_sup_ = v_sup > 0.0 ? v_sup : drift_.sup_norm();
  lambda_bar_ = lambda_bar > 0.0 ? lambda_bar : intensity_.bar();
  jump_bound_ = jump_bound > 0.0 ? jump_bound : kernel_.bound();
  // Declared constants against a dense sample.
  for (int i = 0; i <= 20000; ++i) {
    const double x = -100.0 + 0.01 * i;
    if (std::abs(drift_(x)) > v_sup_ * (1.0 + 1e-12))
      throw Error(ErrorKind::domain, "|V(x)| exceeds the declared sup norm at x = " + format_double(x));
    if (intensity_(x) > lambda_bar_ * (1.0 + 1e-12))
      throw Error(ErrorKind::domain, "lambda(x) exceeds the declared bound at x = " + format_double(x));
  }
  for (int i = 0; i <= 1000; ++i) {
    const double u = (i + 0.5) / 1001.0;
    if (std::abs(kernel_.sample(0.0, u)) > jump_bound_ * (1.0 + 1e-12))
      throw Error(ErrorKind::domain, "sampled jump exceeds the declared bound M");
  }
}

double flow(const PdmpSpec& spec, double x, double s) {
  if (!std::isfinite(s) || !std::isfinite(x)) throw Error(ErrorKind::domain, "flow needs finite x and s");
  const Drift& V = spec.drift();
  switch (V.kind) {
    case Drift::Kind::zero: return x;
    case Drift::Kind::constant: return x + V.c * s;
    case Drift::Kind::neg_tanh: break;
  }
  // x' = -tanh x  <=>  sinh x(s) = e^{-s} sinh x.
  const double a = std::abs(x);
  const double sign = x < 0 ? -1.0 : 1.0;
  if (a - s > 20.0 && a > 20.0) return sign * (a - s + std::log1p(-std::exp(-2.0 * a)));
  const double z = std::exp(-s) * std::sinh(x);
  if (!std::isfinite(z)) throw Error(ErrorKind::integration, "flow overflow at x = " + format_double(x));
  return std::asinh(z);
}

MuApproximation mu_generator(const PdmpSpec& spec, double mu, const std::vector<double>& grid) {
  if (!(mu >= 1.0) || !std::isfinite(mu)) throw Error(ErrorKind::domain, "mu must be finite and >= 1");
  const double h = grid_step(grid);
  const std::size_t n = grid.size();
  std::vector<double> targets(n), intensity(n);
  std::vector<std::vector<KernelEntry>> rows(n);
  std::size_t clamped = 0;
  const JumpKernel& k = spec.kernel();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = grid[i];
    const double lam = spec.intensity()(x);
    const double total = mu + lam;
    targets[i] = flow(spec, x, 1.0 / mu);
    bool inside = split(targets[i], grid, h, mu / total, rows[i]);
    if (lam > 0.0) {
      const double w = lam / total;
      if (k.kind == JumpKernel::Kind::shift) {
        inside = split(x + k.param, grid, h, w, rows[i]) && inside;
      } else {
        // CDF differences of U[x - M, x + M] over the node cells; end cells are unbounded.
        const double lo = x - k.param, hi = x + k.param;
        const double first = grid.front() - 0.5 * h, last = grid.back() + 0.5 * h;
        if (lo < first || hi > last) inside = false;
        const auto jlo = static_cast<std::size_t>(std::clamp(std::floor((lo - first) / h), 0.0, double(n - 1)));
        const auto jhi = static_cast<std::size_t>(std::clamp(std::floor((hi - first) / h), 0.0, double(n - 1)));
        for (std::size_t j = jlo; j <= jhi; ++j) {
          const double a = j == 0 ? -kInf : first + h * static_cast<double>(j);
          const double b = j + 1 == n ? kInf : first + h * static_cast<double>(j + 1);
          const double overlap = std::min(b, hi) - std::max(a, lo);
          if (overlap > 0.0) rows[i].push_back({j, w * overlap / (2.0 * k.param)});
        }
      }
    }
    if (!inside) ++clamped;
    intensity[i] = total;
  }
  JumpGeneratorSpec gen = JumpGeneratorSpec::without_fake_jumps(grid, std::move(intensity), std::move(rows));
  return MuApproximation{mu, grid, std::move(targets), std::move(gen), clamped};
}

std::vector<double> discretize(const GridMeasure& m, const std::vector<double>& grid) {
  const double h = grid_step(grid);
  std::vector<double> p(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double a = grid[i] - 0.5 * h, b = grid[i] + 0.5 * h;
    const bool first = i == 0, last = i + 1 == grid.size();
    // Lower half by F, upper half by 1 - F, so both tails keep their digits.
    if (m.cdf(a) < 0.5)
      p[i] = (last ? 1.0 : m.cdf(b)) - (first ? 0.0 : m.cdf(a));
    else
      p[i] = (first ? 1.0 : m.ccdf(a)) - (last ? 0.0 : m.ccdf(b));
    p[i] = std::max(p[i], 0.0);
  }
  return p;
}

GridMeasure flow_pushforward(const PdmpSpec& spec, const GridMeasure& m, double t) {
  std::vector<double> g(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) g[i] = flow(spec, m.grid()[i], t);
  for (std::size_t i = 1; i < g.size(); ++i)
    if (!(g[i] > g[i - 1])) throw Error(ErrorKind::integration, "flow pushforward grid collapsed");
  return GridMeasure(std::move(g), m.cdf_values(), m.ccdf_values());
}

InitialLaw initial_law(const DiscreteMeasure& m) {
  return [m](double u) { return quantile(m, u); };
}

InitialLaw initial_law(const GridMeasure& m) {
  return [m](double u) { return quantile(m, u); };
}

PathSample simulate_process(const PdmpSpec& spec, const InitialLaw& p0, double t, double mu, std::size_t n_paths,
                            std::uint64_t seed, unsigned threads) {
  if (n_paths == 0) throw Error(ErrorKind::domain, "need at least one path");
  if (!(t >= 0.0)) throw Error(ErrorKind::domain, "time must be >= 0");
  if (!(mu >= 1.0)) throw Error(ErrorKind::domain, "mu must be >= 1 (or infinite)");
  const double lbar = spec.lambda_bar();
  const double M = spec.jump_bound();
  const double vs = spec.v_sup();
  const bool exact = std::isinf(mu);
  PathSample out;
  out.start.resize(n_paths);
  out.end.resize(n_paths);
  std::vector<double> excess(n_paths, 0.0);
  parallel_for(n_paths, resolve_threads(threads), [&](std::size_t i) {
    PathRng rng(seed, i);
    const double x0 = p0(rng.uniform());
    double x = x0, clock = 0.0, allowed = 0.0;
    std::size_t jumps = 0, moves = 0;
    if (exact) {
      while (true) {
        const double tau = lbar > 0.0 ? rng.exponential(lbar) : kInf;
        if (clock + tau > t) {
          x = flow(spec, x, t - clock);
          break;
        }
        x = flow(spec, x, tau);
        clock += tau;
        if (spec.intensity()(x) >= lbar * rng.uniform()) {
          x = spec.kernel().sample(x, rng.uniform());
          ++jumps;
        }
      }
      allowed = vs * t + M * static_cast<double>(jumps);
    } else {
      const double total = mu + lbar;
      while (true) {
        clock += rng.exponential(total);
        if (clock > t) break;
        if (rng.uniform() * total < mu) {
          x = flow(spec, x, 1.0 / mu);
          ++moves;
        } else if (spec.intensity()(x) >= lbar * rng.uniform()) {
          x = spec.kernel().sample(x, rng.uniform());
          ++jumps;
        }
      }
      allowed = vs * static_cast<double>(moves) / mu + M * static_cast<double>(jumps);
    }
    out.start[i] = x0;
    out.end[i] = x;
    excess[i] = std::abs(x - x0) - allowed;
  });
  for (double e : excess) {
    // Rounding of the flow integration: 1e-9 absolute.
    if (e > 1e-9) ++out.bound_violations;
    out.max_bound_excess = std::max(out.max_bound_excess, e);
  }
  return out;
}

DiscreteMeasure simulate_pdmp(const PdmpSpec& spec, const InitialLaw& p0, double t, std::size_t n_paths,
                              std::uint64_t seed, unsigned threads) {
  return empirical_measure(simulate_process(spec, p0, t, kInf, n_paths, seed, threads).end);
}

MuStudy mu_convergence_study(const PdmpSpec& specX, const PdmpSpec& specY, const GridMeasure& p0X,
                             const GridMeasure& p0Y, double rho, double t, const std::vector<double>& mu_list,
                             const std::vector<double>& grid, const MuStudyOptions& opts) {
  if (mu_list.empty()) throw Error(ErrorKind::domain, "mu_list is empty");
  for (std::size_t i = 0; i < mu_list.size(); ++i) {
    if (!(mu_list[i] >= 1.0)) throw Error(ErrorKind::domain, "every mu must be >= 1");
    if (i > 0 && !(mu_list[i] > mu_list[i - 1])) throw Error(ErrorKind::domain, "mu_list must increase");
  }
  if (!(rho > 1.0)) throw Error(ErrorKind::domain, "the identity check needs rho > 1");
  MuStudy study;
  study.grid_step = grid_step(grid);
  study.reference_mu = 2.0 * mu_list.back();
  const std::size_t n = grid.size();
  const std::vector<double> d0X = discretize(p0X, grid), d0Y = discretize(p0Y, grid);
  const double mass_tol = 1e-9;
  const DiscreteMeasure m0X = DiscreteMeasure::on_states(grid, d0X, mass_tol);
  const DiscreteMeasure m0Y = DiscreteMeasure::on_states(grid, d0Y, mass_tol);

  struct Chains {
    MuApproximation x, y;
    std::vector<double> px, py;
  };
  auto chains = [&](double mu) {
    Chains c{mu_generator(specX, mu, grid), mu_generator(specY, mu, grid), {}, {}};
    c.px = propagate(c.x.generator, d0X, t, opts.solver_tol);
    c.py = propagate(c.y.generator, d0Y, t, opts.solver_tol);
    return c;
  };
  auto measure = [&](const std::vector<double>& p) { return DiscreteMeasure::on_states(grid, p, mass_tol); };

  const Chains ref = chains(study.reference_mu);
  const DiscreteMeasure refX = measure(ref.px), refY = measure(ref.py);
  // Fixed window for the potential comparison: central part of the reference X law.
  std::vector<std::size_t> window;
  for (std::size_t i = 0; i < n; ++i) {
    const double F = refX.cdf(grid[i]);
    if (F >= 0.1 && F <= 0.9) window.push_back(i);
  }
  const bool flow_case = specX.intensity().is_zero();
  const GridMeasure pushed = flow_case ? flow_pushforward(specX, p0X, t) : p0X;

  std::vector<std::vector<double>> lpsi_window;
  for (double mu : mu_list) {
    const Chains c = chains(mu);
    const JumpGeneratorSpec& gx = c.x.generator;
    const DiscreteMeasure mX = measure(c.px), mY = measure(c.py);
    MuStudyRow row;
    row.mu = mu;
    row.cauchy_w = std::max(wasserstein(mX, refX, rho), wasserstein(mY, refY, rho));
    if (flow_case) row.flow_w1 = wasserstein(mX, pushed, 1.0);
    row.edge_mass = c.px.front() + c.px.back() + c.py.front() + c.py.back();
    const EvolutionReport ev = verify_identity(gx, c.y.generator, m0X, m0Y, rho, t, opts.identity_steps, opts.evolution);
    row.identity_residual = ev.max_residual;
    row.flagged_cells = ev.flagged_cells.size();
    PotentialOptions fast;
    fast.close_and_check = false;
    const PotentialPair pair = potentials(mX, mY, rho, fast);
    const std::vector<double> lpsi = apply_generator(gx, pair.psi(grid));
    std::vector<double> w;
    for (auto i : window) w.push_back(lpsi[i]);
    lpsi_window.push_back(std::move(w));
    study.rows.push_back(row);
  }
  for (std::size_t r = 0; r + 1 < study.rows.size(); ++r) {
    double sup = 0.0;
    for (std::size_t i = 0; i < window.size(); ++i)
      sup = std::max(sup, std::abs(lpsi_window[r][i] - lpsi_window[r + 1][i]));
    study.rows[r].potential_cauchy = sup;
  }
  for (std::size_t r = 0; r + 1 < study.rows.size(); ++r) {
    if (!(study.rows[r + 1].cauchy_w < study.rows[r].cauchy_w)) study.cauchy_decreasing = false;
    if (flow_case && !(study.rows[r + 1].flow_w1 < study.rows[r].flow_w1)) study.flow_decreasing = false;
  }
  if (!flow_case) study.flow_decreasing = false;
  for (const auto& row : study.rows)
    if (row.edge_mass > 1e-9)
      throw Error(ErrorKind::coverage, "mu-chain mass reached the grid ends (" + format_double(row.edge_mass) +
                                           " at mu = " + format_double(row.mu) + "); widen the grid");
  return study;
}

PropagationConstants propagation_constants(const PdmpSpec& spec, double c0, double C0, double t, double q, double mu) {
  if (!(c0 >= 1.0) || !(C0 > 0.0) || !(t > 0.0) || !(q > 0.0))
    throw Error(ErrorKind::domain, "propagation constants need c0 >= 1, C0 > 0, t > 0, q > 0");
  if (mu < 1.0 / t) throw Error(ErrorKind::domain, "mu must be >= 1/t");
  const double V = spec.v_sup(), M = spec.jump_bound(), lbar = spec.lambda_bar();
  const double e = std::exp(1.0);
  const double qe = std::pow(q / e, q);
  PropagationConstants c;
  c.moment_bound = std::pow(2.0, std::max(q - 1.0, 0.0)) *
                   (std::pow(V * t, q) * qe * std::exp(e) + std::pow(M, q) * qe * std::exp(lbar * t * (e - 1.0)));
  c.c_t = c0 * c0 * std::exp(2.0 * t * std::sinh(C0 * V) + 2.0 * lbar * t * std::sinh(C0 * M));
  return c;
}

MomentSimCheck simulated_moment_check(const PdmpSpec& spec, const InitialLaw& p0, double t, double q, double mu,
                                      std::size_t n_paths, std::uint64_t seed, unsigned threads) {
  MomentSimCheck c;
  c.mu = mu;
  c.bound = propagation_constants(spec, 1.0, 1.0, t, q, mu).moment_bound;
  const PathSample s = simulate_process(spec, p0, t, mu, n_paths, seed, threads);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < n_paths; ++i) {
    const double v = std::pow(std::abs(s.end[i] - s.start[i]), q);
    sum += v;
    sum2 += v * v;
  }
  const double nn = static_cast<double>(n_paths);
  c.mean = sum / nn;
  const double var = n_paths > 1 ? std::max(0.0, (sum2 - nn * c.mean * c.mean) / (nn - 1.0)) : 0.0;
  c.sigma = std::sqrt(var / nn);
  return c;
}

GridMeasure mu_chain_marginal(const PdmpSpec& spec, const GridMeasure& p0, double mu, double t,
                              const std::vector<double>& grid, double tol) {
  const MuApproximation a = mu_generator(spec, mu, grid);
  std::vector<double> p = propagate(a.generator, discretize(p0, grid), t, tol);
  for (double& v : p) v = std::max(v, 0.0);
  // Drop outer cells carrying < 1e-14 in total (folded into the new end
  // cells) so the cumulative sums stay strictly monotone in double precision.
  constexpr double kFold = 1e-14;
  std::size_t lo = 0, hi = p.size() - 1;
  for (double acc = p[0]; lo + 2 < p.size() && acc + p[lo + 1] <= kFold; acc += p[++lo]) {}
  for (double acc = p[hi]; hi > lo + 2 && acc + p[hi - 1] <= kFold; acc += p[--hi]) {}
  for (std::size_t i = 0; i < lo; ++i) p[lo] += p[i];
  for (std::size_t i = hi + 1; i < p.size(); ++i) p[hi] += p[i];
  std::vector<double> nodes(grid.begin() + lo, grid.begin() + hi + 1), probs(p.begin() + lo, p.begin() + hi + 1);
  for (double& v : probs) v = std::max(v, 1e-300);
  return GridMeasure::histogram(nodes, probs);
}

}  // namespace wflow

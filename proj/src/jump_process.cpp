#include "wflow/jump_process.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "wflow/errors.hpp"
#include "wflow/parallel.hpp"

namespace wflow {

namespace {

void check_states(const std::vector<double>& states) {
  if (states.empty()) throw Error(ErrorKind::domain, "generator needs at least one state");
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (!std::isfinite(states[i])) throw Error(ErrorKind::domain, "non-finite state");
    if (i > 0 && !(states[i] > states[i - 1]))
      throw Error(ErrorKind::domain, "states must be strictly increasing");
  }
}

double log_poisson(std::size_t m, double lt) {
  if (lt == 0.0) return m == 0 ? 0.0 : -INFINITY;
  return -lt + static_cast<double>(m) * std::log(lt) - std::lgamma(static_cast<double>(m) + 1.0);
}

// One step of the uniformized jump chain: v -> v (I + Q / lbar).
void uniform_step(const JumpGeneratorSpec& gen, const std::vector<double>& v, std::vector<double>& out) {
  const double lbar = gen.lambda_bar();
  const auto& lam = gen.lambda();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t x = 0; x < v.size(); ++x) {
    if (v[x] == 0.0) continue;
    const double jump = lam[x] / lbar;
    out[x] += v[x] * (1.0 - jump);
    if (jump == 0.0) continue;
    const double a = v[x] * jump;
    for (const auto& e : gen.row(x)) out[e.target] += a * e.prob;
  }
}

}  // namespace

JumpGeneratorSpec::JumpGeneratorSpec(std::vector<double> states, std::vector<double> lambda,
                                     std::vector<std::vector<KernelEntry>> kernel)
    : states_(std::move(states)), lambda_(std::move(lambda)), kernel_(std::move(kernel)) {
  check_states(states_);
  const std::size_t n = states_.size();
  if (lambda_.size() != n) throw Error(ErrorKind::domain, "lambda has wrong length");
  if (kernel_.size() != n) throw Error(ErrorKind::domain, "kernel has wrong number of rows");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(lambda_[i] >= 0.0) || !std::isfinite(lambda_[i]))
      throw Error(ErrorKind::domain, "intensity must be finite and >= 0 at state " + std::to_string(i));
    lambda_bar_ = std::max(lambda_bar_, lambda_[i]);
    double sum = 0.0;
    for (const auto& e : kernel_[i]) {
      if (e.target >= n) throw Error(ErrorKind::domain, "kernel target out of range in row " + std::to_string(i));
      if (!(e.prob >= 0.0)) throw Error(ErrorKind::domain, "negative kernel entry in row " + std::to_string(i));
      if (e.target == i && e.prob > 0.0 && lambda_[i] > 0.0)
        throw Error(ErrorKind::domain, "fake jump (self-loop) in row " + std::to_string(i));
      sum += e.prob;
    }
    // Rows of states that never jump may be left empty.
    if (kernel_[i].empty() && lambda_[i] == 0.0) continue;
    if (std::abs(sum - 1.0) > 1e-12)
      throw Error(ErrorKind::domain, "kernel row " + std::to_string(i) + " sums to " + std::to_string(sum));
  }
}

JumpGeneratorSpec JumpGeneratorSpec::from_dense(std::vector<double> states, std::vector<double> lambda,
                                                const std::vector<std::vector<double>>& kernel) {
  std::vector<std::vector<KernelEntry>> rows(kernel.size());
  for (std::size_t i = 0; i < kernel.size(); ++i) {
    if (kernel[i].size() != kernel.size()) throw Error(ErrorKind::domain, "dense kernel must be square");
    for (std::size_t j = 0; j < kernel[i].size(); ++j)
      if (kernel[i][j] != 0.0) rows[i].push_back({j, kernel[i][j]});
  }
  return JumpGeneratorSpec(std::move(states), std::move(lambda), std::move(rows));
}

JumpGeneratorSpec JumpGeneratorSpec::without_fake_jumps(std::vector<double> states, std::vector<double> lambda,
                                                        std::vector<std::vector<KernelEntry>> kernel) {
  if (kernel.size() != lambda.size()) throw Error(ErrorKind::domain, "kernel has wrong number of rows");
  for (std::size_t i = 0; i < kernel.size(); ++i) {
    std::map<std::size_t, double> merged;
    double self = 0.0, total = 0.0;
    for (const auto& e : kernel[i]) {
      if (!(e.prob >= 0.0)) throw Error(ErrorKind::domain, "negative kernel entry in row " + std::to_string(i));
      total += e.prob;
      if (e.target == i) self += e.prob;
      else merged[e.target] += e.prob;
    }
    std::vector<KernelEntry> row;
    const double moving = total - self;
    if (moving > 0.0 && lambda[i] > 0.0) {
      for (const auto& [j, p] : merged)
        if (p > 0.0) row.push_back({j, p / moving});
      // Renormalizing by the moving mass keeps lambda k unchanged off the diagonal.
      lambda[i] *= moving / total;
    } else {
      lambda[i] = 0.0;
    }
    kernel[i] = std::move(row);
  }
  return JumpGeneratorSpec(std::move(states), std::move(lambda), std::move(kernel));
}

std::size_t JumpGeneratorSpec::index_of(double x) const {
  auto it = std::lower_bound(states_.begin(), states_.end(), x);
  auto close = [x](double s) { return std::abs(s - x) <= 1e-12 * std::max(1.0, std::abs(x)); };
  if (it != states_.end() && close(*it)) return static_cast<std::size_t>(it - states_.begin());
  if (it != states_.begin() && close(*(it - 1))) return static_cast<std::size_t>(it - states_.begin() - 1);
  throw Error(ErrorKind::domain, "point " + std::to_string(x) + " is not a state of the generator");
}

std::vector<double> JumpGeneratorSpec::to_vector(const DiscreteMeasure& m) const {
  std::vector<double> p(size(), 0.0);
  for (std::size_t k = 0; k < m.size(); ++k) p[index_of(m.support()[k])] += m.weights()[k];
  return p;
}

PoissonCut poisson_truncation(double lt, double tol) {
  if (!(lt >= 0.0) || !std::isfinite(lt)) throw Error(ErrorKind::domain, "Poisson mean must be finite and >= 0");
  if (!(tol > 0.0)) throw Error(ErrorKind::domain, "truncation tolerance must be > 0");
  if (lt == 0.0) return {0, 0.0};
  // Chernoff: P(N >= k) <= e^{-lt} (e lt / k)^k for k > lt. Push far enough
  // that the bound is negligible against tol, then sum the pmf exactly.
  const double floor_tail = tol * 1e-6;
  std::size_t k = static_cast<std::size_t>(std::ceil(lt)) + 1;
  while (true) {
    const double kk = static_cast<double>(k);
    const double log_bound = -lt + kk * (1.0 + std::log(lt / kk));
    if (log_bound < std::log(floor_tail)) break;
    k += std::max<std::size_t>(1, k / 8);
  }
  const double beyond = std::exp(-lt + static_cast<double>(k) * (1.0 + std::log(lt / static_cast<double>(k))));
  // tail(M) = P(N > M) = beyond + sum_{m=M+1}^{k-1} pmf(m).
  double tail = beyond;
  std::size_t m = k;
  while (m > 0) {
    const double next = tail + std::exp(log_poisson(m - 1, lt));
    if (next >= tol) break;
    tail = next;
    --m;
  }
  // Now P(N > m - 1) = tail < tol and adding pmf(m-1) would reach tol.
  return {m == 0 ? 0 : m - 1, tail};
}

std::vector<double> propagate(const JumpGeneratorSpec& gen, const std::vector<double>& p0, double t, double tol,
                              double* truncation_error) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorKind::domain, "time must be finite and >= 0");
  if (p0.size() != gen.size()) throw Error(ErrorKind::domain, "initial vector has wrong length");
  const double lt = gen.lambda_bar() * t;
  if (lt == 0.0) {
    if (truncation_error) *truncation_error = 0.0;
    return p0;
  }
  const PoissonCut cut = poisson_truncation(lt, tol);
  std::vector<double> v = p0, next(p0.size()), out(p0.size(), 0.0);
  for (std::size_t m = 0;; ++m) {
    const double w = std::exp(log_poisson(m, lt));
    for (std::size_t i = 0; i < v.size(); ++i) out[i] += w * v[i];
    if (m == cut.n_max) break;
    uniform_step(gen, v, next);
    v.swap(next);
  }
  if (truncation_error) *truncation_error = cut.tail;
  return out;
}

DiscreteMeasure uniformized_marginal(const JumpGeneratorSpec& gen, const DiscreteMeasure& p0, double t, double tol,
                                     double* truncation_error) {
  const std::vector<double> p = propagate(gen, gen.to_vector(p0), t, tol, truncation_error);
  return DiscreteMeasure::on_states(gen.states(), p, std::max(1e-12, 2.0 * tol));
}

LayerStack layer_stack(const JumpGeneratorSpec& gen, const DiscreteMeasure& p0, double t, std::size_t n_max,
                       double tol) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorKind::domain, "time must be finite and >= 0");
  const std::size_t n = gen.size();
  const std::vector<double> init = gen.to_vector(p0);
  const auto& lam = gen.lambda();
  const double lbar = gen.lambda_bar();

  LayerStack out;
  out.t = t;
  out.layers.assign(n_max + 1, std::vector<double>(n, 0.0));
  out.q_chain.assign(n_max + 1, std::vector<double>(n, 0.0));
  out.q_chain[0] = init;
  for (std::size_t k = 1; k <= n_max; ++k)
    for (std::size_t x = 0; x < n; ++x) {
      const double a = out.q_chain[k - 1][x] * lam[x];
      if (a == 0.0) continue;
      for (const auto& e : gen.row(x)) out.q_chain[k][e.target] += a * e.prob;
    }

  const double lt = lbar * t;
  if (lt == 0.0) {
    // No genuine jumps: everything stays in layer 0.
    out.layers[0] = init;
    return out;
  }
  const PoissonCut cut = poisson_truncation(lt, tol);
  // v[k] = mass with k genuine jumps after m uniformized events.
  std::vector<std::vector<double>> v(n_max + 1, std::vector<double>(n, 0.0)), next = v;
  v[0] = init;
  for (std::size_t m = 0;; ++m) {
    const double w = std::exp(log_poisson(m, lt));
    for (std::size_t k = 0; k <= std::min(m, n_max); ++k)
      for (std::size_t x = 0; x < n; ++x) out.layers[k][x] += w * v[k][x];
    if (m == cut.n_max) break;
    for (auto& row : next) std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t k = 0; k <= std::min(m, n_max); ++k)
      for (std::size_t x = 0; x < n; ++x) {
        const double mass = v[k][x];
        if (mass == 0.0) continue;
        const double jump = lam[x] / lbar;
        next[k][x] += mass * (1.0 - jump);
        if (jump == 0.0 || k == n_max) continue;
        const double a = mass * jump;
        for (const auto& e : gen.row(x)) next[k + 1][e.target] += a * e.prob;
      }
    v.swap(next);
  }
  double total = 0.0;
  for (const auto& layer : out.layers)
    for (double p : layer) total += p;
  out.truncation_error = std::max(0.0, 1.0 - total);
  return out;
}

double LayerReport::max_violation() const {
  return std::max({sandwich_upper, sandwich_lower, equivalence, q_mass_excess});
}

LayerReport layer_inequality_report(const JumpGeneratorSpec& gen, const DiscreteMeasure& p0, double s, double t,
                                    std::size_t n_max, double tol) {
  if (!(s >= 0.0) || !(t > 0.0)) throw Error(ErrorKind::domain, "need 0 <= s and 0 < t");
  const LayerStack at_t = layer_stack(gen, p0, t, n_max, tol);
  const LayerStack at_s = layer_stack(gen, p0, s, n_max, tol);
  const double lbar = gen.lambda_bar();
  LayerReport r;
  for (std::size_t k = 0; k <= n_max; ++k) {
    const double kk = static_cast<double>(k);
    const double tn = std::exp(kk * std::log(t) - std::lgamma(kk + 1.0));
    const double lower = std::exp(-lbar * t) * tn;
    const double factor = std::exp(lbar * std::max(0.0, t - s)) * (s == 0.0 ? (k == 0 ? 1.0 : 0.0) : std::pow(s / t, kk));
    double q_mass = 0.0;
    for (std::size_t x = 0; x < gen.size(); ++x) {
      const double p = at_t.layers[k][x];
      const double q = at_t.q_chain[k][x];
      q_mass += q;
      r.sandwich_upper = std::max(r.sandwich_upper, p - tn * q);
      r.sandwich_lower = std::max(r.sandwich_lower, lower * q - p);
      r.equivalence = std::max(r.equivalence, at_s.layers[k][x] - factor * p);
    }
    const double cap = std::pow(lbar, kk);
    r.q_mass_excess = std::max(r.q_mass_excess, (q_mass - cap) / std::max(1.0, cap));
  }
  return r;
}

double c_eta(double lambda_bar, double eta, double t) {
  if (!(t > 0.0) || !(eta > 0.0)) throw Error(ErrorKind::domain, "C_eta needs t > 0 and eta > 0");
  const double a = std::exp((1.0 + eta) / (std::exp(1.0) * eta));
  // e^{lbar t (a-1)} - e^{-lbar t} = e^{-lbar t} expm1(lbar a t)
  const double ratio = std::exp(-lambda_bar * t) * std::expm1(lambda_bar * a * t) / t;
  return std::exp(lambda_bar * t) * std::pow(ratio, eta / (1.0 + eta));
}

double c_eta_limit(double lambda_bar, double eta) {
  if (!(eta > 0.0)) throw Error(ErrorKind::domain, "C_eta needs eta > 0");
  return std::pow(lambda_bar * std::exp((1.0 + eta) / (std::exp(1.0) * eta)), eta / (1.0 + eta));
}

KernelBound kernel_moment_bound(const JumpGeneratorSpec& gen, const DiscreteMeasure& p0, double t,
                                const std::vector<double>& f, double eta, double tol) {
  if (!(t > 0.0) || !(eta > 0.0)) throw Error(ErrorKind::domain, "kernel bound needs t > 0 and eta > 0");
  if (f.size() != gen.size()) throw Error(ErrorKind::domain, "f must be tabulated on every state");
  const std::vector<double> init = gen.to_vector(p0);
  const std::vector<double> pt = propagate(gen, init, t, tol);
  const auto& lam = gen.lambda();
  KernelBound b;
  double tail = 0.0;  // sum_{n>=1} \int |f|^{1+eta} dP_{n,t} = \int |f|^{1+eta} d(P_t - P_{0,t})
  for (std::size_t x = 0; x < gen.size(); ++x) {
    double kf = 0.0;
    for (const auto& e : gen.row(x)) kf += e.prob * std::abs(f[e.target]);
    b.lhs += pt[x] * lam[x] * kf;
    const double layered = std::max(0.0, pt[x] - std::exp(-lam[x] * t) * init[x]);
    tail += std::pow(std::abs(f[x]), 1.0 + eta) * layered;
  }
  b.c_eta_t = c_eta(gen.lambda_bar(), eta, t);
  b.rhs = b.c_eta_t * std::pow(tail / t, 1.0 / (1.0 + eta));
  return b;
}

MomentBound moment_growth_bound(const JumpGeneratorSpec& gen, const DiscreteMeasure& p0, double alpha, double t,
                                double tol) {
  if (!(alpha >= 1.0)) throw Error(ErrorKind::domain, "moment lemma needs alpha >= 1");
  const std::vector<double> pt = propagate(gen, gen.to_vector(p0), t, tol);
  const auto& xs = gen.states();
  MomentBound b;
  for (std::size_t x = 0; x < xs.size(); ++x) b.exact += pt[x] * std::pow(std::abs(xs[x]), alpha);
  // The kernel enters only through lambda k, so states that never jump are skipped.
  double kernel_sup = 0.0;
  for (std::size_t x = 0; x < xs.size(); ++x) {
    if (gen.lambda()[x] == 0.0) continue;
    double m = 0.0;
    for (const auto& e : gen.row(x)) m += e.prob * std::pow(std::abs(xs[e.target] - xs[x]), alpha);
    kernel_sup = std::max(kernel_sup, m);
  }
  b.kbar = std::max(moment(p0, alpha), kernel_sup);
  const double lt = gen.lambda_bar() * t;
  const int ca = static_cast<int>(std::ceil(alpha));
  double series = 0.0;
  for (int k = 0; k < ca; ++k)
    series += std::pow(k + 1.0, alpha) / std::tgamma(k + 1.0) * std::pow(lt, k);
  series += std::pow(ca + 1.0, alpha) / std::tgamma(ca + 1.0) * std::pow(lt, ca) * std::exp(lt);
  b.bound = b.kbar * series;
  return b;
}

std::vector<double> simulate_endpoints(const JumpGeneratorSpec& gen, const DiscreteMeasure& p0, double t,
                                       std::size_t n_paths, std::uint64_t seed, unsigned threads) {
  if (n_paths == 0) throw Error(ErrorKind::domain, "need at least one path");
  if (!(t >= 0.0)) throw Error(ErrorKind::domain, "time must be >= 0");
  const std::vector<double> init = gen.to_vector(p0);
  const double lbar = gen.lambda_bar();
  const auto& lam = gen.lambda();
  std::vector<double> ends(n_paths);
  parallel_for(n_paths, resolve_threads(threads), [&](std::size_t i) {
    PathRng rng(seed, i);
    double u = rng.uniform(), acc = 0.0;
    std::size_t x = 0;
    for (; x + 1 < init.size(); ++x) {
      acc += init[x];
      if (u < acc) break;
    }
    double clock = 0.0;
    if (lbar > 0.0) {
      while (true) {
        clock += rng.exponential(lbar);
        if (clock > t) break;
        if (!(lam[x] >= lbar * rng.uniform())) continue;
        const auto& row = gen.row(x);
        double v = rng.uniform(), c = 0.0;
        std::size_t pick = row.back().target;
        for (const auto& e : row) {
          c += e.prob;
          if (v < c) {
            pick = e.target;
            break;
          }
        }
        x = pick;
      }
    }
    ends[i] = gen.states()[x];
  });
  return ends;
}

DiscreteMeasure empirical_measure(const std::vector<double>& sample) {
  if (sample.empty()) throw Error(ErrorKind::domain, "empty sample");
  std::vector<double> s = sample;
  std::sort(s.begin(), s.end());
  std::vector<double> xs, ws;
  const double n = static_cast<double>(s.size());
  for (std::size_t i = 0; i < s.size();) {
    std::size_t j = i;
    while (j < s.size() && s[j] == s[i]) ++j;
    xs.push_back(s[i]);
    ws.push_back(static_cast<double>(j - i) / n);
    i = j;
  }
  return DiscreteMeasure(std::move(xs), std::move(ws), 1e-10);
}

DiscreteMeasure simulate_paths(const JumpGeneratorSpec& gen, const DiscreteMeasure& p0, double t,
                               std::size_t n_paths, std::uint64_t seed, unsigned threads) {
  return empirical_measure(simulate_endpoints(gen, p0, t, n_paths, seed, threads));
}

double dkw_epsilon(std::size_t n, double alpha) {
  if (n == 0 || !(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::domain, "DKW needs n >= 1 and alpha in (0,1)");
  return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

}  // namespace wflow

#include "wflow/birth_death.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "wflow/csv.hpp"
#include "wflow/errors.hpp"
#include "wflow/transport.hpp"

namespace wflow {

namespace {

double max_step(const std::vector<double>& v) {
  double m = 0.0;
  for (std::size_t x = 0; x + 1 < v.size(); ++x) m = std::max(m, std::abs(v[x + 1] - v[x]));
  return m;
}

// (1 + h)^rho - 1 - rho h, accurate for small |h|.
double binomial_remainder(double rho, double h) {
  if (std::abs(h) < 1e-2) {
    double term = rho * (rho - 1.0) / 2.0 * h * h, sum = 0.0;
    for (int k = 2; k < 60 && std::abs(term) > 1e-18 * std::abs(sum); ++k) {
      sum += term;
      term *= (rho - k) / (k + 1.0) * h;
    }
    return sum;
  }
  return std::expm1(rho * std::log1p(h)) - rho * h;
}

// |z+1|^rho - |z|^rho - rho z|z|^{rho-2} with the convention 0 at z = 0.
double increment_excess(double rho, double z) {
  if (z == 0.0) return 1.0;
  return std::pow(std::abs(z), rho) * binomial_remainder(rho, 1.0 / z);
}

std::vector<double> marginal_vector(const JumpGeneratorSpec& gen, const DiscreteMeasure& m) { return gen.to_vector(m); }

double mass_deficit(const std::vector<double>& p) {
  double s = 0.0;
  for (double v : p) s += v;
  return std::abs(1.0 - s);
}

DiscreteMeasure as_measure(const JumpGeneratorSpec& gen, const std::vector<double>& p) {
  return DiscreteMeasure::on_states(gen.states(), p, 1e-9);
}

double relative_excess(double lhs, double rhs, double slack) {
  const double over = lhs - rhs - slack;
  if (over <= 0.0) return 0.0;
  return over / std::max(std::abs(rhs), 1e-300);
}

}  // namespace

BirthDeathSpec::BirthDeathSpec(std::vector<double> eta, std::vector<double> nu, double growth_C)
    : eta_(std::move(eta)), nu_(std::move(nu)) {
  if (eta_.size() < 2 || eta_.size() != nu_.size())
    throw Error(ErrorKind::domain, "birth-death: eta and nu need equal length >= 2 (states 0..N)");
  for (std::size_t x = 0; x < eta_.size(); ++x)
    if (!(eta_[x] >= 0.0) || !(nu_[x] >= 0.0) || !std::isfinite(eta_[x]) || !std::isfinite(nu_[x]))
      throw Error(ErrorKind::domain, "birth-death: rates must be finite and >= 0 (state " + std::to_string(x) + ")");
  if (nu_[0] != 0.0) throw Error(ErrorKind::domain, "birth-death: nu(0) must be 0");
  lip_eta_ = max_step(eta_);
  lip_nu_ = max_step(nu_);
  double needed = 0.0;
  for (std::size_t x = 0; x < eta_.size(); ++x) needed = std::max(needed, eta_[x] / (1.0 + static_cast<double>(x)));
  if (growth_C > 0.0) {
    if (needed > growth_C * (1.0 + 1e-12))
      throw Error(ErrorKind::domain, "birth-death: eta(x) <= C(1+x) fails for the declared C = " + format_double(growth_C));
    growth_C_ = growth_C;
  } else {
    growth_C_ = needed;
  }
}

BirthDeathSpec BirthDeathSpec::mm_infty(double a, double b, std::size_t N) { return linear(a, 0.0, b, N); }

BirthDeathSpec BirthDeathSpec::const_birth_linear_death(double birth, double death, std::size_t N) {
  return linear(birth, 0.0, death, N);
}

BirthDeathSpec BirthDeathSpec::mm1(double a, double b, std::size_t N) {
  std::vector<double> eta(N + 1, a), nu(N + 1, b);
  nu[0] = 0.0;
  return BirthDeathSpec(std::move(eta), std::move(nu));
}

BirthDeathSpec BirthDeathSpec::linear(double a0, double a1, double b, std::size_t N) {
  std::vector<double> eta(N + 1), nu(N + 1);
  for (std::size_t x = 0; x <= N; ++x) {
    eta[x] = a0 + a1 * static_cast<double>(x);
    nu[x] = b * static_cast<double>(x);
  }
  return BirthDeathSpec(std::move(eta), std::move(nu));
}

BirthDeathSpec BirthDeathSpec::truncated(std::size_t M) const {
  if (M < 1 || M > N()) throw Error(ErrorKind::domain, "birth-death: truncation level out of range");
  return BirthDeathSpec(std::vector<double>(eta_.begin(), eta_.begin() + M + 1),
                        std::vector<double>(nu_.begin(), nu_.begin() + M + 1), growth_C_);
}

JumpGeneratorSpec BirthDeathSpec::generator() const {
  const std::size_t n = eta_.size();
  std::vector<double> states(n), lam(n);
  std::vector<std::vector<KernelEntry>> rows(n);
  for (std::size_t x = 0; x < n; ++x) {
    states[x] = static_cast<double>(x);
    const double up = x + 1 < n ? eta_[x] : 0.0;
    const double down = nu_[x];
    lam[x] = up + down;
    if (lam[x] == 0.0) continue;
    if (up > 0.0) rows[x].push_back({x + 1, up / lam[x]});
    if (down > 0.0) rows[x].push_back({x - 1, down / lam[x]});
  }
  return JumpGeneratorSpec(std::move(states), std::move(lam), std::move(rows));
}

double curvature(const BirthDeathSpec& bd) {
  const auto& eta = bd.eta();
  const auto& nu = bd.nu();
  double k = INFINITY;
  for (std::size_t x = 0; x + 1 <= bd.N(); ++x) k = std::min(k, eta[x] + nu[x + 1] - eta[x + 1] - nu[x]);
  return k;
}

double truncated_curvature(const BirthDeathSpec& bd, std::size_t M) {
  if (M < 2 || M > bd.N()) throw Error(ErrorKind::domain, "truncated curvature needs 2 <= N <= rate length - 1");
  const auto& eta = bd.eta();
  const auto& nu = bd.nu();
  double k = INFINITY;
  for (std::size_t x = 0; x < M; ++x) {
    const double birth_next = x + 1 == M ? 0.0 : eta[x + 1];
    k = std::min(k, eta[x] + nu[x + 1] - birth_next - nu[x]);
  }
  return k;
}

double c_rho_increment(double rho) {
  if (!(rho > 1.0)) throw Error(ErrorKind::domain, "C_rho needs rho > 1");
  const bool big = rho > 2.0;
  double best = 0.0;
  for (long z = -1000000; z <= 1000000; ++z) {
    const double zz = static_cast<double>(z);
    const double denom = big ? 1.0 + std::pow(std::abs(zz), rho - 2.0) : 1.0;
    best = std::max(best, increment_excess(rho, zz) / denom);
  }
  // |z| -> infinity: the ratio tends to rho (rho - 1) / 2 when rho > 2.
  if (big) best = std::max(best, rho * (rho - 1.0) / 2.0);
  return best;
}

double c_rho_moment(double rho) {
  if (!(rho >= 1.0)) throw Error(ErrorKind::domain, "c_rho needs rho >= 1");
  double best = 0.0;
  for (long x = 0; x <= 1000000; ++x) {
    const double xx = static_cast<double>(x);
    // (1+x)^rho - x^rho without cancellation.
    const double diff = x == 0 ? 1.0 : std::pow(xx, rho) * std::expm1(rho * std::log1p(1.0 / xx));
    best = std::max(best, (1.0 + xx) * diff / (1.0 + std::pow(xx, rho)));
  }
  return std::max(best, rho);  // limit x -> infinity
}

ContractionReport contraction_report(const BirthDeathSpec& bd, const DiscreteMeasure& p0X,
                                     const DiscreteMeasure& p0Y, double rho, double t_end, std::size_t n_steps,
                                     const ContractionOptions& opts) {
  if (!(rho >= 1.0)) throw Error(ErrorKind::domain, "contraction report needs rho >= 1");
  if (n_steps < 1 || !(t_end > 0.0)) throw Error(ErrorKind::domain, "contraction report needs t_end > 0 and n_steps >= 1");
  if (opts.sub < 2 || opts.sub % 2 != 0) throw Error(ErrorKind::domain, "Simpson sub-intervals must be even");
  const JumpGeneratorSpec gen = bd.generator();
  ContractionReport r;
  r.rho = rho;
  r.kappa = curvature(bd);
  r.kappa_N = bd.N() >= 2 ? truncated_curvature(bd, bd.N()) : r.kappa;
  r.lip = bd.lip_eta() + bd.lip_nu();
  const double k = r.kappa_N;
  const bool big = rho > 2.0;
  r.C_rho = rho == 1.0 ? 0.0 : (big ? c_rho_increment(rho) : 1.0);
  r.kappa_limit_used = rho > 1.0 && rho <= 2.0 && k == 0.0;
  r.iterated_available = big && k > 0.0;

  const std::size_t S = n_steps * opts.sub;
  const double h = t_end / static_cast<double>(S);
  const double span = static_cast<double>(bd.N());
  std::vector<double> px = marginal_vector(gen, p0X), py = marginal_vector(gen, p0Y);

  struct Sample {
    double w1, wr, wlow, slack;
  };
  auto sample = [&](const std::vector<double>& a, const std::vector<double>& b) {
    const DiscreteMeasure ma = as_measure(gen, a), mb = as_measure(gen, b);
    Sample s;
    s.w1 = wasserstein_pow(ma, mb, 1.0);
    s.wr = rho == 1.0 ? s.w1 : wasserstein_pow(ma, mb, rho);
    s.wlow = big ? wasserstein_pow(ma, mb, rho - 1.0) : 0.0;
    // Missing probability mass can move W by at most deficit * span^rho.
    s.slack = (mass_deficit(a) + mass_deficit(b)) * std::pow(std::max(1.0, span), rho) + 1e-15;
    return s;
  };

  const Sample s0 = sample(px, py);
  // Iterated bound coefficient (kappa > 0, rho > 2).
  double iterated_coeff = 0.0;
  if (r.iterated_available) {
    const DiscreteMeasure ma = as_measure(gen, px), mb = as_measure(gen, py);
    const int top = static_cast<int>(std::ceil(rho - 2.0));
    const int top1 = static_cast<int>(std::ceil(rho - 1.0));
    auto C_of = [&](double r_) { return r_ > 2.0 ? c_rho_increment(r_) : 1.0; };
    std::vector<double> pi(top1 + 1);  // pi[j + 1] = pi_j
    pi[0] = 1.0;
    for (int j = 0; j < top1; ++j) pi[j + 1] = pi[j] * C_of(rho - j) * r.lip / (k * (rho - j - 1.0));
    for (int j = 0; j <= top; ++j) iterated_coeff += pi[j] * wasserstein_pow(ma, mb, rho - j);
    double s = 0.0;
    for (int j = 1; j <= top1; ++j) s += pi[j - 1];
    iterated_coeff += s * s0.w1;
  }

  double integral = 0.0;  // \int_0^t e^{k rho r} (W1 + W_{rho-1}^{rho-1}) dr
  Sample prev = s0;
  std::vector<Sample> cell(opts.sub + 1);
  for (std::size_t i = 0; i <= n_steps; ++i) {
    const double t = t_end * static_cast<double>(i) / static_cast<double>(n_steps);
    Sample cur = prev;
    if (i > 0) {
      cell[0] = prev;
      for (std::size_t q = 1; q <= opts.sub; ++q) {
        px = propagate(gen, px, h, opts.solver_tol);
        py = propagate(gen, py, h, opts.solver_tol);
        cell[q] = sample(px, py);
      }
      cur = cell[opts.sub];
      if (big) {
        const double t0 = t - h * static_cast<double>(opts.sub);
        double acc = 0.0;
        for (std::size_t q = 0; q <= opts.sub; ++q) {
          const double w = (q == 0 || q == opts.sub) ? 1.0 : (q % 2 ? 4.0 : 2.0);
          acc += w * std::exp(k * rho * (t0 + h * static_cast<double>(q))) * (cell[q].w1 + cell[q].wlow);
        }
        integral += acc * h / 3.0;
      }
    }
    prev = cur;

    double viol = 0.0;
    const double b1 = s0.w1 * std::exp(-k * t);
    viol = std::max(viol, relative_excess(cur.w1, b1, cur.slack));
    double br = b1;
    if (rho > 1.0 && !big) {
      const double kk = k * (rho - 1.0);
      const double shape = kk == 0.0 ? t * std::exp(-k * t) : std::exp(-k * t) * (-std::expm1(-kk * t)) / kk;
      br = s0.wr * std::exp(-k * rho * t) + r.lip * s0.w1 * shape;
    } else if (big) {
      br = s0.wr * std::exp(-k * rho * t) + r.C_rho * r.lip * std::exp(-k * rho * t) * integral;
    }
    if (rho > 1.0) viol = std::max(viol, relative_excess(cur.wr, br, cur.slack));
    double bi = NAN;
    if (r.iterated_available) {
      bi = iterated_coeff * std::exp(-k * t);
      viol = std::max(viol, relative_excess(cur.wr, bi, cur.slack));
    }
    r.t.push_back(t);
    r.w1.push_back(cur.w1);
    r.bound1.push_back(b1);
    r.w_rho.push_back(cur.wr);
    r.bound_rho.push_back(br);
    r.bound_iterated.push_back(bi);
    r.violation.push_back(viol);
    r.max_violation = std::max(r.max_violation, viol);
  }
  return r;
}

BdMomentCheck bd_moment_bound(const BirthDeathSpec& bd, const DiscreteMeasure& p0, double rho, double t, double tol) {
  if (!(rho >= 1.0) || !(t >= 0.0)) throw Error(ErrorKind::domain, "moment bound needs rho >= 1 and t >= 0");
  const JumpGeneratorSpec gen = bd.generator();
  const std::vector<double> pt = propagate(gen, gen.to_vector(p0), t, tol);
  BdMomentCheck c;
  for (std::size_t x = 0; x < pt.size(); ++x) c.moment += pt[x] * std::pow(static_cast<double>(x), rho);
  c.c_rho = c_rho_moment(rho);
  c.bound = (moment(p0, rho) + 1.0) * std::exp(c.c_rho * bd.growth_C() * t) - 1.0;
  return c;
}

void write_csv(std::ostream& out, const ContractionReport& r) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < r.t.size(); ++i)
    rows.push_back({r.t[i], r.w1[i], r.bound1[i], r.w_rho[i], r.bound_rho[i], r.violation[i]});
  write_rows(out, "t,w1,bound1,w_rho,bound_rho,violation", rows);
}

}  // namespace wflow

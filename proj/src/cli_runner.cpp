#include "wflow/cli_runner.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wflow/csv.hpp"
#include "wflow/errors.hpp"
#include "wflow/transport.hpp"

namespace wflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::set<std::string> kKeys = {
    "kind",  "generator", "generator_y", "rates",      "process",   "process_y",      "p0x",
    "p0y",   "p0",        "rho",         "t",          "steps",     "quadrature",     "tolerance",
    "solver_tol", "seed", "paths",       "confidence", "mu",        "eta",            "grid",
    "identity_steps", "alpha", "layers", "kernel_bound",
};

// Wraps a YAML document so every error carries `source:line`.
class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
    std::string where = source_;
    const YAML::Mark m = at.Mark();
    if (m.line >= 0) where += ":" + std::to_string(m.line + 1);
    throw Error(ErrorKind::config, where + ": " + what);
  }

  YAML::Node need(const YAML::Node& map, const std::string& key) const {
    const YAML::Node n = map[key];
    if (!n) fail(map, "missing key '" + key + "'");
    return n;
  }

  double number(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be a number");
    const std::string text = n.Scalar();
    if (text == "inf" || text == ".inf" || text == "infinity") return kInf;
    try {
      const double v = n.as<double>();
      if (std::isnan(v)) fail(n, what + " is NaN");
      return v;
    } catch (const YAML::Exception&) {
      fail(n, what + " must be a number, got '" + text + "'");
    }
  }

  double positive(const YAML::Node& n, const std::string& what) const {
    const double v = number(n, what);
    if (!(v > 0.0) || !std::isfinite(v)) fail(n, what + " must be finite and > 0");
    return v;
  }

  std::size_t count(const YAML::Node& n, const std::string& what) const {
    const double v = number(n, what);
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) fail(n, what + " must be a nonnegative integer");
    return static_cast<std::size_t>(v);
  }

  std::uint64_t seed(const YAML::Node& n) const {
    if (!n.IsScalar()) fail(n, "seed must be an unsigned integer");
    try {
      return n.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      fail(n, "seed must be an unsigned integer, got '" + n.Scalar() + "'");
    }
  }

  std::vector<double> numbers(const YAML::Node& n, const std::string& what) const {
    if (n.IsScalar()) return {number(n, what)};
    if (!n.IsSequence() || n.size() == 0) fail(n, what + " must be a number or a nonempty list");
    std::vector<double> out;
    for (const auto& e : n) out.push_back(number(e, what));
    return out;
  }

  std::vector<std::vector<double>> matrix(const YAML::Node& n, const std::string& what) const {
    if (!n.IsSequence()) fail(n, what + " must be a list of rows");
    std::vector<std::vector<double>> out;
    for (const auto& row : n) {
      if (!row.IsSequence()) fail(row, what + " rows must be lists");
      out.push_back(numbers(row, what));
    }
    return out;
  }

  // Runs a library constructor; its validation errors become config errors at `at`.
  template <class F>
  auto build(const YAML::Node& at, F&& f) const -> decltype(f()) {
    try {
      return f();
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::config) throw;
      fail(at, e.what());
    }
  }

  DiscreteMeasure measure(const YAML::Node& n, const std::string& what) const {
    if (!n.IsMap()) fail(n, what + " must be a map with 'dirac' or 'support' and 'weights'");
    if (n["dirac"]) return DiscreteMeasure::dirac(number(n["dirac"], what + ".dirac"));
    const auto x = numbers(need(n, "support"), what + ".support");
    const auto w = numbers(need(n, "weights"), what + ".weights");
    if (x.size() != w.size()) fail(n, what + ": support and weights differ in length");
    return build(n, [&] { return DiscreteMeasure::from_unsorted(x, w); });
  }

  JumpGeneratorSpec generator(const YAML::Node& n) const {
    if (!n.IsMap()) fail(n, "generator must be a map with states, lambda, kernel");
    auto states = numbers(need(n, "states"), "states");
    auto lambda = numbers(need(n, "lambda"), "lambda");
    const auto kernel = matrix(need(n, "kernel"), "kernel");
    return build(n, [&] { return JumpGeneratorSpec::from_dense(std::move(states), std::move(lambda), kernel); });
  }

  BirthDeathSpec rates(const YAML::Node& n) const {
    if (!n.IsMap()) fail(n, "rates must be a map");
    const double C = n["growth_C"] ? positive(n["growth_C"], "growth_C") : 0.0;
    if (n["family"]) {
      const std::string family = n["family"].Scalar();
      auto N = [&] {
        const std::size_t v = count(need(n, "N"), "N");
        if (v < 1) fail(n, "N must be >= 1");
        return v;
      };
      auto r = [&](const char* key) { return number(need(n, key), key); };
      return build(n, [&] {
        if (family == "mm_infty") return BirthDeathSpec::mm_infty(r("a"), r("b"), N());
        if (family == "const_birth_linear_death")
          return BirthDeathSpec::const_birth_linear_death(r("birth"), r("death"), N());
        if (family == "mm1") return BirthDeathSpec::mm1(r("a"), r("b"), N());
        if (family == "linear") return BirthDeathSpec::linear(r("a0"), r("a1"), r("b"), N());
        fail(n["family"], "unknown rate family '" + family + "'");
      });
    }
    auto eta = numbers(need(n, "eta"), "eta");
    auto nu = numbers(need(n, "nu"), "nu");
    return build(n, [&] { return BirthDeathSpec(std::move(eta), std::move(nu), C); });
  }

  PdmpSpec process(const YAML::Node& n) const {
    if (!n.IsMap()) fail(n, "process must be a map with drift, intensity, kernel");
    const YAML::Node d = need(n, "drift");
    Drift drift;
    if (d.IsScalar() && d.Scalar() == "zero") {
      drift = Drift::zero();
    } else if (d.IsScalar() && d.Scalar() == "neg_tanh") {
      drift = Drift::neg_tanh();
    } else if (d.IsMap() && d["const"]) {
      drift = Drift::constant(number(d["const"], "drift.const"));
    } else {
      fail(d, "drift must be zero, neg_tanh or {const: c}");
    }
    const YAML::Node li = need(n, "intensity");
    Intensity intensity;
    if (li.IsScalar()) {
      const double v = number(li, "intensity");
      if (!(v >= 0.0) || !std::isfinite(v)) fail(li, "intensity must be finite and >= 0");
      intensity = Intensity::constant(v);
    } else {
      auto nodes = numbers(need(li, "nodes"), "intensity.nodes");
      auto values = numbers(need(li, "values"), "intensity.values");
      intensity = build(li, [&] { return Intensity::tabulated(std::move(nodes), std::move(values)); });
    }
    const YAML::Node k = need(n, "kernel");
    JumpKernel kernel;
    if (k.IsMap() && k["uniform_pm"]) {
      kernel = JumpKernel::uniform_pm(positive(k["uniform_pm"], "kernel.uniform_pm"));
    } else if (k.IsMap() && k["shift"]) {
      kernel = JumpKernel::shift(number(k["shift"], "kernel.shift"));
    } else {
      fail(k, "kernel must be {uniform_pm: M} or {shift: d}");
    }
    const double v_sup = n["v_sup"] ? positive(n["v_sup"], "v_sup") : 0.0;
    const double lbar = n["lambda_bar"] ? positive(n["lambda_bar"], "lambda_bar") : 0.0;
    const double M = n["jump_bound"] ? positive(n["jump_bound"], "jump_bound") : 0.0;
    return build(n, [&] { return PdmpSpec(drift, intensity, kernel, v_sup, lbar, M); });
  }

 private:
  std::string source_;
};

template <class T>
bool has(const std::optional<T>& o) {
  return o.has_value();
}

}  // namespace

ExperimentKind parse_kind(const std::string& name) {
  if (name == "identity") return ExperimentKind::identity;
  if (name == "bd-contraction") return ExperimentKind::bd_contraction;
  if (name == "pdmp-approx") return ExperimentKind::pdmp_approx;
  if (name == "simulate") return ExperimentKind::simulate;
  if (name == "bounds") return ExperimentKind::bounds;
  throw Error(ErrorKind::config, "unknown experiment kind '" + name + "'");
}

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::identity: return "identity";
    case ExperimentKind::bd_contraction: return "bd-contraction";
    case ExperimentKind::pdmp_approx: return "pdmp-approx";
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::bounds: return "bounds";
  }
  return "?";
}

double default_tolerance(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::identity: return 1e-6;
    case ExperimentKind::bd_contraction: return 1e-8;
    case ExperimentKind::pdmp_approx: return 1e-5;
    case ExperimentKind::simulate: return 1e-9;
    case ExperimentKind::bounds: return 1e-10;
  }
  return 1e-8;
}

ExperimentConfig parse_config(const std::string& text, ExperimentKind kind, const std::string& source) {
  const Reader rd(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorKind::config, source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw Error(ErrorKind::config, source + ": top level must be a map");
  for (const auto& kv : root) {
    const std::string key = kv.first.Scalar();
    if (!kKeys.count(key)) rd.fail(kv.first, "unknown key '" + key + "'");
  }

  ExperimentConfig c;
  c.kind = kind;
  c.source = source;
  if (root["kind"] && root["kind"].Scalar() != to_string(kind))
    rd.fail(root["kind"], "file is for '" + root["kind"].Scalar() + "', not '" + to_string(kind) + "'");

  if (root["generator"]) c.gen_x = rd.generator(root["generator"]);
  if (root["generator_y"]) c.gen_y = rd.generator(root["generator_y"]);
  if (root["rates"]) c.rates = rd.rates(root["rates"]);
  if (root["process"]) c.process_x = rd.process(root["process"]);
  if (root["process_y"]) c.process_y = rd.process(root["process_y"]);
  if (root["p0x"] && root["p0"]) rd.fail(root["p0"], "give either p0 or p0x, not both");
  if (root["p0x"]) c.p0_x = rd.measure(root["p0x"], "p0x");
  if (root["p0"]) c.p0_x = rd.measure(root["p0"], "p0");
  if (root["p0y"]) c.p0_y = rd.measure(root["p0y"], "p0y");

  if (root["rho"]) {
    c.rho = rd.numbers(root["rho"], "rho");
    for (double r : c.rho)
      if (!(r >= 1.0) || !std::isfinite(r)) rd.fail(root["rho"], "rho must be finite and >= 1");
  }
  if (root["t"]) c.t = rd.positive(root["t"], "t");
  if (root["steps"]) {
    c.steps = rd.count(root["steps"], "steps");
    if (*c.steps < 1) rd.fail(root["steps"], "steps must be >= 1");
  }
  if (root["quadrature"]) {
    const std::string q = root["quadrature"].Scalar();
    if (q == "simpson") c.quadrature = Quadrature::simpson;
    else if (q == "trapezoid") c.quadrature = Quadrature::trapezoid;
    else rd.fail(root["quadrature"], "quadrature must be simpson or trapezoid");
  }
  if (root["tolerance"]) c.tolerance = rd.positive(root["tolerance"], "tolerance");
  if (root["solver_tol"]) c.solver_tol = rd.positive(root["solver_tol"], "solver_tol");
  if (root["seed"]) c.seed = rd.seed(root["seed"]);
  if (root["paths"]) {
    c.paths = rd.count(root["paths"], "paths");
    if (c.paths < 1) rd.fail(root["paths"], "paths must be >= 1");
  }
  if (root["confidence"]) {
    c.confidence = rd.number(root["confidence"], "confidence");
    if (!(c.confidence > 0.0 && c.confidence < 1.0)) rd.fail(root["confidence"], "confidence must be in (0, 1)");
  }
  if (root["mu"]) {
    c.mu = rd.numbers(root["mu"], "mu");
    for (std::size_t i = 0; i < c.mu.size(); ++i) {
      if (!(c.mu[i] >= 1.0) || !std::isfinite(c.mu[i])) rd.fail(root["mu"], "every mu must be finite and >= 1");
      if (i > 0 && !(c.mu[i] > c.mu[i - 1])) rd.fail(root["mu"], "mu must increase");
    }
  }
  if (root["eta"]) c.eta = rd.positive(root["eta"], "eta");
  if (const YAML::Node g = root["grid"]) {
    if (!g.IsMap()) rd.fail(g, "grid must be a map with lo, hi, cells");
    c.grid.lo = rd.number(rd.need(g, "lo"), "grid.lo");
    c.grid.hi = rd.number(rd.need(g, "hi"), "grid.hi");
    if (g["cells"]) c.grid.cells = rd.count(g["cells"], "grid.cells");
    if (!(c.grid.hi > c.grid.lo) || c.grid.cells < 2) rd.fail(g, "grid needs lo < hi and at least 2 cells");
    c.grid.given = true;
  }
  if (root["identity_steps"]) {
    c.identity_steps = rd.count(root["identity_steps"], "identity_steps");
    if (c.identity_steps < 1) rd.fail(root["identity_steps"], "identity_steps must be >= 1");
  }
  if (root["alpha"]) {
    c.alpha = rd.numbers(root["alpha"], "alpha");
    for (double a : c.alpha)
      if (!(a >= 1.0) || !std::isfinite(a)) rd.fail(root["alpha"], "alpha must be finite and >= 1");
  }
  if (const YAML::Node l = root["layers"]) {
    if (!l.IsMap()) rd.fail(l, "layers must be a map with s and n_max");
    if (l["s"]) c.layer_s = rd.positive(l["s"], "layers.s");
    if (l["n_max"]) c.n_max = rd.count(l["n_max"], "layers.n_max");
  }
  if (const YAML::Node kb = root["kernel_bound"]) {
    if (!kb.IsMap()) rd.fail(kb, "kernel_bound must be a map with eta and optional f");
    if (kb["eta"]) c.kernel_eta = rd.positive(kb["eta"], "kernel_bound.eta");
    if (kb["f"]) c.kernel_f = rd.numbers(kb["f"], "kernel_bound.f");
  }

  // What each kind needs.
  auto dynamics = static_cast<int>(has(c.gen_x)) + static_cast<int>(has(c.rates)) + static_cast<int>(has(c.process_x));
  auto require = [&](bool ok, const std::string& what) {
    if (!ok) rd.fail(root, what);
  };
  switch (kind) {
    case ExperimentKind::identity:
      require(has(c.gen_x) != has(c.rates) && !has(c.process_x), "identity needs exactly one of generator or rates");
      require(has(c.p0_x) && has(c.p0_y), "identity needs p0x and p0y");
      for (double r : c.rho) require(r > 1.0, "identity needs rho > 1 (rho = 1 potentials are degenerate)");
      break;
    case ExperimentKind::bd_contraction:
      require(has(c.rates) && !has(c.gen_x) && !has(c.process_x), "bd-contraction needs rates");
      require(has(c.p0_x) && has(c.p0_y), "bd-contraction needs p0x and p0y");
      break;
    case ExperimentKind::pdmp_approx:
      require(has(c.process_x) && !has(c.gen_x) && !has(c.rates), "pdmp-approx needs process");
      require(has(c.p0_x) && has(c.p0_y), "pdmp-approx needs p0x and p0y");
      require(c.rho.size() == 1 && c.rho[0] > 1.0, "pdmp-approx needs a single rho > 1");
      require(c.mu.size() >= 2, "pdmp-approx needs at least two mu values");
      break;
    case ExperimentKind::simulate:
      require(dynamics == 1, "simulate needs exactly one of generator, rates or process");
      require(has(c.p0_x), "simulate needs p0");
      break;
    case ExperimentKind::bounds:
      require(dynamics == 1, "bounds needs exactly one of generator, rates or process");
      require(has(c.p0_x), "bounds needs p0");
      break;
  }
  if (c.gen_y) require(has(c.gen_x), "generator_y needs generator");
  if (c.process_y) require(has(c.process_x), "process_y needs process");
  if (c.gen_x && !c.gen_y) c.gen_y = c.gen_x;
  if (c.process_x && !c.process_y) c.process_y = c.process_x;

  // Initial laws must sit on the states of a finite generator.
  auto on_states = [&](const std::optional<DiscreteMeasure>& p, const JumpGeneratorSpec& g, const char* key) {
    if (!p) return;
    rd.build(root[key] ? root[key] : root, [&] { return g.to_vector(*p); });
  };
  if (c.gen_x) {
    on_states(c.p0_x, *c.gen_x, root["p0"] ? "p0" : "p0x");
    on_states(c.p0_y, *c.gen_y, "p0y");
  }
  if (c.rates) {
    const JumpGeneratorSpec g = c.rates->generator();
    on_states(c.p0_x, g, root["p0"] ? "p0" : "p0x");
    on_states(c.p0_y, g, "p0y");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path, ExperimentKind kind) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, path + ": cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), kind, path);
}

namespace {

struct Context {
  const ExperimentConfig& c;
  const RunOptions& o;
  RunSummary& s;
  double tol;

  std::ofstream open(const std::string& name) {
    const std::filesystem::path p = std::filesystem::path(o.out_dir) / name;
    std::ofstream out(p);
    if (!out) throw Error(ErrorKind::config, "cannot write " + p.string());
    s.outputs.push_back(name);
    return out;
  }

  // One checked quantity; a violation when it exceeds the tolerance.
  void check(double excess) {
    ++s.bounds_checked;
    if (excess > tol) ++s.violations;
  }
};

std::string rho_suffix(const std::vector<double>& rhos, double rho) {
  return rhos.size() == 1 ? std::string() : "_rho" + format_double(rho);
}

JumpGeneratorSpec generator_of(const ExperimentConfig& c) { return c.gen_x ? *c.gen_x : c.rates->generator(); }

std::uint64_t require_seed(const ExperimentConfig& c, const RunOptions& o) {
  if (o.seed) return *o.seed;
  if (c.seed) return *c.seed;
  throw Error(ErrorKind::config, c.source + ": this experiment draws random numbers; give seed in the config or --seed");
}

double smoothing_eta(const ExperimentConfig& c) {
  if (c.eta) return *c.eta;
  double lo = c.p0_x->support().front(), hi = c.p0_x->support().back();
  if (c.p0_y) {
    lo = std::min(lo, c.p0_y->support().front());
    hi = std::max(hi, c.p0_y->support().back());
  }
  if (!(hi > lo))
    throw Error(ErrorKind::config, c.source + ": eta defaults to 0.05 * support range, which is 0 here; set eta");
  return 0.05 * (hi - lo);
}

// Covers the smoothed initial laws, the flow over [0, t] and all but 1e-12 of the jumps.
std::vector<double> state_grid(const ExperimentConfig& c, const PdmpSpec& x, const PdmpSpec& y, double eta) {
  if (c.grid.given) return uniform_grid(c.grid.lo, c.grid.hi, c.grid.cells);
  double lo = c.p0_x->support().front(), hi = c.p0_x->support().back();
  if (c.p0_y) {
    lo = std::min(lo, c.p0_y->support().front());
    hi = std::max(hi, c.p0_y->support().back());
  }
  double pad = 0.0;
  for (const PdmpSpec* s : {&x, &y}) {
    const double jumps = s->lambda_bar() > 0.0
                             ? static_cast<double>(poisson_truncation(s->lambda_bar() * c.t, 1e-12).n_max)
                             : 0.0;
    pad = std::max(pad, s->v_sup() * c.t + s->jump_bound() * jumps);
  }
  pad += 30.0 * eta;
  return uniform_grid(lo - pad, hi + pad, c.grid.cells);
}

void run_identity(Context& ctx) {
  const ExperimentConfig& c = ctx.c;
  const JumpGeneratorSpec gx = generator_of(c);
  const JumpGeneratorSpec gy = c.gen_y ? *c.gen_y : gx;
  EvolutionOptions opts;
  opts.quadrature = c.quadrature;
  opts.solver_tol = c.solver_tol;
  opts.threads = ctx.o.threads;
  for (double rho : c.rho) {
    const EvolutionReport r = verify_identity(gx, gy, *c.p0_x, *c.p0_y, rho, c.t, c.steps.value_or(400), opts);
    auto out = ctx.open("identity" + rho_suffix(c.rho, rho) + ".csv");
    write_csv(out, r);
    for (double res : r.residual) ctx.check(res);
    ctx.s.max_residual = std::max(ctx.s.max_residual, r.max_residual);
  }
}

void run_contraction(Context& ctx) {
  const ExperimentConfig& c = ctx.c;
  ContractionOptions opts;
  opts.solver_tol = c.solver_tol;
  for (double rho : c.rho) {
    const ContractionReport r = contraction_report(*c.rates, *c.p0_x, *c.p0_y, rho, c.t, c.steps.value_or(200), opts);
    auto out = ctx.open("contraction" + rho_suffix(c.rho, rho) + ".csv");
    write_csv(out, r);
    for (double v : r.violation) ctx.check(v);
    ctx.s.max_residual = std::max(ctx.s.max_residual, r.max_violation);
  }
}

void run_pdmp(Context& ctx) {
  const ExperimentConfig& c = ctx.c;
  const double eta = smoothing_eta(c);
  const GridMeasure px = laplace_smooth(*c.p0_x, eta);
  const GridMeasure py = laplace_smooth(*c.p0_y, eta);
  const std::vector<double> grid = state_grid(c, *c.process_x, *c.process_y, eta);
  MuStudyOptions opts;
  opts.evolution.threads = ctx.o.threads;
  opts.threads = ctx.o.threads;
  const MuStudy st = mu_convergence_study(*c.process_x, *c.process_y, px, py, c.rho[0], c.t, c.mu, grid, opts);
  const bool flow_case = c.process_x->intensity().is_zero();
  std::vector<std::vector<double>> rows;
  for (const auto& r : st.rows) {
    const double limit = 2.0 / r.mu + st.grid_step;
    rows.push_back({r.mu, r.identity_residual, static_cast<double>(r.flagged_cells), r.cauchy_w, r.flow_w1,
                    flow_case ? limit : NAN, r.potential_cauchy, r.edge_mass});
    ctx.check(r.identity_residual);
    ctx.s.max_residual = std::max(ctx.s.max_residual, r.identity_residual);
    if (flow_case) {
      ++ctx.s.bounds_checked;
      if (!(r.flow_w1 <= limit)) ++ctx.s.violations;
    }
  }
  ++ctx.s.bounds_checked;
  if (!st.cauchy_decreasing) ++ctx.s.violations;
  auto out = ctx.open("pdmp_mu.csv");
  write_rows(out, "mu,identity_residual,flagged_cells,cauchy_w,flow_w1,flow_w1_limit,potential_cauchy,edge_mass", rows);
}

void run_simulate(Context& ctx) {
  const ExperimentConfig& c = ctx.c;
  const std::uint64_t seed = require_seed(c, ctx.o);
  if (c.process_x) {
    const PathSample s =
        simulate_process(*c.process_x, initial_law(*c.p0_x), c.t, kInf, c.paths, seed, ctx.o.threads);
    auto out = ctx.open("empirical.csv");
    write_csv(out, empirical_measure(s.end));
    ctx.s.bounds_checked += c.paths;
    ctx.s.violations += s.bound_violations;
    ctx.s.max_residual = std::max(0.0, s.max_bound_excess);
    return;
  }
  const JumpGeneratorSpec g = generator_of(c);
  const DiscreteMeasure emp = simulate_paths(g, *c.p0_x, c.t, c.paths, seed, ctx.o.threads);
  const DiscreteMeasure exact = uniformized_marginal(g, *c.p0_x, c.t, 1e-12);
  {
    auto out = ctx.open("empirical.csv");
    write_csv(out, emp);
  }
  {
    auto out = ctx.open("exact.csv");
    write_csv(out, exact);
  }
  // DKW: sup |F_n - F| <= eps, hence W_1 <= eps * (state range).
  const double range = g.states().back() - g.states().front();
  const double envelope = dkw_epsilon(c.paths, 1.0 - c.confidence) * range;
  const double w1 = wasserstein(emp, exact, 1.0);
  ++ctx.s.bounds_checked;
  if (!(w1 <= envelope)) ++ctx.s.violations;
  ctx.s.max_residual = w1;
}

struct BoundRow {
  std::string check;
  double param, lhs, rhs;
};

void run_bounds(Context& ctx) {
  const ExperimentConfig& c = ctx.c;
  std::vector<BoundRow> rows;
  auto add = [&](std::string name, double param, double lhs, double rhs) {
    const double excess = (lhs - rhs) / std::max(1.0, std::abs(rhs));
    ctx.check(excess);
    ctx.s.max_residual = std::max(ctx.s.max_residual, std::max(0.0, excess));
    rows.push_back({std::move(name), param, lhs, rhs});
  };

  if (c.process_x) {
    const PdmpSpec& spec = *c.process_x;
    const std::uint64_t seed = require_seed(c, ctx.o);
    const double eta = smoothing_eta(c);
    const GridMeasure p0 = laplace_smooth(*c.p0_x, eta);
    std::vector<double> mus;
    for (double mu : c.mu)
      if (mu >= 1.0 / c.t) mus.push_back(mu);
    mus.push_back(kInf);
    for (double q : c.alpha)
      for (double mu : mus) {
        const MomentSimCheck m = simulated_moment_check(spec, initial_law(p0), c.t, q, mu, c.paths, seed, ctx.o.threads);
        add("moment_sim_q" + format_double(q), mu, m.mean, m.bound + 4.0 * m.sigma);
      }
    // Tail ratios of the mu-chain marginal against c_t e^{C0 y}, C0 = 1 / eta.
    std::vector<double> y;
    for (int j = 1; j <= 20; ++j) y.push_back(0.5 * eta * j);
    const double C0 = 1.0 / eta;
    const double c0 = tail_ratio_c_for(p0, y, C0);
    const std::vector<double> grid = state_grid(c, spec, spec, eta);
    for (double mu : mus) {
      if (std::isinf(mu)) continue;
      const double ct = propagation_constants(spec, c0, C0, c.t, 1.0, mu).c_t;
      const GridMeasure m = mu_chain_marginal(spec, p0, mu, c.t, grid);
      add("tail_ratio_c", mu, tail_ratio_c_for(m, y, C0), ct);
    }
  } else {
    const JumpGeneratorSpec g = generator_of(c);
    const LayerReport lr = layer_inequality_report(g, *c.p0_x, std::min(c.layer_s, c.t), c.t, c.n_max);
    add("layer_sandwich_upper", static_cast<double>(c.n_max), lr.sandwich_upper, 0.0);
    add("layer_sandwich_lower", static_cast<double>(c.n_max), lr.sandwich_lower, 0.0);
    add("layer_equivalence", c.layer_s, lr.equivalence, 0.0);
    add("q_mass", static_cast<double>(c.n_max), lr.q_mass_excess, 0.0);
    std::vector<double> f = c.kernel_f.empty() ? g.states() : c.kernel_f;
    if (f.size() != g.size())
      throw Error(ErrorKind::config, c.source + ": kernel_bound.f needs one value per state");
    const KernelBound kb = kernel_moment_bound(g, *c.p0_x, c.t, f, c.kernel_eta);
    add("kernel_bound", c.kernel_eta, kb.lhs, kb.rhs);
    for (double a : c.alpha) {
      const MomentBound mb = moment_growth_bound(g, *c.p0_x, a, c.t);
      add("moment_lemma", a, mb.exact, mb.bound);
      if (c.rates) {
        const BdMomentCheck bm = bd_moment_bound(*c.rates, *c.p0_x, a, c.t);
        add("bd_moment", a, bm.moment, bm.bound);
      }
    }
  }
  auto out = ctx.open("bounds.csv");
  out << "check,param,lhs,rhs\n";
  for (const auto& r : rows)
    out << r.check << ',' << format_double(r.param) << ',' << format_double(r.lhs) << ',' << format_double(r.rhs)
        << '\n';
}

}  // namespace

RunSummary run(const ExperimentConfig& config, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  RunSummary s;
  std::error_code ec;
  std::filesystem::create_directories(options.out_dir, ec);
  if (ec) throw Error(ErrorKind::config, "cannot create output directory " + options.out_dir + ": " + ec.message());
  Context ctx{config, options, s, config.tolerance.value_or(default_tolerance(config.kind))};
  switch (config.kind) {
    case ExperimentKind::identity: run_identity(ctx); break;
    case ExperimentKind::bd_contraction: run_contraction(ctx); break;
    case ExperimentKind::pdmp_approx: run_pdmp(ctx); break;
    case ExperimentKind::simulate: run_simulate(ctx); break;
    case ExperimentKind::bounds: run_bounds(ctx); break;
  }
  s.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  s.outputs.push_back("summary.json");
  std::ofstream js(std::filesystem::path(options.out_dir) / "summary.json");
  if (!js) throw Error(ErrorKind::config, "cannot write summary.json in " + options.out_dir);
  js << summary_json(s) << '\n';
  return s;
}

std::string summary_json(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["max_residual"] = s.max_residual;
  j["bounds_checked"] = s.bounds_checked;
  j["violations"] = s.violations;
  j["runtime_seconds"] = s.runtime_seconds;
  j["outputs"] = s.outputs;
  return j.dump();
}

}  // namespace wflow

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wflow/birth_death.hpp"
#include "wflow/evolution.hpp"
#include "wflow/jump_process.hpp"
#include "wflow/measures.hpp"
#include "wflow/pdmp.hpp"

namespace wflow {

enum class ExperimentKind { identity, bd_contraction, pdmp_approx, simulate, bounds };

// Throws a config error for unknown names.
ExperimentKind parse_kind(const std::string& name);
const char* to_string(ExperimentKind kind);

struct GridSpec {
  double lo = 0.0, hi = 0.0;
  std::size_t cells = 2048;
  bool given = false;  // otherwise derived from the initial laws and the process constants
};

// One experiment, as read from a YAML file. Only the fields used by `kind`
// are required; the loader rejects missing ones with the line of the parent
// section.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::identity;
  std::string source;

  std::optional<JumpGeneratorSpec> gen_x, gen_y;
  std::optional<BirthDeathSpec> rates;
  std::optional<PdmpSpec> process_x, process_y;
  std::optional<DiscreteMeasure> p0_x, p0_y;

  std::vector<double> rho{2.0};
  double t = 1.0;
  std::optional<std::size_t> steps;    // 400 for identity, 200 for bd-contraction
  Quadrature quadrature = Quadrature::simpson;
  std::optional<double> tolerance;     // per-kind default, see default_tolerance()
  double solver_tol = 1e-14;

  std::optional<std::uint64_t> seed;
  std::size_t paths = 100000;
  double confidence = 0.99;

  std::vector<double> mu{8, 16, 32, 64};
  std::optional<double> eta;  // Laplace smoothing scale
  GridSpec grid;
  std::size_t identity_steps = 100;

  std::vector<double> alpha{1, 2, 3};
  double layer_s = 0.5;
  std::size_t n_max = 15;
  double kernel_eta = 0.5;
  std::vector<double> kernel_f;  // f on the states; empty means f(y) = y
};

double default_tolerance(ExperimentKind kind);

ExperimentConfig load_config(const std::string& path, ExperimentKind kind);
ExperimentConfig parse_config(const std::string& text, ExperimentKind kind, const std::string& source = "<config>");

struct RunOptions {
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;  // overrides the config
  unsigned threads = 0;
};

struct RunSummary {
  double max_residual = 0.0;
  std::size_t bounds_checked = 0;
  std::size_t violations = 0;
  double runtime_seconds = 0.0;
  std::vector<std::string> outputs;  // files written, relative to out_dir
  int exit_code() const { return violations == 0 ? 0 : 1; }
};

// Writes the report CSVs and summary.json into out_dir.
RunSummary run(const ExperimentConfig& config, const RunOptions& options);

// `{"schema":1,...}` on one line.
std::string summary_json(const RunSummary& s);

}  // namespace wflow

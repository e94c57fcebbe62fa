// wflow <kind> --config <path> [--out <dir>] [--seed <u64>] [--threads <n>]
//
// Exit status: 0 all checks within tolerance, 1 some check violated,
// 2 bad arguments or config, 3 numerical failure.
#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "wflow/cli_runner.hpp"
#include "wflow/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Wasserstein evolution checks for jump processes, birth-death chains and PDMPs"};
  std::string kind, config, out = ".";
  std::uint64_t seed = 0;
  unsigned threads = 0;
  app.add_option("kind", kind, "identity | bd-contraction | pdmp-approx | simulate | bounds")
      ->required()
      ->check(CLI::IsMember({"identity", "bd-contraction", "pdmp-approx", "simulate", "bounds"}));
  app.add_option("--config", config, "YAML experiment file")->required();
  app.add_option("--out", out, "output directory (created if missing)");
  auto* seed_opt = app.add_option("--seed", seed, "overrides the seed in the config");
  app.add_option("--threads", threads, "worker threads; 0 means WFLOW_THREADS, then all cores");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const wflow::ExperimentKind k = wflow::parse_kind(kind);
    const wflow::ExperimentConfig cfg = wflow::load_config(config, k);
    wflow::RunOptions opts;
    opts.out_dir = out;
    opts.threads = threads;
    if (*seed_opt) opts.seed = seed;
    const wflow::RunSummary s = wflow::run(cfg, opts);
    std::cout << wflow::summary_json(s) << '\n';
    if (s.violations > 0)
      std::cerr << "wflow: " << s.violations << " of " << s.bounds_checked << " checks outside tolerance\n";
    return s.exit_code();
  } catch (const wflow::Error& e) {
    std::cerr << "wflow: " << e.what() << '\n';
    return e.kind() == wflow::ErrorKind::config ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "wflow: " << e.what() << '\n';
    return 3;
  }
}

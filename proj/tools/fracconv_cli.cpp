#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "fracconv/error.hpp"
#include "fracconv/runner.hpp"

namespace {

int report(const fracconv::RunOutcome& outcome) {
  for (const auto& c : outcome.result.checks)
    std::cout << (c.passed ? "PASS  " : "FAIL  ") << c.name << (c.detail.empty() ? "" : "  (" + c.detail + ")") << "\n";
  for (const auto& f : outcome.result.flagged)
    std::cout << "FLAG  member " << f.index << " [" << f.stage << "]: " << f.reason << "\n";
  if (outcome.written) std::cout << "wrote " << outcome.written->string() << "\n";
  std::cout << (outcome.passed() ? "all checks passed" : "check failure") << "\n";
  return outcome.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo verification suite for fractional convection-diffusion with random data"};
  app.require_subcommand(1);

  std::string config_path, manifest_path, out;
  std::uint64_t seed = 0;
  int workers = 0;

  auto add_common = [&](CLI::App* sub, bool with_seed) {
    if (with_seed) sub->add_option("--seed", seed, "Master seed (overrides the config)");
    sub->add_option("--workers", workers, "Worker threads (default: available parallelism)")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", out, "Output directory (overrides the config)");
  };

  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  run->add_option("config", config_path, "Config file")->required();
  add_common(run, true);

  auto* list = app.add_subcommand("list", "List registered experiments");

  auto* replay = app.add_subcommand("replay", "Re-run a manifest and compare its tables");
  replay->add_option("manifest", manifest_path, "manifest.json of a previous run")->required();
  add_common(replay, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*list) {
      std::cout << fracconv::list_experiments();
      return 0;
    }
    fracconv::RunOptions options;
    options.workers = workers;
    if (!out.empty()) options.out = out;
    if (*run) {
      if (run->count("--seed")) options.seed = seed;
      return report(fracconv::run_experiment(fracconv::read_json_file(config_path), options));
    }
    return report(fracconv::replay_manifest(manifest_path, options));
  } catch (const fracconv::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

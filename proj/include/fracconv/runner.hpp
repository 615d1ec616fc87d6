#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "fracconv/experiments.hpp"

namespace fracconv {

inline constexpr const char* kVersion = "0.1.0";

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the configured seed
  int workers = 0;                    // 0: available parallelism
  std::optional<std::filesystem::path> out;
};

struct RunOutcome {
  json manifest;
  ExperimentResult result;
  std::optional<std::filesystem::path> written;  // output directory, if any
  bool passed() const { return result.passed(); }
};

// Resolves the configuration, runs the experiment and, when an output
// directory is given (option or "out" key), writes manifest.json, tables/,
// raw/ and diagnostics/ atomically: everything goes to a staging directory
// that is renamed into place once complete. An existing directory is only
// replaced if it holds a previous run's manifest.
RunOutcome run_experiment(const json& config, const RunOptions& options);

// Re-runs the configuration echoed in a manifest (the seed option is
// ignored) and compares table hashes; the outcome gains a check for it.
RunOutcome replay_manifest(const std::filesystem::path& manifest, const RunOptions& options);

std::string list_experiments();

}  // namespace fracconv

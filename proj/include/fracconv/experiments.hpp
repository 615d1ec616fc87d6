#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fracconv/io.hpp"
#include "fracconv/mild_solver.hpp"
#include "fracconv/random_fields.hpp"

namespace fracconv {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct FlaggedMember {
  std::string stage;
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::string reason;
};

struct ExperimentResult {
  std::vector<std::pair<std::string, Table>> tables;
  std::vector<std::pair<std::string, std::string>> texts;  // extra text artifacts
  std::vector<Check> checks;
  std::vector<FlaggedMember> flagged;
  std::optional<Ensemble> raw_initial;

  bool passed() const;
  void check(std::string name, bool passed, std::string detail = {});
};

// A configuration with every default filled in. `echo` reproduces it.
struct ResolvedConfig {
  std::string experiment;
  Grid grid;
  SpectralMeasure measure;
  NonlinearitySpec nonlinearity;
  SolverConfig solver;
  std::size_t members = 1;
  std::uint64_t seed = 0;
  std::size_t raw_members = 0;
  json params;
  json echo;
};

struct ExperimentInfo {
  std::string name;
  std::string description;
  std::string statement;  // the mathematical statement being checked
  int criterion = 0;      // acceptance criterion number, 0 if none
  json defaults;          // full configuration with defaults
  std::function<ExperimentResult(const ResolvedConfig&, int workers)> run;
};

const std::vector<ExperimentInfo>& experiment_registry();
// Throws ConfigError naming the closest registered name.
const ExperimentInfo& find_experiment(std::string_view name);
std::string nearest_name(std::string_view name, const std::vector<std::string>& candidates);

// Overlays a user configuration on the experiment's defaults and validates
// the result. Unknown keys are rejected.
ResolvedConfig resolve_config(const json& user);

ExperimentResult run_resolved(const ResolvedConfig& config, int workers);

}  // namespace fracconv

#include "fracconv/runner.hpp"

#include <chrono>
#include <ctime>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "fracconv/error.hpp"
#include "fracconv/parallel.hpp"
#include "fracconv/rng.hpp"

namespace fracconv {

namespace fs = std::filesystem;

namespace {

json table_index(const ExperimentResult& r) {
  json tables = json::object();
  for (const auto& [name, table] : r.tables)
    tables[name] = {{"file", "tables/" + name + ".tsv"}, {"rows", table.rows()}, {"fnv1a", hex64(fnv1a(table.to_tsv()))}};
  return tables;
}

json build_manifest(const ResolvedConfig& cfg, const ExperimentResult& r, int workers, double seconds) {
  json checks = json::array();
  for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  json flagged = json::array();
  for (const auto& f : r.flagged)
    flagged.push_back({{"stage", f.stage}, {"member", f.index}, {"seed", f.seed}, {"reason", f.reason}});
  std::vector<std::uint64_t> seeds(cfg.members);
  for (std::size_t i = 0; i < cfg.members; ++i) seeds[i] = member_seed(cfg.seed, i);
  return {{"software", {{"name", "fracconv"}, {"version", kVersion}}},
          {"experiment", cfg.experiment},
          {"config", cfg.echo},
          {"seeds", {{"master", cfg.seed}, {"scheme", "splitmix64 member_seed(master, index)"}, {"members", seeds}}},
          {"workers", resolve_workers(workers)},
          {"wall_clock_seconds", seconds},
          {"passed", r.passed()},
          {"checks", checks},
          {"flagged_members", flagged},
          {"tables", table_index(r)}};
}

void write_outputs(const fs::path& dir, const json& manifest, const ExperimentResult& r) {
  fs::create_directories(dir / "tables");
  for (const auto& [name, table] : r.tables) write_text_file(dir / "tables" / (name + ".tsv"), table.to_tsv());
  for (const auto& [name, text] : r.texts) {
    fs::create_directories((dir / name).parent_path());
    write_text_file(dir / name, text);
  }
  if (r.raw_initial) {
    fs::create_directories(dir / "raw");
    write_ensemble(dir / "raw" / "initial_ensemble", *r.raw_initial);
  }
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

void publish(const fs::path& target, const json& manifest, const ExperimentResult& r) {
  if (fs::exists(target)) {
    if (!fs::is_directory(target)) throw ConfigError("output path " + target.string() + " exists and is not a directory");
    if (!fs::is_empty(target) && !fs::exists(target / "manifest.json"))
      throw ConfigError("refusing to overwrite " + target.string() + ": it does not hold a previous run");
  }
  const fs::path parent = target.has_parent_path() ? target.parent_path() : fs::path(".");
  fs::create_directories(parent);
  const fs::path staging = parent / ("." + target.filename().string() + ".staging-" + std::to_string(::getpid()));
  fs::remove_all(staging);
  try {
    write_outputs(staging, manifest, r);
    if (fs::exists(target)) fs::remove_all(target);
    fs::rename(staging, target);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
}

// With `reference` set, table hashes are compared against it before anything
// is written, so a replay's manifest records the comparison.
RunOutcome execute(json config, const RunOptions& options, const json* reference = nullptr,
                   const std::string& reference_name = {}) {
  std::optional<fs::path> out = options.out;
  if (config.is_object() && config.contains("out")) {
    if (!out && !config.at("out").is_null()) out = fs::path(config.at("out").get<std::string>());
    config.erase("out");
  }
  if (options.seed && config.is_object()) config["seed"] = *options.seed;
  const auto cfg = resolve_config(config);

  const auto start = std::chrono::steady_clock::now();
  auto result = run_resolved(cfg, options.workers);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (reference) {
    const json fresh = table_index(result);
    std::string detail;
    bool same = fresh.size() == reference->size();
    for (const auto& [name, entry] : reference->items()) {
      if (!fresh.contains(name)) {
        same = false;
        detail += name + " missing; ";
      } else if (fresh[name].at("fnv1a") != entry.at("fnv1a")) {
        same = false;
        detail += name + " differs; ";
      }
    }
    result.check("replay tables identical to " + reference_name, same,
                 same ? std::to_string(fresh.size()) + " tables match" : detail);
  }

  RunOutcome outcome{build_manifest(cfg, result, options.workers, seconds), std::move(result), std::nullopt};
  if (reference) outcome.manifest["replay_of"] = reference_name;
  if (out) {
    publish(*out, outcome.manifest, outcome.result);
    outcome.written = *out;
  }
  return outcome;
}

}  // namespace

RunOutcome run_experiment(const json& config, const RunOptions& options) { return execute(config, options); }

RunOutcome replay_manifest(const fs::path& manifest_path, const RunOptions& options) {
  const json manifest = read_json_file(manifest_path);
  if (!manifest.contains("config") || !manifest.contains("tables"))
    throw ConfigError(manifest_path.string() + ": not a run manifest");
  RunOptions opts = options;
  opts.seed.reset();
  return execute(manifest.at("config"), opts, &manifest.at("tables"), manifest_path.string());
}

std::string list_experiments() {
  std::ostringstream os;
  for (const auto& e : experiment_registry()) {
    os << e.name;
    if (e.criterion > 0) os << "  [criterion " << e.criterion << "]";
    os << "\n    " << e.description << "\n    checks: " << e.statement << "\n";
  }
  return os.str();
}

}  // namespace fracconv

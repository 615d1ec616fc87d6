#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <unistd.h>

#include "fracconv/error.hpp"
#include "fracconv/experiments.hpp"
#include "fracconv/io.hpp"
#include "fracconv/runner.hpp"

using namespace fracconv;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("fracconv_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

}  // namespace

TEST_CASE("grid and solver json round trips") {
  const Grid g(2, 32, 5.5);
  CHECK(grid_from_json(to_json(g)) == g);
  CHECK_THROWS_WITH_AS(grid_from_json(json{{"dim", 1}, {"n", 32}, {"len", 1.0}, {"lenght", 2.0}}),
                       doctest::Contains("lenght"), ConfigError);
  CHECK_THROWS_WITH_AS(grid_from_json(json{{"dim", 1}, {"len", 1.0}}), doctest::Contains("n"), ConfigError);

  SolverConfig c;
  c.s = 0.7;
  c.z = {0.6, 0.8};
  c.time_grid = {0.0, 0.1, 0.3};
  c.K = 2.5;
  c.tol = 1e-9;
  c.max_iter = 17;
  c.dealias = Dealias::on;
  const auto back = solver_from_json(to_json(c));
  CHECK(back.s == c.s);
  CHECK(back.z == c.z);
  CHECK(back.time_grid == c.time_grid);
  CHECK(back.K == c.K);
  CHECK(back.tol == c.tol);
  CHECK(back.max_iter == c.max_iter);
  CHECK(back.dealias == c.dealias);
  const auto uni = solver_from_json(json{{"t_end", 1.0}, {"steps", 4}});
  CHECK(uni.time_grid == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  CHECK_THROWS_AS(solver_from_json(json{{"t_end", 1.0}, {"steps", 4}, {"tol", "small"}}), ConfigError);
}

TEST_CASE("nonlinearity and measure json") {
  for (const auto& spec : {NonlinearitySpec::zero(), NonlinearitySpec::tanh(0.3), NonlinearitySpec::burgers().with_cutoff(4.0),
                           NonlinearitySpec::polynomial(2.0, 3.0)}) {
    const auto back = nonlinearity_from_json(to_json(spec));
    CHECK(back.kind == spec.kind);
    CHECK(back.name() == spec.name());
    CHECK(back.cutoff_level == spec.cutoff_level);
  }
  CHECK_THROWS_WITH_AS(nonlinearity_from_json(json{{"kind", "sine"}}), doctest::Contains("sine"), ConfigError);

  const Grid g(1, 16, 2.0 * std::numbers::pi);
  const auto m = measure_from_json(json{{"family", "two-mode"}, {"mode", {2}}, {"mass", 3.0}}, g);
  CHECK(m.total_mass() == doctest::Approx(3.0));
  CHECK(m.weights[2] == doctest::Approx(1.5));
  std::vector<double> w(16, 0.0);
  w[1] = w[15] = 0.25;
  const auto custom = measure_from_json(json{{"family", "custom"}, {"weights", w}, {"mean", 1.0}}, g);
  CHECK(custom.weights == w);
  w[1] = 0.5;
  CHECK_THROWS_AS(measure_from_json(json{{"family", "custom"}, {"weights", w}}, g), ConfigError);
  CHECK_THROWS_WITH_AS(measure_from_json(json{{"family", "gaussian-bump"}, {"width", 1.0}, {"mas", 1.0}}, g),
                       doctest::Contains("mas"), ConfigError);
}

TEST_CASE("tables, hashing and binary round trips") {
  Table t({"a", "b", "c"});
  t.row().add(0.1).add(3).add(true);
  t.row().add(-1e-300).add(std::string("x")).add(false);
  CHECK(t.to_tsv() == "a\tb\tc\n0.10000000000000001\t3\tpass\n-1e-300\tx\tfail\n");
  CHECK(std::stod(format_double(0.1)) == 0.1);
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(255) == "00000000000000ff");

  TempDir dir;
  const Grid g(2, 8, 1.0);
  Ensemble e;
  for (int i = 0; i < 3; ++i) {
    FieldRealization f(g, 0.25);
    for (std::size_t k = 0; k < g.size(); ++k) f.values[k] = std::sin(0.1 * k + i) * 1e-7 + i;
    e.members.push_back(f);
    e.seeds.push_back(100 + i);
  }
  e.time = 0.25;
  write_ensemble(dir.path / "ens", e);
  const auto back = read_ensemble(dir.path / "ens");
  REQUIRE(back.size() == 3);
  CHECK(back.grid() == g);
  CHECK(back.seeds == e.seeds);
  for (int i = 0; i < 3; ++i) CHECK(back.members[i].values == e.members[i].values);
  CHECK(fs::file_size(dir.path / "ens.bin") == 3 * g.size() * sizeof(double));

  Trajectory tr;
  for (int j = 0; j < 4; ++j) {
    tr.states.push_back(e.members[j % 3]);
    tr.states.back().time = 0.1 * j;
    tr.times.push_back(0.1 * j);
  }
  write_trajectory(dir.path / "traj", tr);
  const auto tb = read_trajectory(dir.path / "traj");
  CHECK(tb.times == tr.times);
  for (int j = 0; j < 4; ++j) CHECK(tb.states[j].values == tr.states[j].values);

  PicardDiagnostics d;
  d.residuals = {1.0, 0.5};
  d.ratios = {0.5};
  const auto tsv = diagnostics_tsv(d);
  CHECK(tsv.rfind("iteration\tresidual\tratio\n", 0) == 0);
  CHECK(tsv.find("0.5\t0.5") != std::string::npos);
}

TEST_CASE("registry audit") {
  const auto& reg = experiment_registry();
  REQUIRE_FALSE(reg.empty());
  std::map<int, int> per_criterion;
  std::set<std::string> names;
  for (const auto& e : reg) {
    if (e.criterion > 0) ++per_criterion[e.criterion];
    names.insert(e.name);
    CHECK_FALSE(e.description.empty());
    CHECK_FALSE(e.statement.empty());
    CHECK_NOTHROW(resolve_config(json{{"experiment", e.name}}));
  }
  CHECK(names.size() == reg.size());
  for (int c = 1; c <= 12; ++c) CHECK(per_criterion[c] == 1);
  CHECK(per_criterion.size() == 12);
  CHECK(list_experiments().find("moment-monotonicity") != std::string::npos);
}

TEST_CASE("config resolution errors name the nearest match") {
  CHECK_THROWS_WITH_AS(find_experiment("linear-spectral-decy"), doctest::Contains("linear-spectral-decay"), ConfigError);
  CHECK(nearest_name("burgurs", {"tanh", "burgers", "zero"}) == "burgers");
  CHECK_THROWS_WITH_AS(resolve_config(json{{"experiment", "zero-nonlinearity"}, {"memberz", 3}}),
                       doctest::Contains("members"), ConfigError);
  CHECK_THROWS_AS(resolve_config(json{{"seed", 3}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(json{{"experiment", "zero-nonlinearity"}, {"members", 0}}), ConfigError);
  const auto r = resolve_config(json{{"experiment", "zero-nonlinearity"}, {"members", 3}, {"seed", 77}});
  CHECK(r.members == 3);
  CHECK(r.seed == 77);
  CHECK(r.echo["members"] == 3);
  CHECK(r.echo.contains("solver"));
  CHECK(r.echo["solver"].contains("tol"));
}

TEST_CASE("run writes a complete directory and replay reproduces it across worker counts") {
  TempDir dir;
  const auto out = dir.path / "run";
  const json cfg{{"experiment", "linear-spectral-decay"}, {"members", 60}, {"grid", {{"n", 64}}}};
  const auto first = run_experiment(cfg, RunOptions{123, 1, out});
  CHECK(first.passed());
  REQUIRE(first.written.has_value());
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(fs::exists(out / "raw" / "initial_ensemble.bin"));
  const auto manifest = read_json_file(out / "manifest.json");
  CHECK(manifest["seeds"]["master"] == 123);
  CHECK(manifest["software"]["version"] == kVersion);
  for (const auto& [name, entry] : manifest["tables"].items()) {
    const auto bytes = slurp(out / entry["file"].get<std::string>());
    CHECK(hex64(fnv1a(bytes)) == entry["fnv1a"].get<std::string>());
  }
  for (const auto& e : fs::directory_iterator(dir.path)) CHECK(e.path().filename().string().find("staging") == std::string::npos);

  const auto replayed_dir = dir.path / "replay";
  const auto replay = replay_manifest(out / "manifest.json", RunOptions{std::nullopt, 3, replayed_dir});
  CHECK(replay.passed());
  const auto a = tree(out / "tables"), b = tree(replayed_dir / "tables");
  CHECK(a == b);
  CHECK(slurp(out / "raw" / "initial_ensemble.bin") == slurp(replayed_dir / "raw" / "initial_ensemble.bin"));

  // Same config and seed, different worker count: identical tables.
  const auto third = run_experiment(cfg, RunOptions{123, 3, std::nullopt});
  REQUIRE(third.result.tables.size() == first.result.tables.size());
  for (std::size_t i = 0; i < third.result.tables.size(); ++i)
    CHECK(third.result.tables[i].second.to_tsv() == first.result.tables[i].second.to_tsv());
}

TEST_CASE("output directories are never clobbered") {
  TempDir dir;
  const json cfg{{"experiment", "zero-nonlinearity"}, {"members", 2}, {"grid", {{"n", 32}}}};
  const auto foreign = dir.path / "foreign";
  fs::create_directories(foreign);
  write_text_file(foreign / "notes.txt", "keep me");
  CHECK_THROWS_AS(run_experiment(cfg, RunOptions{1, 1, foreign}), ConfigError);
  CHECK(slurp(foreign / "notes.txt") == "keep me");

  write_text_file(dir.path / "file", "x");
  CHECK_THROWS_AS(run_experiment(cfg, RunOptions{1, 1, dir.path / "file"}), ConfigError);

  const auto out = dir.path / "run";
  run_experiment(cfg, RunOptions{1, 1, out});
  const auto before = read_json_file(out / "manifest.json");
  run_experiment(cfg, RunOptions{2, 1, out});
  CHECK(read_json_file(out / "manifest.json")["seeds"]["master"] == 2);
  CHECK(before["seeds"]["master"] == 1);
}

TEST_CASE("replay detects tampered tables") {
  TempDir dir;
  const auto out = dir.path / "run";
  run_experiment(json{{"experiment", "zero-nonlinearity"}, {"members", 2}, {"grid", {{"n", 32}}}}, RunOptions{5, 1, out});
  auto manifest = read_json_file(out / "manifest.json");
  auto& first = manifest["tables"].begin().value();
  first["fnv1a"] = "0000000000000000";
  write_text_file(out / "manifest.json", manifest.dump(2));
  const auto replay = replay_manifest(out / "manifest.json", RunOptions{std::nullopt, 1, std::nullopt});
  CHECK_FALSE(replay.passed());
}

// Runs every acceptance criterion at its registered defaults and prints one
// line per criterion. Exit status is the number of failed criteria (capped).

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>

#include "fracconv/experiments.hpp"
#include "fracconv/runner.hpp"

using namespace fracconv;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool passed = false;
  std::string detail;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> table_files(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(root / "tables")) out[e.path().filename().string()] = slurp(e.path());
  return out;
}

std::string failed_checks(const ExperimentResult& r) {
  std::string s;
  for (const auto& c : r.checks)
    if (!c.passed) s += (s.empty() ? "" : "; ") + c.name + " (" + c.detail + ")";
  return s;
}

// Runtime ceilings in seconds where the criterion states one.
const std::map<int, double> kBudget{{1, 10.0}, {3, 1.0}, {5, 60.0}, {6, 600.0}};

Verdict run_criterion(const ExperimentInfo& info, double& seconds) {
  const auto t0 = std::chrono::steady_clock::now();
  RunOutcome out = run_experiment(json{{"experiment", info.name}}, RunOptions{});
  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Verdict v{out.passed(), "checks passed: " + std::to_string(out.result.checks.size())};
  if (!out.passed()) v.detail = failed_checks(out.result);
  if (auto it = kBudget.find(info.criterion); it != kBudget.end() && seconds >= it->second) {
    v.passed = false;
    v.detail += "; runtime " + std::to_string(seconds) + " s over the " + std::to_string(it->second) + " s budget";
  }
  return v;
}

// Criterion 12 additionally replays a written manifest with a different
// worker count and compares the table files byte for byte.
Verdict run_determinism(const ExperimentInfo& info, double& seconds) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto root = fs::temp_directory_path() / ("fracconv_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  Verdict v;
  {
    auto first = run_experiment(json{{"experiment", info.name}}, RunOptions{std::nullopt, 1, root / "first"});
    auto again = replay_manifest(root / "first" / "manifest.json", RunOptions{std::nullopt, 3, root / "replay"});
    const bool same = table_files(root / "first") == table_files(root / "replay");
    v.passed = first.passed() && again.passed() && same;
    v.detail = same ? "tables byte-identical across workers 1 and 3" : "table bytes differ between run and replay";
    if (!first.passed()) v.detail += "; " + failed_checks(first.result);
    if (!again.passed()) v.detail += "; replay: " + failed_checks(again.result);
  }
  fs::remove_all(root);
  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return v;
}

}  // namespace

int main() {
  int failures = 0;
  for (int criterion = 1; criterion <= 12; ++criterion) {
    const ExperimentInfo* info = nullptr;
    for (const auto& e : experiment_registry())
      if (e.criterion == criterion) info = &e;
    Verdict v;
    double seconds = 0.0;
    if (!info) {
      v.detail = "no registered experiment";
    } else {
      try {
        v = criterion == 12 ? run_determinism(*info, seconds) : run_criterion(*info, seconds);
      } catch (const std::exception& e) {
        v = {false, std::string("error: ") + e.what()};
      }
    }
    failures += !v.passed;
    std::printf("%s  criterion %2d  %-26s %8.2f s  %s\n", v.passed ? "PASS" : "FAIL", criterion, info ? info->name.c_str() : "?",
                seconds, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of 12 criteria passed\n", 12 - failures);
  return failures == 0 ? 0 : 1;
}

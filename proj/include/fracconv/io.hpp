#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracconv/mild_solver.hpp"
#include "fracconv/random_fields.hpp"

namespace fracconv {

using json = nlohmann::ordered_json;

// Strict readers: unknown or missing keys raise ConfigError naming the key.
Grid grid_from_json(const json& j);
json to_json(const Grid& g);

// {"family": "two-mode" | "gaussian-bump" | "power-law" | "custom", ...}
SpectralMeasure measure_from_json(const json& j, const Grid& grid);
SpectralMeasure load_measure(const std::filesystem::path& path, const Grid& grid);

// {"kind": "zero" | "tanh" | "burgers" | "polynomial", "L", "C", "q", "cutoff"}
NonlinearitySpec nonlinearity_from_json(const json& j);
json to_json(const NonlinearitySpec& spec);

// Either "time_grid" or "t_end" + "steps".
SolverConfig solver_from_json(const json& j);
json to_json(const SolverConfig& config);

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// Row-oriented table written as tab-separated text with a header line.
// Numbers use 17 significant digits so that output is a pure function of
// the values.
class Table {
 public:
  explicit Table(std::vector<std::string> columns = {});

  Table& row();
  Table& add(double v);
  Table& add(long long v);
  Table& add(int v) { return add(static_cast<long long>(v)); }
  Table& add(std::size_t v) { return add(static_cast<long long>(v)); }
  Table& add(bool pass);
  Table& add(std::string v);

  std::string to_tsv() const;
  std::size_t rows() const { return cells_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> cells_;
};

std::string format_double(double v);
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

// Flat little-endian float64 arrays plus a JSON metadata record.
void write_ensemble(const std::filesystem::path& stem, const Ensemble& ens);
Ensemble read_ensemble(const std::filesystem::path& stem);
void write_trajectory(const std::filesystem::path& stem, const Trajectory& traj);
Trajectory read_trajectory(const std::filesystem::path& stem);

// One line per iteration: index, residual, ratio.
std::string diagnostics_tsv(const PicardDiagnostics& diag);

}  // namespace fracconv

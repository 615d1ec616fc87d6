#include "fracconv/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "fracconv/error.hpp"

namespace fracconv {

namespace {

static_assert(std::endian::native == std::endian::little, "binary export assumes a little-endian host");

void require_object(const json& j, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + ": expected an object");
}

void check_keys(const json& j, const std::string& what, std::initializer_list<const char*> allowed) {
  require_object(j, what);
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) throw ConfigError(what + ": unknown key \"" + key + "\"");
}

template <class T>
T get(const json& j, const std::string& what, const char* key) {
  if (!j.contains(key)) throw ConfigError(what + ": missing key \"" + std::string(key) + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(what + ": key \"" + std::string(key) + "\" has the wrong type");
  }
}

template <class T>
T get_or(const json& j, const std::string& what, const char* key, T fallback) {
  return j.contains(key) ? get<T>(j, what, key) : fallback;
}

std::string dealias_name(Dealias d) {
  switch (d) {
    case Dealias::on:
      return "on";
    case Dealias::off:
      return "off";
    case Dealias::automatic:
      return "auto";
  }
  return "auto";
}

void write_doubles(const std::filesystem::path& path, const std::vector<const std::vector<double>*>& blocks) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto* b : blocks)
    out.write(reinterpret_cast<const char*>(b->data()), static_cast<std::streamsize>(b->size() * sizeof(double)));
  if (!out) throw Error("short write to " + path.string());
}

std::vector<double> read_doubles(const std::filesystem::path& path, std::size_t expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::vector<double> v(expected);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(expected * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(expected * sizeof(double)) || in.peek() != EOF)
    throw ConfigError(path.string() + ": size does not match its metadata");
  return v;
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return stem.parent_path() / (stem.filename().string() + suffix);
}

}  // namespace

Grid grid_from_json(const json& j) {
  check_keys(j, "grid", {"dim", "n", "len"});
  return Grid(get<int>(j, "grid", "dim"), get<int>(j, "grid", "n"), get<double>(j, "grid", "len"));
}

json to_json(const Grid& g) { return {{"dim", g.dim()}, {"n", g.n()}, {"len", g.len()}}; }

SpectralMeasure measure_from_json(const json& j, const Grid& grid) {
  require_object(j, "measure");
  const auto family = get<std::string>(j, "measure", "family");
  const double mean = get_or(j, "measure", "mean", 0.0);
  if (family == "two-mode") {
    check_keys(j, "measure", {"family", "mode", "mass", "mean"});
    const auto mode = get<std::vector<int>>(j, "measure", "mode");
    if (static_cast<int>(mode.size()) != grid.dim()) throw ConfigError("measure: mode needs one index per axis");
    return two_mode_measure(grid, {mode[0], grid.dim() == 2 ? mode[1] : 0}, get<double>(j, "measure", "mass"), mean);
  }
  if (family == "gaussian-bump") {
    check_keys(j, "measure", {"family", "width", "mass", "mean"});
    return gaussian_bump_measure(grid, get<double>(j, "measure", "width"), get<double>(j, "measure", "mass"), mean);
  }
  if (family == "power-law") {
    check_keys(j, "measure", {"family", "nu", "mass", "mean"});
    return power_law_measure(grid, get<double>(j, "measure", "nu"), get<double>(j, "measure", "mass"), mean);
  }
  if (family == "custom") {
    check_keys(j, "measure", {"family", "weights", "mean", "isotropic"});
    SpectralMeasure m{grid, get<std::vector<double>>(j, "measure", "weights"), mean,
                      get_or(j, "measure", "isotropic", false), "custom"};
    m.validate();
    return m;
  }
  throw ConfigError("measure: unknown family \"" + family + "\" (two-mode, gaussian-bump, power-law, custom)");
}

SpectralMeasure load_measure(const std::filesystem::path& path, const Grid& grid) {
  return measure_from_json(read_json_file(path), grid);
}

NonlinearitySpec nonlinearity_from_json(const json& j) {
  require_object(j, "nonlinearity");
  const auto kind = get<std::string>(j, "nonlinearity", "kind");
  NonlinearitySpec spec;
  if (kind == "zero") {
    check_keys(j, "nonlinearity", {"kind", "cutoff"});
  } else if (kind == "tanh") {
    check_keys(j, "nonlinearity", {"kind", "L", "cutoff"});
    spec = NonlinearitySpec::tanh(get<double>(j, "nonlinearity", "L"));
  } else if (kind == "burgers") {
    check_keys(j, "nonlinearity", {"kind", "cutoff"});
    spec = NonlinearitySpec::burgers();
  } else if (kind == "polynomial") {
    check_keys(j, "nonlinearity", {"kind", "C", "q", "cutoff"});
    spec = NonlinearitySpec::polynomial(get<double>(j, "nonlinearity", "C"), get<double>(j, "nonlinearity", "q"));
  } else {
    throw ConfigError("nonlinearity: unknown kind \"" + kind + "\" (zero, tanh, burgers, polynomial)");
  }
  if (j.contains("cutoff") && !j.at("cutoff").is_null()) spec = spec.with_cutoff(get<double>(j, "nonlinearity", "cutoff"));
  spec.validate();
  return spec;
}

json to_json(const NonlinearitySpec& spec) {
  json j;
  switch (spec.kind) {
    case NonlinearityKind::zero:
      j["kind"] = "zero";
      break;
    case NonlinearityKind::lipschitz_tanh:
      j["kind"] = "tanh";
      j["L"] = spec.lipschitz;
      break;
    case NonlinearityKind::burgers_quadratic:
      j["kind"] = "burgers";
      break;
    case NonlinearityKind::polynomial:
      j["kind"] = "polynomial";
      j["C"] = spec.coeff;
      j["q"] = spec.power;
      break;
  }
  j["cutoff"] = spec.cutoff_level ? json(*spec.cutoff_level) : json(nullptr);
  return j;
}

SolverConfig solver_from_json(const json& j) {
  check_keys(j, "solver", {"s", "z", "time_grid", "t_end", "steps", "K", "tol", "max_iter", "dealias"});
  SolverConfig c;
  c.s = get_or(j, "solver", "s", c.s);
  c.z = get_or(j, "solver", "z", c.z);
  if (j.contains("time_grid")) {
    if (j.contains("t_end") || j.contains("steps")) throw ConfigError("solver: give either time_grid or t_end/steps");
    c.time_grid = get<std::vector<double>>(j, "solver", "time_grid");
  } else {
    c.time_grid = SolverConfig::uniform_time_grid(get<double>(j, "solver", "t_end"), get<int>(j, "solver", "steps"));
  }
  c.K = get_or(j, "solver", "K", c.K);
  c.tol = get_or(j, "solver", "tol", c.tol);
  c.max_iter = get_or(j, "solver", "max_iter", c.max_iter);
  const auto d = get_or<std::string>(j, "solver", "dealias", "auto");
  if (d == "auto") {
    c.dealias = Dealias::automatic;
  } else if (d == "on") {
    c.dealias = Dealias::on;
  } else if (d == "off") {
    c.dealias = Dealias::off;
  } else {
    throw ConfigError("solver: dealias must be auto, on or off");
  }
  c.validate(static_cast<int>(c.z.size()));
  return c;
}

json to_json(const SolverConfig& c) {
  return {{"s", c.s},      {"z", c.z},     {"time_grid", c.time_grid},           {"K", c.K},
          {"tol", c.tol},  {"max_iter", c.max_iter}, {"dealias", dealias_name(c.dealias)}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("short write to " + path.string());
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Table::Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

Table& Table::row() {
  cells_.emplace_back();
  cells_.back().reserve(columns_.size());
  return *this;
}

Table& Table::add(double v) { return add(format_double(v)); }
Table& Table::add(long long v) { return add(std::to_string(v)); }
Table& Table::add(bool pass) { return add(std::string(pass ? "pass" : "fail")); }

Table& Table::add(std::string v) {
  if (cells_.empty()) row();
  if (cells_.back().size() >= columns_.size()) throw Error("table row has more cells than columns");
  cells_.back().push_back(std::move(v));
  return *this;
}

std::string Table::to_tsv() const {
  std::ostringstream os;
  for (std::size_t c = 0; c < columns_.size(); ++c) os << (c ? "\t" : "") << columns_[c];
  os << '\n';
  for (const auto& r : cells_) {
    if (r.size() != columns_.size()) throw Error("table row is incomplete");
    for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "\t" : "") << r[c];
    os << '\n';
  }
  return os.str();
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_ensemble(const std::filesystem::path& stem, const Ensemble& ens) {
  ens.validate();
  std::vector<const std::vector<double>*> blocks;
  for (const auto& m : ens.members) blocks.push_back(&m.values);
  write_doubles(with_suffix(stem, ".bin"), blocks);
  json meta = {{"kind", "ensemble"},     {"dtype", "float64-le"}, {"layout", "member-major, row-major grid"},
               {"grid", to_json(ens.grid())}, {"members", ens.size()}, {"time", ens.time},
               {"seeds", ens.seeds}};
  write_text_file(with_suffix(stem, ".json"), meta.dump(2) + "\n");
}

Ensemble read_ensemble(const std::filesystem::path& stem) {
  const auto meta = read_json_file(with_suffix(stem, ".json"));
  const Grid grid = grid_from_json(meta.at("grid"));
  const auto count = meta.at("members").get<std::size_t>();
  const auto data = read_doubles(with_suffix(stem, ".bin"), count * grid.size());
  Ensemble ens;
  ens.time = meta.at("time").get<double>();
  ens.seeds = meta.at("seeds").get<std::vector<std::uint64_t>>();
  for (std::size_t i = 0; i < count; ++i)
    ens.members.emplace_back(grid,
                             std::vector<double>(data.begin() + static_cast<std::ptrdiff_t>(i * grid.size()),
                                                 data.begin() + static_cast<std::ptrdiff_t>((i + 1) * grid.size())),
                             ens.time);
  return ens;
}

void write_trajectory(const std::filesystem::path& stem, const Trajectory& traj) {
  if (traj.states.empty()) throw ConfigError("cannot export an empty trajectory");
  std::vector<const std::vector<double>*> blocks;
  for (const auto& s : traj.states) blocks.push_back(&s.values);
  write_doubles(with_suffix(stem, ".bin"), blocks);
  json meta = {{"kind", "trajectory"}, {"dtype", "float64-le"}, {"layout", "node-major, row-major grid"},
               {"grid", to_json(traj.initial().grid)}, {"times", traj.times}};
  write_text_file(with_suffix(stem, ".json"), meta.dump(2) + "\n");
}

Trajectory read_trajectory(const std::filesystem::path& stem) {
  const auto meta = read_json_file(with_suffix(stem, ".json"));
  const Grid grid = grid_from_json(meta.at("grid"));
  Trajectory traj;
  traj.times = meta.at("times").get<std::vector<double>>();
  const auto data = read_doubles(with_suffix(stem, ".bin"), traj.times.size() * grid.size());
  for (std::size_t j = 0; j < traj.times.size(); ++j)
    traj.states.emplace_back(grid,
                             std::vector<double>(data.begin() + static_cast<std::ptrdiff_t>(j * grid.size()),
                                                 data.begin() + static_cast<std::ptrdiff_t>((j + 1) * grid.size())),
                             traj.times[j]);
  return traj;
}

std::string diagnostics_tsv(const PicardDiagnostics& diag) {
  std::ostringstream os;
  os << "iteration\tresidual\tratio\n";
  for (std::size_t m = 0; m < diag.residuals.size(); ++m)
    os << m + 1 << '\t' << format_double(diag.residuals[m]) << '\t'
       << (m == 0 ? std::string("nan") : format_double(diag.ratios[m - 1])) << '\n';
  return os.str();
}

}  // namespace fracconv

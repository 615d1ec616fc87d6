#include "fracconv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fracconv/error.hpp"

namespace fracconv {

Grid::Grid(int dim, int n, double len) : dim_(dim), n_(n), len_(len) {
  if (dim != 1 && dim != 2) throw ConfigError("grid dimension must be 1 or 2, got " + std::to_string(dim));
  if (n < 8 || n % 2 != 0 || (n & (n - 1)) != 0)
    throw ConfigError("grid points per axis must be a power of two >= 8, got " + std::to_string(n));
  if (!(len > 0.0) || !std::isfinite(len)) throw ConfigError("grid period must be positive");
}

double Grid::cell_volume() const { return dim_ == 1 ? dx() : dx() * dx(); }

std::size_t Grid::size() const {
  auto n = static_cast<std::size_t>(n_);
  return dim_ == 1 ? n : n * n;
}

double Grid::fundamental() const { return 2.0 * std::numbers::pi / len_; }

std::array<int, 2> Grid::unflatten(std::size_t idx) const {
  if (dim_ == 1) return {static_cast<int>(idx), 0};
  return {static_cast<int>(idx / n_), static_cast<int>(idx % n_)};
}

std::size_t Grid::flatten(int i, int j) const {
  if (dim_ == 1) return static_cast<std::size_t>(wrap(i));
  return static_cast<std::size_t>(wrap(i)) * n_ + wrap(j);
}

std::size_t Grid::mirror(std::size_t idx) const {
  auto [i, j] = unflatten(idx);
  return flatten(-i, -j);
}

bool Grid::self_conjugate(std::size_t idx) const { return mirror(idx) == idx; }

bool Grid::is_nyquist(std::size_t idx) const {
  auto [i, j] = unflatten(idx);
  return i == n_ / 2 || (dim_ == 2 && j == n_ / 2);
}

double Grid::k_squared(std::size_t idx) const {
  auto [i, j] = unflatten(idx);
  double kx = wavenumber(i);
  if (dim_ == 1) return kx * kx;
  double ky = wavenumber(j);
  return kx * kx + ky * ky;
}

std::size_t Grid::half_size() const {
  auto h = static_cast<std::size_t>(half_n());
  return dim_ == 1 ? h : static_cast<std::size_t>(n_) * h;
}

double FieldRealization::mean() const {
  return pairwise_sum(values) / static_cast<double>(values.size());
}

double FieldRealization::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

bool FieldRealization::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

std::array<double, 2> position(const Grid& g, std::size_t idx) {
  auto [i, j] = g.unflatten(idx);
  return {i * g.dx(), g.dim() == 2 ? j * g.dx() : 0.0};
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace fracconv

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace fracconv {

// Periodic grid on [0, len)^dim with n points per axis. Points are stored
// row-major; in 2-d the flat index of (i, j) is i * n + j.
//
// Dual wavenumbers follow FFT ordering: index m maps to m for m < n/2 and
// to m - n otherwise, scaled by 2*pi/len. The Nyquist index n/2 therefore
// carries the wavenumber -pi*n/len.
class Grid {
 public:
  Grid() = default;
  Grid(int dim, int n, double len);

  int dim() const { return dim_; }
  int n() const { return n_; }
  double len() const { return len_; }
  double dx() const { return len_ / n_; }
  double cell_volume() const;  // dx^dim
  std::size_t size() const;    // n^dim
  double fundamental() const;  // 2*pi/len

  // Signed mode index in {-n/2, ..., n/2-1}.
  int signed_index(int m) const { return m < n_ / 2 ? m : m - n_; }
  double wavenumber(int m) const { return fundamental() * signed_index(m); }
  // Same as wavenumber() but zero at the Nyquist index; used for odd
  // symbols such as i*k so that the Nyquist mode stays real.
  double odd_wavenumber(int m) const { return m == n_ / 2 ? 0.0 : wavenumber(m); }

  // Axis indices of a flat index.
  std::array<int, 2> unflatten(std::size_t idx) const;
  std::size_t flatten(int i, int j = 0) const;
  // Flat index of the mode -k for the mode stored at idx.
  std::size_t mirror(std::size_t idx) const;
  // Self-conjugate modes: every axis index is 0 or n/2.
  bool self_conjugate(std::size_t idx) const;
  bool is_nyquist(std::size_t idx) const;
  double k_squared(std::size_t idx) const;
  // Wrap a signed offset into the grid.
  int wrap(int offset) const { return ((offset % n_) + n_) % n_; }

  // Half-spectrum (real-to-complex) layout: last axis keeps n/2 + 1 modes.
  std::size_t half_size() const;
  int half_n() const { return n_ / 2 + 1; }

  bool operator==(const Grid& o) const = default;

 private:
  int dim_ = 1;
  int n_ = 8;
  double len_ = 1.0;
};

// One real sample x -> u(t, x, omega) on the grid.
struct FieldRealization {
  Grid grid;
  std::vector<double> values;
  double time = 0.0;

  FieldRealization() = default;
  FieldRealization(const Grid& g, double t = 0.0) : grid(g), values(g.size(), 0.0), time(t) {}
  FieldRealization(const Grid& g, std::vector<double> v, double t = 0.0)
      : grid(g), values(std::move(v)), time(t) {}

  std::span<const double> span() const { return values; }
  double mean() const;
  double max_abs() const;
  bool all_finite() const;
};

// Grid coordinates of a flat index.
std::array<double, 2> position(const Grid& g, std::size_t idx);

// Pairwise summation for reproducible, well-conditioned reductions.
double pairwise_sum(std::span<const double> v);

}  // namespace fracconv

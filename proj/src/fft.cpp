#include "fracconv/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

namespace fracconv {

namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

using GridKey = std::tuple<int, int, double>;

GridKey key_of(const Grid& g) { return {g.dim(), g.n(), g.len()}; }

// Growable fftw_malloc buffer; one set per thread.
struct AlignedBuffer {
  void* data = nullptr;
  std::size_t bytes = 0;
  ~AlignedBuffer() { fftw_free(data); }
  void* reserve(std::size_t b) {
    if (b > bytes) {
      fftw_free(data);
      data = fftw_malloc(b);
      bytes = b;
    }
    return data;
  }
};

struct Scratch {
  AlignedBuffer a, b;
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

}  // namespace

Transform::Transform(const Grid& grid) : grid_(grid) {
  const int n = grid.n();
  const std::size_t full = grid.size();
  const std::size_t half = grid.half_size();
  double* r = fftw_alloc_real(full);
  fftw_complex* h = fftw_alloc_complex(half);
  fftw_complex* c1 = fftw_alloc_complex(full);
  fftw_complex* c2 = fftw_alloc_complex(full);
  // FFTW_ESTIMATE keeps plan selection independent of timing, so results are
  // bit-reproducible from run to run.
  const unsigned flags = FFTW_ESTIMATE;
  if (grid.dim() == 1) {
    r2c_ = fftw_plan_dft_r2c_1d(n, r, h, flags);
    c2r_ = fftw_plan_dft_c2r_1d(n, h, r, flags);
    c2c_fwd_ = fftw_plan_dft_1d(n, c1, c2, FFTW_FORWARD, flags);
    c2c_bwd_ = fftw_plan_dft_1d(n, c1, c2, FFTW_BACKWARD, flags);
  } else {
    r2c_ = fftw_plan_dft_r2c_2d(n, n, r, h, flags);
    c2r_ = fftw_plan_dft_c2r_2d(n, n, h, r, flags);
    c2c_fwd_ = fftw_plan_dft_2d(n, n, c1, c2, FFTW_FORWARD, flags);
    c2c_bwd_ = fftw_plan_dft_2d(n, n, c1, c2, FFTW_BACKWARD, flags);
  }
  fftw_free(r);
  fftw_free(h);
  fftw_free(c1);
  fftw_free(c2);
}

const Transform& Transform::of(const Grid& grid) {
  static std::map<GridKey, std::unique_ptr<Transform>> cache;
  std::lock_guard lock(plan_mutex());
  auto& slot = cache[key_of(grid)];
  if (!slot) slot = std::make_unique<Transform>(grid);
  return *slot;
}

void Transform::forward(std::span<const double> u, std::span<cplx> half) const {
  const std::size_t full = grid_.size();
  const std::size_t hs = grid_.half_size();
  auto& s = scratch();
  auto* in = static_cast<double*>(s.a.reserve(full * sizeof(double)));
  auto* out = static_cast<fftw_complex*>(s.b.reserve(hs * sizeof(fftw_complex)));
  std::copy(u.begin(), u.begin() + full, in);
  fftw_execute_dft_r2c(static_cast<fftw_plan>(r2c_), in, out);
  const double scale = 1.0 / static_cast<double>(full);
  for (std::size_t k = 0; k < hs; ++k) half[k] = cplx(out[k][0] * scale, out[k][1] * scale);
}

void Transform::inverse(std::span<const cplx> half, std::span<double> u) const {
  const std::size_t full = grid_.size();
  const std::size_t hs = grid_.half_size();
  auto& s = scratch();
  auto* in = static_cast<fftw_complex*>(s.b.reserve(hs * sizeof(fftw_complex)));
  auto* out = static_cast<double*>(s.a.reserve(full * sizeof(double)));
  for (std::size_t k = 0; k < hs; ++k) {
    in[k][0] = half[k].real();
    in[k][1] = half[k].imag();
  }
  fftw_execute_dft_c2r(static_cast<fftw_plan>(c2r_), in, out);
  std::copy(out, out + full, u.begin());
}

void Transform::forward_full(std::span<const cplx> u, std::span<cplx> coeff) const {
  const std::size_t full = grid_.size();
  auto& s = scratch();
  auto* in = static_cast<fftw_complex*>(s.a.reserve(full * sizeof(fftw_complex)));
  auto* out = static_cast<fftw_complex*>(s.b.reserve(full * sizeof(fftw_complex)));
  for (std::size_t k = 0; k < full; ++k) {
    in[k][0] = u[k].real();
    in[k][1] = u[k].imag();
  }
  fftw_execute_dft(static_cast<fftw_plan>(c2c_fwd_), in, out);
  const double scale = 1.0 / static_cast<double>(full);
  for (std::size_t k = 0; k < full; ++k) coeff[k] = cplx(out[k][0] * scale, out[k][1] * scale);
}

void Transform::inverse_full(std::span<const cplx> coeff, std::span<cplx> u) const {
  const std::size_t full = grid_.size();
  auto& s = scratch();
  auto* in = static_cast<fftw_complex*>(s.a.reserve(full * sizeof(fftw_complex)));
  auto* out = static_cast<fftw_complex*>(s.b.reserve(full * sizeof(fftw_complex)));
  for (std::size_t k = 0; k < full; ++k) {
    in[k][0] = coeff[k].real();
    in[k][1] = coeff[k].imag();
  }
  fftw_execute_dft(static_cast<fftw_plan>(c2c_bwd_), in, out);
  for (std::size_t k = 0; k < full; ++k) u[k] = cplx(out[k][0], out[k][1]);
}

std::span<const HalfMode> half_modes(const Grid& grid) {
  static std::map<GridKey, std::vector<HalfMode>> cache;
  std::lock_guard lock(plan_mutex());
  auto& modes = cache[key_of(grid)];
  if (!modes.empty()) return modes;
  const int n = grid.n();
  const int hn = grid.half_n();
  auto fill = [&](int i, int j) {
    HalfMode m;
    if (grid.dim() == 1) {
      m.kx = grid.wavenumber(i);
      m.kx_odd = grid.odd_wavenumber(i);
      m.ix = grid.signed_index(i);
      m.multiplicity = (i == 0 || i == n / 2) ? 1.0 : 2.0;
      m.nyquist = i == n / 2;
    } else {
      m.kx = grid.wavenumber(i);
      m.ky = grid.wavenumber(j);
      m.kx_odd = grid.odd_wavenumber(i);
      m.ky_odd = grid.odd_wavenumber(j);
      m.ix = grid.signed_index(i);
      m.iy = grid.signed_index(j);
      m.multiplicity = (j == 0 || j == n / 2) ? 1.0 : 2.0;
      m.nyquist = i == n / 2 || j == n / 2;
    }
    m.k2 = m.kx * m.kx + m.ky * m.ky;
    modes.push_back(m);
  };
  if (grid.dim() == 1) {
    for (int i = 0; i < hn; ++i) fill(i, 0);
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < hn; ++j) fill(i, j);
  }
  return modes;
}

double weighted_energy(const Grid& grid, std::span<const cplx> half, std::span<const double> weight) {
  auto modes = half_modes(grid);
  std::vector<double> terms(half.size());
  for (std::size_t k = 0; k < half.size(); ++k) terms[k] = modes[k].multiplicity * weight[k] * std::norm(half[k]);
  return pairwise_sum(terms);
}

double energy(const Grid& grid, std::span<const cplx> half) {
  auto modes = half_modes(grid);
  std::vector<double> terms(half.size());
  for (std::size_t k = 0; k < half.size(); ++k) terms[k] = modes[k].multiplicity * std::norm(half[k]);
  return pairwise_sum(terms);
}

}  // namespace fracconv

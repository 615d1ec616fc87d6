#pragma once

#include <complex>
#include <span>

#include "fracconv/grid.hpp"

namespace fracconv {

using cplx = std::complex<double>;

// FFTW-backed transforms for one grid. Coefficients are normalized so that
// u(x) = sum_k c_k exp(i k.x); Parseval then reads mean_x u^2 = sum_k |c_k|^2.
//
// Plans are created once per grid under a global lock and never destroyed;
// execution uses per-thread aligned scratch buffers, so concurrent calls on
// distinct data are safe.
class Transform {
 public:
  static const Transform& of(const Grid& grid);

  const Grid& grid() const { return grid_; }

  // Real field -> half spectrum (last axis n/2+1 modes).
  void forward(std::span<const double> u, std::span<cplx> half) const;
  // Half spectrum -> real field. Assumes Hermitian symmetry of the implied
  // full spectrum; the result is real by construction.
  void inverse(std::span<const cplx> half, std::span<double> u) const;

  // Full complex transforms on the whole dual grid.
  void forward_full(std::span<const cplx> u, std::span<cplx> coeff) const;
  void inverse_full(std::span<const cplx> coeff, std::span<cplx> u) const;

  explicit Transform(const Grid& grid);
  Transform(const Transform&) = delete;
  Transform& operator=(const Transform&) = delete;

 private:
  Grid grid_;
  void* r2c_ = nullptr;
  void* c2r_ = nullptr;
  void* c2c_fwd_ = nullptr;
  void* c2c_bwd_ = nullptr;
};

// Per-mode geometry of the half spectrum, in the same order as
// Transform::forward output.
struct HalfMode {
  double kx = 0.0, ky = 0.0;          // wavenumbers (Nyquist carries -pi n/len)
  double kx_odd = 0.0, ky_odd = 0.0;  // zeroed at Nyquist, for odd symbols
  double k2 = 0.0;                    // |k|^2
  double multiplicity = 1.0;          // 2 when the mirror mode is not stored
  int ix = 0, iy = 0;                 // signed mode indices
  bool nyquist = false;
};

std::span<const HalfMode> half_modes(const Grid& grid);

// Sum over the full spectrum of w_k |c_k|^2 given half-spectrum coefficients.
double weighted_energy(const Grid& grid, std::span<const cplx> half, std::span<const double> weight_per_half_mode);
double energy(const Grid& grid, std::span<const cplx> half);

}  // namespace fracconv

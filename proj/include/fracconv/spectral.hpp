#pragma once

#include <span>
#include <string>
#include <vector>

#include "fracconv/fft.hpp"
#include "fracconv/grid.hpp"

namespace fracconv {

// A Fourier multiplier on the full dual grid (FFT ordering).
struct MultiplierOp {
  Grid grid;
  std::vector<cplx> values;
  std::string label;

  // values(-k) == conj(values(k)) on every non-Nyquist mode, to `tol`.
  bool hermitian(double tol = 0.0) const;
};

// Unit direction z/|z| with one component per grid axis.
std::vector<double> normalize_direction(std::span<const double> z, int dim);

MultiplierOp identity_symbol(const Grid& grid);
MultiplierOp derivative_symbol(const Grid& grid, std::span<const double> z);
MultiplierOp fractional_laplacian_symbol(const Grid& grid, double s);
MultiplierOp semigroup_symbol(const Grid& grid, double t, double s);
MultiplierOp grad_semigroup_symbol(const Grid& grid, double t, double s, std::span<const double> z);

// Inverse transform of (symbol x forward transform of field), through the
// full complex transform. When the symbol is Hermitian the imaginary residue
// is checked against 1e-10 * max|output| and dropped.
FieldRealization apply_multiplier(const FieldRealization& field, const MultiplierOp& op);

// Symbol |k|^{2s}; the zero mode maps to zero.
FieldRealization fractional_laplacian(const FieldRealization& field, double s);
// P_t: symbol exp(-t |k|^{2s}).
FieldRealization semigroup_apply(const FieldRealization& field, double t, double s);
// grad_z P_t: symbol i (z.k) exp(-t |k|^{2s}), Nyquist component dropped.
FieldRealization grad_semigroup_apply(const FieldRealization& field, double t, double s, std::span<const double> z);
// Plain spectral directional derivative.
FieldRealization directional_derivative(const FieldRealization& field, std::span<const double> z);

// Periodized heat-type kernel of P_t on the grid, normalized to unit mass:
// sum_x p_t(x) dx^d == 1. Throws ResolutionError when the kernel is not
// resolved (max p_t * dx^d > 0.5).
FieldRealization kernel_values(double t, double s, const Grid& grid);

// c_{s,alpha} = (sup_r r^{2 alpha} e^{-r^{2s}})^{1/2} 2^{-alpha/2s}, so that
// sup_k |k|^{2 alpha} e^{-2t|k|^{2s}} = c_{s,alpha}^2 t^{-alpha/s}.
double smoothing_constant(double s, double alpha);

// L2 multiplier constant of grad P_t: sup_r r e^{-r^{2s}}; gives
// ||grad_z P_t||_{L2 -> L2} <= c_s t^{-1/2s}.
double gradient_constant(double s);

// L1 norm of grad_z p_1 on R^d, which bounds grad_z P_t on every L^p.
// Equals 2 p_1(0) in one dimension, (2/pi) Gamma(1 + 1/2s), and the same
// value in two dimensions.
double kernel_gradient_constant(double s);

// Discrete L2 norm (sum_x u^2 dx^d)^{1/2}.
double l2_norm(const FieldRealization& field);

void require_exponent(double s);

}  // namespace fracconv

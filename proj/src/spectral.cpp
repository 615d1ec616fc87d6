#include "fracconv/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fracconv/error.hpp"

namespace fracconv {

namespace {

void check_finite(const FieldRealization& f, const char* what) {
  if (!f.all_finite()) throw NumericError(std::string(what) + ": non-finite output");
}

// Applies a symbol evaluated on the half spectrum; real by construction.
template <class Symbol>
FieldRealization apply_half(const FieldRealization& field, Symbol&& symbol, const char* what) {
  const Grid& g = field.grid;
  const auto& tr = Transform::of(g);
  std::vector<cplx> half(g.half_size());
  tr.forward(field.values, half);
  auto modes = half_modes(g);
  for (std::size_t k = 0; k < half.size(); ++k) half[k] *= symbol(modes[k]);
  FieldRealization out(g, field.time);
  tr.inverse(half, out.values);
  check_finite(out, what);
  return out;
}

template <class Symbol>
MultiplierOp full_symbol(const Grid& g, std::string label, Symbol&& symbol) {
  MultiplierOp op{g, std::vector<cplx>(g.size()), std::move(label)};
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    auto [i, j] = g.unflatten(idx);
    HalfMode m;
    m.kx = g.wavenumber(i);
    m.kx_odd = g.odd_wavenumber(i);
    if (g.dim() == 2) {
      m.ky = g.wavenumber(j);
      m.ky_odd = g.odd_wavenumber(j);
    }
    m.k2 = m.kx * m.kx + m.ky * m.ky;
    m.nyquist = g.is_nyquist(idx);
    op.values[idx] = symbol(m);
  }
  return op;
}

double dot_odd(const HalfMode& m, std::span<const double> z) {
  return z[0] * m.kx_odd + (z.size() > 1 ? z[1] * m.ky_odd : 0.0);
}

// |k|^{2s} from |k|^2 without pow() at the zero mode.
double symbol_power(double k2, double s) { return k2 == 0.0 ? 0.0 : std::pow(k2, s); }

void require_time(double t, bool strict) {
  if (!std::isfinite(t) || t < 0.0 || (strict && t == 0.0))
    throw ConfigError(strict ? "time must be > 0" : "time must be >= 0");
}

}  // namespace

void require_exponent(double s) {
  if (!(s > 0.0 && s <= 1.0)) throw ConfigError("fractional exponent s must lie in (0, 1], got " + std::to_string(s));
}

bool MultiplierOp::hermitian(double tol) const {
  for (std::size_t idx = 0; idx < values.size(); ++idx) {
    if (grid.is_nyquist(idx)) continue;
    if (std::abs(values[grid.mirror(idx)] - std::conj(values[idx])) > tol) return false;
  }
  return true;
}

std::vector<double> normalize_direction(std::span<const double> z, int dim) {
  if (static_cast<int>(z.size()) != dim)
    throw ConfigError("direction must have " + std::to_string(dim) + " components");
  double norm = 0.0;
  for (double c : z) norm += c * c;
  norm = std::sqrt(norm);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw ConfigError("direction must be a nonzero finite vector");
  std::vector<double> out(z.begin(), z.end());
  for (double& c : out) c /= norm;
  return out;
}

MultiplierOp identity_symbol(const Grid& grid) {
  return full_symbol(grid, "identity", [](const HalfMode&) { return cplx(1.0, 0.0); });
}

MultiplierOp derivative_symbol(const Grid& grid, std::span<const double> z) {
  auto dir = normalize_direction(z, grid.dim());
  return full_symbol(grid, "grad_z", [&](const HalfMode& m) { return cplx(0.0, dot_odd(m, dir)); });
}

MultiplierOp fractional_laplacian_symbol(const Grid& grid, double s) {
  require_exponent(s);
  return full_symbol(grid, "fractional_laplacian", [&](const HalfMode& m) { return cplx(symbol_power(m.k2, s), 0.0); });
}

MultiplierOp semigroup_symbol(const Grid& grid, double t, double s) {
  require_exponent(s);
  require_time(t, false);
  return full_symbol(grid, "semigroup",
                     [&](const HalfMode& m) { return cplx(std::exp(-t * symbol_power(m.k2, s)), 0.0); });
}

MultiplierOp grad_semigroup_symbol(const Grid& grid, double t, double s, std::span<const double> z) {
  require_exponent(s);
  require_time(t, true);
  auto dir = normalize_direction(z, grid.dim());
  return full_symbol(grid, "grad_semigroup", [&](const HalfMode& m) {
    return cplx(0.0, dot_odd(m, dir) * std::exp(-t * symbol_power(m.k2, s)));
  });
}

FieldRealization apply_multiplier(const FieldRealization& field, const MultiplierOp& op) {
  if (!(field.grid == op.grid) || op.values.size() != field.grid.size() || field.values.size() != field.grid.size())
    throw ConfigError("apply_multiplier: field grid does not match operator '" + op.label + "'");
  const Grid& g = field.grid;
  const auto& tr = Transform::of(g);
  std::vector<cplx> buf(field.values.begin(), field.values.end());
  std::vector<cplx> coeff(g.size());
  tr.forward_full(buf, coeff);
  for (std::size_t k = 0; k < coeff.size(); ++k) coeff[k] *= op.values[k];
  tr.inverse_full(coeff, buf);

  FieldRealization out(g, field.time);
  double max_re = 0.0, max_im = 0.0;
  for (std::size_t x = 0; x < buf.size(); ++x) {
    out.values[x] = buf[x].real();
    max_re = std::max(max_re, std::abs(buf[x].real()));
    max_im = std::max(max_im, std::abs(buf[x].imag()));
  }
  check_finite(out, "apply_multiplier");
  if (!std::isfinite(max_im)) throw NumericError("apply_multiplier: non-finite output");
  // Hermitian symbols map real fields to real fields; anything beyond
  // roundoff means the symbol or the input was not what the caller thought.
  if (max_im > 1e-10 * max_re + 1e-300) {
    throw NumericError("apply_multiplier: imaginary residue " + std::to_string(max_im) + " from operator '" +
                       op.label + "' exceeds 1e-10 * max|output|");
  }
  return out;
}

FieldRealization fractional_laplacian(const FieldRealization& field, double s) {
  require_exponent(s);
  return apply_half(field, [s](const HalfMode& m) { return symbol_power(m.k2, s); }, "fractional_laplacian");
}

FieldRealization semigroup_apply(const FieldRealization& field, double t, double s) {
  require_exponent(s);
  require_time(t, false);
  if (t == 0.0) return field;
  return apply_half(field, [&](const HalfMode& m) { return std::exp(-t * symbol_power(m.k2, s)); }, "semigroup_apply");
}

FieldRealization grad_semigroup_apply(const FieldRealization& field, double t, double s, std::span<const double> z) {
  require_exponent(s);
  require_time(t, true);
  auto dir = normalize_direction(z, field.grid.dim());
  return apply_half(
      field,
      [&](const HalfMode& m) { return cplx(0.0, dot_odd(m, dir) * std::exp(-t * symbol_power(m.k2, s))); },
      "grad_semigroup_apply");
}

FieldRealization directional_derivative(const FieldRealization& field, std::span<const double> z) {
  auto dir = normalize_direction(z, field.grid.dim());
  return apply_half(field, [&](const HalfMode& m) { return cplx(0.0, dot_odd(m, dir)); }, "directional_derivative");
}

FieldRealization kernel_values(double t, double s, const Grid& grid) {
  require_exponent(s);
  require_time(t, true);
  const auto& tr = Transform::of(grid);
  auto modes = half_modes(grid);
  const double volume = std::pow(grid.len(), grid.dim());
  std::vector<cplx> half(grid.half_size());
  for (std::size_t k = 0; k < half.size(); ++k) half[k] = std::exp(-t * symbol_power(modes[k].k2, s)) / volume;
  FieldRealization p(grid, t);
  tr.inverse(half, p.values);
  check_finite(p, "kernel_values");
  const double peak_mass = p.max_abs() * grid.cell_volume();
  if (peak_mass > 0.5) {
    throw ResolutionError("kernel_values: kernel under-resolved at t=" + std::to_string(t) +
                          " (peak cell mass " + std::to_string(peak_mass) + " > 0.5); refine the grid");
  }
  return p;
}

double smoothing_constant(double s, double alpha) {
  require_exponent(s);
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("smoothing_constant: alpha must be >= 0");
  // With rho = r^{2s}: sup rho^a e^{-rho} is attained at rho = a (a = alpha/s).
  const double a = alpha / s;
  const double log_sup = a > 0.0 ? a * std::log(a) - a : 0.0;
  return std::exp(0.5 * log_sup - 0.5 * a * std::numbers::ln2);
}

double gradient_constant(double s) {
  require_exponent(s);
  // d/dr (r e^{-r^{2s}}) = 0 at r^{2s} = 1/(2s).
  const double r = std::pow(2.0 * s, -1.0 / (2.0 * s));
  return r * std::exp(-1.0 / (2.0 * s));
}

double kernel_gradient_constant(double s) {
  require_exponent(s);
  return 2.0 / std::numbers::pi * std::tgamma(1.0 + 1.0 / (2.0 * s));
}

double l2_norm(const FieldRealization& field) {
  std::vector<double> sq(field.values.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = field.values[i] * field.values[i];
  return std::sqrt(pairwise_sum(sq) * field.grid.cell_volume());
}

}  // namespace fracconv

#include "fracconv/nonlinearity.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "fracconv/error.hpp"

namespace fracconv {

NonlinearitySpec NonlinearitySpec::with_cutoff(double level) const {
  NonlinearitySpec out = *this;
  out.cutoff_level = level;
  return out;
}

void NonlinearitySpec::validate() const {
  switch (kind) {
    case NonlinearityKind::zero:
    case NonlinearityKind::burgers_quadratic:
      break;
    case NonlinearityKind::lipschitz_tanh:
      if (!(lipschitz >= 0.0) || !std::isfinite(lipschitz)) throw ConfigError("tanh nonlinearity: L must be >= 0");
      break;
    case NonlinearityKind::polynomial:
      if (!(coeff > 0.0) || !std::isfinite(coeff)) throw ConfigError("polynomial nonlinearity: C must be > 0");
      if (!(power >= 1.0) || !std::isfinite(power)) throw ConfigError("polynomial nonlinearity: q must be >= 1");
      break;
  }
  if (cutoff_level && !(*cutoff_level > 0.0 && std::isfinite(*cutoff_level)))
    throw ConfigError("cut-off level must be a positive finite number");
}

double NonlinearitySpec::raw(double x) const {
  switch (kind) {
    case NonlinearityKind::zero:
      return 0.0;
    case NonlinearityKind::lipschitz_tanh:
      return lipschitz * std::tanh(x);
    case NonlinearityKind::burgers_quadratic:
      return 0.5 * x * x;
    case NonlinearityKind::polynomial:
      return coeff * std::pow(std::abs(x), power + 1.0) / (power + 1.0);
  }
  return 0.0;
}

double NonlinearitySpec::effective_lipschitz() const {
  switch (kind) {
    case NonlinearityKind::zero:
      return 0.0;
    case NonlinearityKind::lipschitz_tanh:
      return lipschitz;
    case NonlinearityKind::burgers_quadratic:
      return cutoff_level ? *cutoff_level : std::numeric_limits<double>::infinity();
    case NonlinearityKind::polynomial:
      return cutoff_level ? coeff * std::pow(*cutoff_level, power) : std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

std::string NonlinearitySpec::name() const {
  std::ostringstream os;
  switch (kind) {
    case NonlinearityKind::zero:
      os << "zero";
      break;
    case NonlinearityKind::lipschitz_tanh:
      os << "lipschitz_tanh(L=" << lipschitz << ")";
      break;
    case NonlinearityKind::burgers_quadratic:
      os << "burgers_quadratic";
      break;
    case NonlinearityKind::polynomial:
      os << "polynomial(C=" << coeff << ",q=" << power << ")";
      break;
  }
  if (cutoff_level) os << "∘h_" << *cutoff_level;
  return os.str();
}

void dealias_two_thirds(const Grid& grid, std::span<cplx> half) {
  const auto modes = half_modes(grid);
  const int n = grid.n();
  for (std::size_t k = 0; k < half.size(); ++k) {
    if (3 * std::abs(modes[k].ix) >= n || 3 * std::abs(modes[k].iy) >= n) half[k] = 0.0;
  }
}

FieldRealization eval_nonlinearity(const NonlinearitySpec& spec, const FieldRealization& field, bool dealias,
                                   std::string_view context) {
  FieldRealization out(field.grid, field.time);
  for (std::size_t x = 0; x < field.values.size(); ++x) out.values[x] = spec(field.values[x]);
  if (!out.all_finite()) {
    throw NumericError("nonlinearity " + spec.name() + " produced non-finite values" +
                       (context.empty() ? std::string() : " in " + std::string(context)));
  }
  if (dealias && spec.polynomial_class()) {
    const auto& tr = Transform::of(field.grid);
    std::vector<cplx> half(field.grid.half_size());
    tr.forward(out.values, half);
    dealias_two_thirds(field.grid, half);
    tr.inverse(half, out.values);
  }
  return out;
}

}  // namespace fracconv

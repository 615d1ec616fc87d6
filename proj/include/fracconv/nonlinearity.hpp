#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "fracconv/fft.hpp"
#include "fracconv/grid.hpp"

namespace fracconv {

enum class NonlinearityKind { zero, lipschitz_tanh, burgers_quadratic, polynomial };

// h_n(x) = min(|x|, n) sgn(x).
inline double cutoff(double x, double level) { return x > level ? level : (x < -level ? -level : x); }

// The flux f in  u_t + (-Delta)^s u = grad_z f(u).
//   zero              f = 0
//   lipschitz_tanh    f = L tanh(x)
//   burgers_quadratic f = x^2 / 2
//   polynomial        f = C |x|^{q+1} / (q+1), so |f'(x)| = C |x|^q
// With a cutoff level n every kind is evaluated as f(h_n(x)).
struct NonlinearitySpec {
  NonlinearityKind kind = NonlinearityKind::zero;
  double lipschitz = 0.0;  // L
  double coeff = 1.0;      // C
  double power = 1.0;      // q
  std::optional<double> cutoff_level;

  static NonlinearitySpec zero() { return {}; }
  static NonlinearitySpec tanh(double L) { return {NonlinearityKind::lipschitz_tanh, L, 1.0, 1.0, std::nullopt}; }
  static NonlinearitySpec burgers() { return {NonlinearityKind::burgers_quadratic, 0.0, 1.0, 1.0, std::nullopt}; }
  static NonlinearitySpec polynomial(double C, double q) { return {NonlinearityKind::polynomial, 0.0, C, q, std::nullopt}; }
  NonlinearitySpec with_cutoff(double level) const;

  void validate() const;
  // f without the cut-off.
  double raw(double x) const;
  double operator()(double x) const { return raw(cutoff_level ? cutoff(x, *cutoff_level) : x); }

  bool polynomial_class() const {
    return kind == NonlinearityKind::burgers_quadratic || kind == NonlinearityKind::polynomial;
  }
  // Globally Lipschitz as evaluated (polynomial kinds need a cut-off).
  bool lipschitz_class() const { return !polynomial_class() || cutoff_level.has_value(); }
  // sup |f'| over the range seen by f: L for tanh, n for cut-off Burgers,
  // C n^q for cut-off polynomial; infinity for an uncut polynomial.
  double effective_lipschitz() const;
  std::string name() const;
};

// Keeps modes with |m| < n/3 on every axis (2/3 rule) in a half spectrum.
void dealias_two_thirds(const Grid& grid, std::span<cplx> half);

// Pointwise f(u). With `dealias` set and a polynomial kind, the result is
// truncated by the 2/3 rule. Non-finite values raise NumericError mentioning
// `context`.
FieldRealization eval_nonlinearity(const NonlinearitySpec& spec, const FieldRealization& field, bool dealias = false,
                                   std::string_view context = {});

}  // namespace fracconv

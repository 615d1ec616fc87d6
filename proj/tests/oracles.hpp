#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "fracconv/grid.hpp"

namespace oracle {

// Golden-section search for the maximum of a unimodal f on [a, b].
inline double golden_max(const std::function<double(double)>& f, double a, double b, int iters = 200) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  for (int i = 0; i < iters; ++i) {
    if (f(c) > f(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - g * (b - a);
    d = a + g * (b - a);
  }
  return f(0.5 * (a + b));
}

// sup_r r e^{-r^{2s}}.
inline double gradient_constant(double s) {
  return golden_max([s](double r) { return r * std::exp(-std::pow(r, 2.0 * s)); }, 0.0, 10.0);
}

// (sup_r r^{2 alpha} e^{-r^{2s}})^{1/2} 2^{-alpha/2s}.
inline double smoothing_constant(double s, double alpha) {
  const double sup =
      golden_max([&](double r) { return std::pow(r, 2.0 * alpha) * std::exp(-std::pow(r, 2.0 * s)); }, 0.0, 50.0);
  return std::sqrt(sup) * std::pow(2.0, -alpha / (2.0 * s));
}

// Periodized heat kernel (4 pi t)^{-1/2} sum_m exp(-(x + m L)^2 / 4t).
inline double heat_kernel(double x, double t, double len) {
  double v = 0.0;
  for (int m = -4; m <= 4; ++m) v += std::exp(-(x + m * len) * (x + m * len) / (4.0 * t));
  return v / std::sqrt(4.0 * std::numbers::pi * t);
}

// Discrete grid kernel of P_h by direct cosine summation (1-d).
inline std::vector<double> grid_kernel(const fracconv::Grid& g, double h, double s) {
  std::vector<double> p(g.n(), 0.0);
  for (int d = 0; d < g.n(); ++d) {
    for (int m = 0; m < g.n(); ++m) {
      const double k = g.wavenumber(m);
      p[d] += std::exp(-h * std::pow(k * k, s)) * std::cos(k * d * g.dx());
    }
    p[d] /= g.len();
  }
  return p;
}

// (P F)(x_i) = sum_j dx p(x_i - x_j) F(x_j) by direct convolution (1-d).
inline std::vector<double> convolve(const fracconv::Grid& g, const std::vector<double>& p, const std::vector<double>& F) {
  const int n = g.n();
  std::vector<double> out(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out[i] += g.dx() * p[((i - j) % n + n) % n] * F[j];
  return out;
}

}  // namespace oracle

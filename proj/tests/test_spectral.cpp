#include <doctest.h>

#include <cmath>
#include <numbers>
#include <thread>

#include "fracconv/error.hpp"
#include "fracconv/fft.hpp"
#include "fracconv/random_fields.hpp"
#include "fracconv/spectral.hpp"
#include "oracles.hpp"

using namespace fracconv;
using std::numbers::pi;

namespace {

FieldRealization mode_field(const Grid& g, double k, bool sine = false) {
  FieldRealization f(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = position(g, i)[0];
    f.values[i] = sine ? std::sin(k * x) : std::cos(k * x);
  }
  return f;
}

double sup_diff(const FieldRealization& a, const FieldRealization& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

FieldRealization random_field(const Grid& g, std::uint64_t seed) {
  return sample_field(power_law_measure(g, 1.0, 1.0, 0.3), seed);
}

}  // namespace

TEST_CASE("grid validation and geometry") {
  CHECK_THROWS_AS(Grid(3, 16, 1.0), ConfigError);
  CHECK_THROWS_AS(Grid(1, 12, 1.0), ConfigError);
  CHECK_THROWS_AS(Grid(1, 4, 1.0), ConfigError);
  CHECK_THROWS_AS(Grid(1, 16, 0.0), ConfigError);
  const Grid g(2, 16, 2.0 * pi);
  CHECK(g.size() == 256);
  CHECK(g.dx() == doctest::Approx(2.0 * pi / 16));
  CHECK(g.signed_index(8) == -8);
  CHECK(g.odd_wavenumber(8) == 0.0);
  CHECK(g.mirror(g.flatten(3, -2)) == g.flatten(-3, 2));
  CHECK(g.self_conjugate(g.flatten(8, 0)));
  CHECK_FALSE(g.self_conjugate(g.flatten(1, 0)));
}

TEST_CASE("Parseval with the e^{ikx} coefficient convention") {
  for (int dim : {1, 2}) {
    const Grid g(dim, dim == 1 ? 64 : 16, 3.0);
    const auto u = random_field(g, 5);
    std::vector<cplx> half(g.half_size());
    Transform::of(g).forward(u.values, half);
    double mean_sq = 0.0;
    for (double v : u.values) mean_sq += v * v / static_cast<double>(g.size());
    CHECK(energy(g, half) == doctest::Approx(mean_sq).epsilon(1e-12));
    FieldRealization back(g);
    Transform::of(g).inverse(half, back.values);
    CHECK(sup_diff(back, u) < 1e-13);
  }
}

TEST_CASE("apply_multiplier examples") {
  const Grid g(1, 64, 5.0);
  const auto u = random_field(g, 1);
  CHECK(sup_diff(apply_multiplier(u, identity_symbol(g)), u) < 1e-14);
  MultiplierOp zero{g, std::vector<cplx>(g.size(), 0.0), "zero"};
  CHECK(apply_multiplier(u, zero).max_abs() == 0.0);

  const double kappa = 2.0 * pi / g.len();
  const auto d = apply_multiplier(mode_field(g, kappa), derivative_symbol(g, std::vector<double>{1.0}));
  auto expected = mode_field(g, kappa, true);
  for (double& v : expected.values) v *= -kappa;
  CHECK(sup_diff(d, expected) < 1e-10);

  CHECK_THROWS_AS(apply_multiplier(u, identity_symbol(Grid(1, 32, 5.0))), ConfigError);
  MultiplierOp bad{g, std::vector<cplx>(g.size(), std::numeric_limits<double>::infinity()), "inf"};
  CHECK_THROWS_AS(apply_multiplier(u, bad), NumericError);
}

TEST_CASE("multiplier linearity") {
  const Grid g(2, 32, 4.0);
  const auto u = random_field(g, 2), v = random_field(g, 3);
  FieldRealization mix(g);
  for (std::size_t i = 0; i < g.size(); ++i) mix.values[i] = 1.5 * u.values[i] - 0.25 * v.values[i];
  const auto op = semigroup_symbol(g, 0.3, 0.8);
  const auto a = apply_multiplier(mix, op), pu = apply_multiplier(u, op), pv = apply_multiplier(v, op);
  double scale = a.max_abs(), err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(a.values[i] - 1.5 * pu.values[i] + 0.25 * pv.values[i]));
  CHECK(err <= 1e-12 * scale);
}

TEST_CASE("symbols are Hermitian except at Nyquist") {
  const Grid g(2, 16, 2.0);
  const std::vector<double> z{0.6, 0.8};
  CHECK(fractional_laplacian_symbol(g, 0.7).hermitian());
  CHECK(semigroup_symbol(g, 0.2, 0.7).hermitian());
  CHECK(derivative_symbol(g, z).hermitian());
  CHECK(grad_semigroup_symbol(g, 0.2, 0.7, z).hermitian());
}

TEST_CASE("fractional laplacian") {
  const Grid g(1, 128, 2.0 * pi);
  FieldRealization c(g);
  for (double& v : c.values) v = 4.0;
  CHECK(fractional_laplacian(c, 0.5).max_abs() == 0.0);
  const double kappa = 2.0 * pi / g.len() * 3;
  for (double s : {0.3, 0.75, 1.0}) {
    auto expected = mode_field(g, kappa);
    for (double& v : expected.values) v *= std::pow(kappa, 2.0 * s);
    CHECK(sup_diff(fractional_laplacian(mode_field(g, kappa), s), expected) < 1e-10);
  }
  CHECK(std::abs(fractional_laplacian(random_field(g, 4), 0.6).mean()) < 1e-14);
  CHECK_THROWS_AS(fractional_laplacian(c, 0.0), ConfigError);
  CHECK_THROWS_AS(fractional_laplacian(c, 1.1), ConfigError);
}

TEST_CASE("semigroup examples and properties") {
  const Grid g(1, 128, 2.0 * pi);
  const auto u = random_field(g, 6);
  CHECK(sup_diff(semigroup_apply(u, 0.0, 0.7), u) == 0.0);
  auto half = mode_field(g, 1.0);
  for (double& v : half.values) v *= 0.5;
  CHECK(sup_diff(semigroup_apply(mode_field(g, 1.0), std::log(2.0), 1.0), half) < 1e-14);
  CHECK(sup_diff(semigroup_apply(semigroup_apply(u, 0.2, 0.7), 0.3, 0.7), semigroup_apply(u, 0.5, 0.7)) < 1e-12);
  CHECK(semigroup_apply(u, 0.4, 0.9).mean() == doctest::Approx(u.mean()).epsilon(1e-14));
  double prev = l2_norm(u);
  for (double t : {0.001, 0.01, 0.1, 1.0, 10.0}) {
    const double cur = l2_norm(semigroup_apply(u, t, 0.6));
    CHECK(cur <= prev);
    prev = cur;
  }
  CHECK_THROWS_AS(semigroup_apply(u, -0.1, 0.7), ConfigError);
}

TEST_CASE("grad semigroup examples") {
  const Grid g(1, 128, 2.0 * pi);
  FieldRealization c(g);
  for (double& v : c.values) v = -2.0;
  const std::vector<double> z{1.0};
  CHECK(grad_semigroup_apply(c, 0.5, 0.8, z).max_abs() == 0.0);
  CHECK_THROWS_AS(grad_semigroup_apply(c, 0.0, 0.8, z), ConfigError);

  // sin(kx) -> (z.k) e^{-t k^{2s}} cos(kx); the direction sign enters through z.k.
  const double kappa = 3.0, t = 0.2, s = 0.75;
  for (double sign : {1.0, -1.0}) {
    auto expected = mode_field(g, kappa);
    for (double& v : expected.values) v *= sign * kappa * std::exp(-t * std::pow(kappa, 2 * s));
    CHECK(sup_diff(grad_semigroup_apply(mode_field(g, kappa, true), t, s, std::vector<double>{sign}), expected) < 1e-12);
  }
}

TEST_CASE("gradient bound on white-noise input") {
  const Grid g(1, 256, 2.0 * pi);
  std::vector<double> w(g.size(), 1.0 / static_cast<double>(g.size()));
  w[0] = 0.0;
  const SpectralMeasure white{g, w, 0.0, true, "white"};
  const auto u = sample_field(white, 11);
  for (double s : {0.6, 0.8, 1.0}) {
    for (double t : {1e-3, 1e-2, 0.1, 1.0, 10.0}) {
      const double amp = l2_norm(grad_semigroup_apply(u, t, s, std::vector<double>{1.0})) / l2_norm(u);
      CHECK(amp <= oracle::gradient_constant(s) * std::pow(t, -1.0 / (2.0 * s)));
    }
  }
}

TEST_CASE("kernel identities") {
  for (double s : {0.6, 0.75, 1.0}) {
    const Grid g(1, 256, 2.0 * pi);
    const auto p = kernel_values(0.5, s, g);
    double mass = 0.0, lowest = 0.0;
    for (double v : p.values) {
      mass += v * g.dx();
      lowest = std::min(lowest, v);
    }
    CHECK(std::abs(mass - 1.0) <= 1e-8);
    CHECK(lowest >= -1e-12);
    for (int i = 1; i < g.n() / 2; ++i) CHECK(p.values[i] == doctest::Approx(p.values[g.n() - i]).epsilon(1e-12));
  }
  for (double t : {0.25, 1.0}) {
    const Grid g(1, 256, 20.0 * std::sqrt(t));
    const auto p = kernel_values(t, 1.0, g);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(p.values[i] - oracle::heat_kernel(position(g, i)[0], t, g.len())));
    CHECK(err <= 1e-8);
  }
  const Grid g2(2, 32, 10.0);
  const auto p2 = kernel_values(0.5, 0.75, g2);
  double mass2 = 0.0;
  for (double v : p2.values) mass2 += v * g2.cell_volume();
  CHECK(std::abs(mass2 - 1.0) <= 1e-8);
  CHECK(p2.values[g2.flatten(2, 5)] == doctest::Approx(p2.values[g2.flatten(5, 2)]).epsilon(1e-12));
  CHECK(p2.values[g2.flatten(2, 5)] == doctest::Approx(p2.values[g2.flatten(-2, -5)]).epsilon(1e-12));

  CHECK_THROWS_AS(kernel_values(1e-4, 1.0, Grid(1, 16, 2.0 * pi)), ResolutionError);
}

TEST_CASE("smoothing and gradient constants against golden-section maximization") {
  for (double s : {0.55, 0.6, 0.75, 0.9, 1.0}) {
    CHECK(gradient_constant(s) == doctest::Approx(oracle::gradient_constant(s)).epsilon(1e-9));
    CHECK(smoothing_constant(s, 0.0) == doctest::Approx(1.0));
    CHECK(smoothing_constant(s, s) == doctest::Approx(std::exp(-0.5) * std::sqrt(0.5)).epsilon(1e-12));
    for (double a : {0.3, 0.8, 1.0, 1.4, 2.0}) {
      const double alpha = a * s;
      CHECK(smoothing_constant(s, alpha) == doctest::Approx(oracle::smoothing_constant(s, alpha)).epsilon(1e-8));
    }
  }
  CHECK(gradient_constant(1.0) == doctest::Approx(std::exp(-0.5) / std::sqrt(2.0)).epsilon(1e-14));

  // On alpha >= s the constant first decreases (alpha/s in [1, 2]) and then
  // grows (alpha/s > 2); both branches are checked against the oracle.
  const double s = 0.75;
  double prev = smoothing_constant(s, s);
  for (double a = 1.1; a <= 2.0; a += 0.1) {
    const double cur = smoothing_constant(s, a * s);
    CHECK(cur < prev);
    CHECK(oracle::smoothing_constant(s, a * s) < oracle::smoothing_constant(s, (a - 0.1) * s) + 1e-12);
    prev = cur;
  }
  prev = smoothing_constant(s, 2.0 * s);
  for (double a = 2.1; a <= 4.0; a += 0.1) {
    const double cur = smoothing_constant(s, a * s);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("kernel gradient constant equals the L1 norm of grad p_1") {
  CHECK(kernel_gradient_constant(1.0) == doctest::Approx(1.0 / std::sqrt(pi)).epsilon(1e-14));
  for (double s : {0.6, 0.75, 1.0}) {
    const Grid g(1, 8192, 400.0);
    const auto p = kernel_values(1.0, s, g);
    const auto dp = directional_derivative(p, std::vector<double>{1.0});
    double l1 = 0.0;
    for (double v : dp.values) l1 += std::abs(v) * g.dx();
    // Symmetric unimodal profile on the torus: int |p'| = 2 (p(0) - p(L/2)).
    const double tail = p.values[g.n() / 2];
    CHECK(l1 == doctest::Approx(2.0 * (p.values[0] - tail)).epsilon(1e-3));
    CHECK(std::abs(l1 - kernel_gradient_constant(s)) <= 2.0 * tail + 1e-3 * l1);
  }
}

TEST_CASE("transforms are safe to use concurrently") {
  const Grid g(1, 256, 3.0);
  const auto u = random_field(g, 9);
  const auto ref = semigroup_apply(u, 0.1, 0.8);
  std::vector<double> errs(4, 1.0);
  {
    std::vector<std::jthread> pool;
    for (int k = 0; k < 4; ++k)
      pool.emplace_back([&, k] {
        double e = 0.0;
        for (int r = 0; r < 50; ++r) e = std::max(e, sup_diff(semigroup_apply(u, 0.1, 0.8), ref));
        errs[k] = e;
      });
  }
  for (double e : errs) CHECK(e == 0.0);
}

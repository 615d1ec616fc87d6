#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "fracconv/ensemble_stats.hpp"
#include "fracconv/error.hpp"
#include "fracconv/spectral.hpp"
#include "oracles.hpp"

using namespace fracconv;
using std::numbers::pi;

namespace {

SolverConfig linear_config(double s, double t_end, int steps) {
  SolverConfig c;
  c.s = s;
  c.time_grid = SolverConfig::uniform_time_grid(t_end, steps);
  return c;
}

std::vector<Trajectory> linear_runs(const SpectralMeasure& m, std::size_t count, const SolverConfig& c, std::uint64_t seed) {
  const auto ens = sample_ensemble(m, seed, count, 0);
  std::vector<Trajectory> out;
  for (const auto& u : ens.members) out.push_back(linear_solution(u, c));
  return out;
}

// sum_k e^{-2 t |k|^{2s}} sigma_k cos(k y) on a 1-d grid.
double decayed_covariance(const SpectralMeasure& m, double t, double s, int lag) {
  const Grid& g = m.grid;
  double v = 0.0;
  for (int k = 0; k < g.n(); ++k) {
    const double kk = g.wavenumber(k);
    v += std::exp(-2.0 * t * std::pow(kk * kk, s)) * m.weights[k] * std::cos(kk * lag * g.dx());
  }
  return v;
}

Ensemble constant_ensemble(const Grid& g, double c, int count) {
  Ensemble e;
  for (int i = 0; i < count; ++i) {
    e.members.emplace_back(g, std::vector<double>(g.size(), c));
    e.seeds.push_back(i);
  }
  return e;
}

}  // namespace

TEST_CASE("moment examples") {
  const Grid g(1, 32, 2.0 * pi);
  for (double p : {2.0, 3.5, 6.0}) {
    const auto e = moment(constant_ensemble(g, -1.5, 4), p);
    CHECK(e.value == doctest::Approx(std::pow(1.5, p)).epsilon(1e-14));
    CHECK(e.std_error == 0.0);
  }
  CHECK(moment(constant_ensemble(g, -1.5, 4), std::numeric_limits<double>::infinity()).value == 1.5);
  CHECK_THROWS_AS(moment(constant_ensemble(g, 1.0, 2), 0.5), ConfigError);

  const auto ens = sample_ensemble(gaussian_bump_measure(g, 2.0, 1.0), 5, 20000, 0);
  const auto m2 = moment(ens, 2.0), m4 = moment(ens, 4.0);
  CHECK(std::abs(m2.value - 1.0) <= 3.0 * m2.std_error);
  CHECK(std::abs(m4.value - 3.0) <= 3.0 * m4.std_error);
  CHECK(std::sqrt(m2.value) <= std::pow(m4.value, 0.25) + 3.0 * m4.std_error);

  Ensemble smoothed = ens;
  for (auto& u : smoothed.members) u = semigroup_apply(u, 0.3, 0.75);
  for (double p : {2.0, 4.0}) {
    const auto before = moment(ens, p), after = moment(smoothed, p);
    CHECK(after.value <= before.value + 3.0 * before.std_error);
  }
}

TEST_CASE("moment series on the linear flow") {
  const Grid g(1, 32, 2.0 * pi);
  const auto m = gaussian_bump_measure(g, 2.0, 1.0, 0.3);
  const auto c = linear_config(0.75, 1.0, 10);
  const auto runs = linear_runs(m, 3000, c, 8);
  const auto series = moment_series(runs, 2.0);
  for (std::size_t j = 0; j < series.times.size(); ++j) {
    const double oracle = decayed_covariance(m, series.times[j], 0.75, 0) + 0.3 * 0.3;
    CHECK(std::abs(series.values[j] - oracle) <= 3.0 * series.std_error[j]);
  }
  CHECK(series.nonincreasing());
  for (double p : {4.0, 6.0}) CHECK(moment_series(runs, p).nonincreasing());

  SummaryRequest req;
  req.orders = {2.0, 4.0};
  req.s = 0.75;
  std::vector<MemberSummary> sums;
  for (const auto& t : runs) sums.push_back(summarize(t, req));
  const auto via = moment_series(sums, 4.0);
  const auto direct = moment_series(runs, 4.0);
  for (std::size_t j = 0; j < via.values.size(); ++j) CHECK(via.values[j] == doctest::Approx(direct.values[j]).epsilon(1e-13));
  CHECK_THROWS_AS(moment_series(sums, 3.0), ConfigError);

  Trajectory zero;
  for (double t : c.time_grid) {
    zero.states.emplace_back(g, t);
    zero.times.push_back(t);
  }
  std::vector<Trajectory> zeros{zero, zero};
  const auto zs = moment_series(zeros, 2.0);
  for (double v : zs.values) CHECK(v == 0.0);
  CHECK(zs.nonincreasing());
}

TEST_CASE("moment series flags a growing moment") {
  const Grid g(1, 16, 2.0 * pi);
  const auto c = linear_config(1.0, 1.0, 4);
  auto runs = linear_runs(gaussian_bump_measure(g, 2.0, 1.0), 500, c, 10);
  for (auto& t : runs)
    for (std::size_t j = 0; j < t.size(); ++j)
      for (double& v : t.states[j].values) v *= 1.0 + j;
  CHECK_FALSE(moment_series(runs, 2.0).nonincreasing());
}

TEST_CASE("energy dissipation on the linear flow") {
  // Long box: the energy sits at |k| < 1, where the centred-difference error
  // (2 lambda)^2 dt^2 / 6 stays below dt^2 relative to |rhs|.
  const Grid g(1, 32, 8.0 * pi);
  const double s = 0.8;
  const auto m = gaussian_bump_measure(g, 0.5, 1.0);
  const auto c = linear_config(s, 0.5, 250);
  const auto runs = linear_runs(m, 400, c, 12);
  const auto rep = dissipation_residual(runs, s);
  const double dt = 0.5 / 250;
  for (std::size_t j = 0; j < rep.times.size(); ++j) {
    CHECK(rep.rhs[j] <= 0.0);
    if (!rep.interior[j]) continue;
    CHECK(std::abs(rep.residual[j]) <= dt * dt * std::abs(rep.rhs[j]) + 3.0 * rep.std_error[j]);
    // Analytic derivative of sum_k e^{-2t|k|^{2s}} sigma_k.
    double d = 0.0;
    for (int k = 0; k < g.n(); ++k) {
      const double lam = std::pow(g.wavenumber(k) * g.wavenumber(k), s);
      d -= 2.0 * lam * std::exp(-2.0 * rep.times[j] * lam) * m.weights[k];
    }
    const double scale = std::abs(d);
    CHECK(std::abs(rep.rhs[j] - d) <= 0.2 * scale);
  }
  CHECK_FALSE(rep.interior.front());
  CHECK_FALSE(rep.interior.back());
  CHECK(rep.holds());

  Trajectory flat;
  for (double t : c.time_grid) {
    flat.states.emplace_back(g, std::vector<double>(g.size(), 2.0), t);
    flat.times.push_back(t);
  }
  std::vector<Trajectory> flats{flat, flat, flat};
  const auto fr = dissipation_residual(flats, s);
  for (std::size_t j = 0; j < fr.times.size(); ++j) {
    CHECK(fr.lhs[j] == 0.0);
    CHECK(fr.rhs[j] == 0.0);
  }

  const auto coarse = linear_runs(m, 20, linear_config(s, 2.0, 4), 13);
  CHECK_THROWS_AS(dissipation_residual(coarse, s), ResolutionError);
}

TEST_CASE("covariance dynamics on the linear flow") {
  const Grid g(1, 32, 2.0 * pi);
  const double s = 0.9;
  const auto m = gaussian_bump_measure(g, 1.0, 1.0, 0.5);
  const auto c = linear_config(s, 0.3, 150);
  const auto runs = linear_runs(m, 1500, c, 14);
  const std::vector<Offset> lags{{0, 0}, {2, 0}, {7, 0}};
  const auto cd = covariance_dynamics(runs, lags, s);
  const auto m2 = moment_series(runs, 2.0);
  for (std::size_t l = 0; l < lags.size(); ++l)
    for (std::size_t j = 0; j < cd.times.size(); j += 25)
      CHECK(std::abs(cd.value[l][j] - decayed_covariance(m, cd.times[j], s, lags[l][0])) <= 3.0 * cd.std_error[l][j]);
  for (std::size_t j = 0; j < cd.times.size(); ++j) {
    double mean2 = 0.0;
    for (const auto& t : runs) mean2 += t.states[j].mean() * t.states[j].mean() / runs.size();
    CHECK(cd.value[0][j] == doctest::Approx(m2.values[j] - mean2).epsilon(1e-10));
  }
  CHECK(cd.identity.holds());
}

TEST_CASE("Stroock-Varopoulos check against a brute-force kernel sum") {
  const Grid g(1, 16, 2.0 * pi);
  const auto gauss = sample_ensemble(gaussian_bump_measure(g, 2.0, 1.0), 15, 6, 0);
  for (double s : {0.6, 1.0}) {
    for (double h : {0.1, 0.4}) {
      const auto p = oracle::grid_kernel(g, h, s);
      for (auto [a, b] : {std::pair{0.5, 1.5}, std::pair{1.0, 1.0}, std::pair{1.5, 0.5}}) {
        const auto rep = stroock_varopoulos_check(gauss, a, b, h, s);
        double lhs = 0.0, rhs = 0.0;
        for (const auto& w : gauss.members) {
          std::vector<double> F(g.size()), G(g.size()), A(g.size());
          for (std::size_t i = 0; i < g.size(); ++i) {
            const double v = w.values[i];
            F[i] = std::copysign(std::pow(std::abs(v), a), v);
            G[i] = std::copysign(std::pow(std::abs(v), b), v);
            A[i] = std::abs(v);
          }
          const auto PF = oracle::convolve(g, p, F), PA = oracle::convolve(g, p, A);
          for (std::size_t i = 0; i < g.size(); ++i) {
            lhs += (PF[i] - F[i]) * G[i] / (g.size() * gauss.size());
            rhs += a * b * (PA[i] - A[i]) * A[i] / (g.size() * gauss.size());
          }
        }
        CHECK(rep.lhs == doctest::Approx(lhs).epsilon(1e-11));
        CHECK(rep.rhs == doctest::Approx(rhs).epsilon(1e-11));
        CHECK(rep.slack == doctest::Approx(rhs - lhs).epsilon(1e-9).scale(std::abs(rhs)));
      }
    }
  }
}

TEST_CASE("Stroock-Varopoulos properties") {
  const Grid g(1, 64, 2.0 * pi);
  auto ens = sample_ensemble(gaussian_bump_measure(g, 4.0, 1.0), 16, 1000, 0);
  const auto r = stroock_varopoulos_check(ens, 0.5, 1.5, 0.1, 0.75);
  CHECK(r.holds());

  Ensemble pos = ens;
  for (auto& u : pos.members)
    for (double& v : u.values) v = std::abs(v);
  const auto eq = stroock_varopoulos_check(pos, 1.0, 1.0, 0.1, 0.75);
  CHECK(std::abs(eq.slack) <= 3.0 * eq.std_error);
  for (double a : {0.5, 0.8, 1.3}) CHECK(stroock_varopoulos_check(pos, a, 2.0 - a, 0.2, 0.9).slack >= -3.0 * eq.std_error);
  const auto flat = stroock_varopoulos_check(constant_ensemble(g, 0.7, 3), 0.5, 1.5, 0.2, 0.9);
  CHECK(std::abs(flat.slack) <= 1e-14);

  CHECK_THROWS_AS(stroock_varopoulos_check(ens, 0.5, 1.0, 0.1, 0.75), ConfigError);
  CHECK_THROWS_AS(stroock_varopoulos_check(ens, 0.5, 1.5, 0.0, 0.75), ConfigError);
}

TEST_CASE("estimator stderr decays like N^{-1/2}") {
  const Grid g(1, 32, 2.0 * pi);
  const auto m = gaussian_bump_measure(g, 2.0, 1.0);
  const auto small = moment(sample_ensemble(m, 20, 500, 0), 4.0);
  const auto large = moment(sample_ensemble(m, 21, 8000, 0), 4.0);
  const double slope = -std::log(large.std_error / small.std_error) / std::log(16.0);
  CHECK(slope >= 0.4);
  CHECK(slope <= 0.6);
}

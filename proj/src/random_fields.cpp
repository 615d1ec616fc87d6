#include "fracconv/random_fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "fracconv/error.hpp"
#include "fracconv/parallel.hpp"
#include "fracconv/rng.hpp"
#include "fracconv/spectral.hpp"

namespace fracconv {

namespace {

// Integer shell label |m|^2 in mode-index units.
long shell_of(const Grid& g, std::size_t idx) {
  auto [i, j] = g.unflatten(idx);
  long a = g.signed_index(i);
  long b = g.dim() == 2 ? g.signed_index(j) : 0;
  return a * a + b * b;
}

SpectralMeasure shaped_measure(const Grid& grid, double mass, double mean, const std::string& family,
                               const std::function<double(double)>& shape) {
  if (!(mass >= 0.0) || !std::isfinite(mass)) throw ConfigError(family + ": mass must be >= 0");
  SpectralMeasure m{grid, std::vector<double>(grid.size(), 0.0), mean, true, family};
  for (std::size_t idx = 1; idx < grid.size(); ++idx) m.weights[idx] = shape(grid.k_squared(idx));
  const double total = pairwise_sum(m.weights);
  if (!(total > 0.0)) throw ConfigError(family + ": shape has no resolved mass on this grid");
  for (double& w : m.weights) w *= mass / total;
  return m;
}

std::size_t full_index_of_half(const Grid& g, std::size_t h) {
  if (g.dim() == 1) return h;
  const std::size_t hn = static_cast<std::size_t>(g.half_n());
  return g.flatten(static_cast<int>(h / hn), static_cast<int>(h % hn));
}

double floor_stderr(double se, double scale, std::size_t count) {
  const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * scale / std::sqrt(static_cast<double>(count));
  return std::max(se, roundoff);
}

}  // namespace

double SpectralMeasure::total_mass() const { return pairwise_sum(weights); }

void SpectralMeasure::validate() const {
  if (weights.size() != grid.size()) throw ConfigError("spectral measure: weight count does not match grid");
  if (!std::isfinite(mean)) throw ConfigError("spectral measure: mean must be finite");
  for (std::size_t idx = 0; idx < weights.size(); ++idx) {
    const double w = weights[idx];
    if (!std::isfinite(w) || w < 0.0)
      throw ConfigError("spectral measure: weight at mode " + std::to_string(idx) + " is negative or non-finite");
    const double wm = weights[grid.mirror(idx)];
    if (std::abs(w - wm) > 1e-14 * std::max(w, wm))
      throw ConfigError("spectral measure: weights are not symmetric under k -> -k at mode " + std::to_string(idx));
  }
  if (isotropic) {
    std::map<long, double> shells;
    for (std::size_t idx = 0; idx < weights.size(); ++idx) {
      if (grid.is_nyquist(idx)) continue;
      auto [it, fresh] = shells.emplace(shell_of(grid, idx), weights[idx]);
      if (!fresh && std::abs(it->second - weights[idx]) > 1e-12 * std::max(it->second, weights[idx]))
        throw ConfigError("spectral measure: isotropy flag set but weights differ within a shell");
    }
  }
}

SpectralMeasure two_mode_measure(const Grid& grid, Offset mode, double mass, double mean) {
  if (!(mass >= 0.0) || !std::isfinite(mass)) throw ConfigError("two-mode: mass must be >= 0");
  const std::size_t idx = grid.flatten(mode[0], mode[1]);
  if (idx == 0) throw ConfigError("two-mode: the zero mode is reserved for the mean");
  SpectralMeasure m{grid, std::vector<double>(grid.size(), 0.0), mean, false, "two-mode"};
  const std::size_t mir = grid.mirror(idx);
  if (mir == idx) {
    m.weights[idx] = mass;
  } else {
    m.weights[idx] = 0.5 * mass;
    m.weights[mir] = 0.5 * mass;
  }
  return m;
}

SpectralMeasure gaussian_bump_measure(const Grid& grid, double width, double mass, double mean) {
  if (!(width > 0.0)) throw ConfigError("gaussian-bump: width must be > 0");
  return shaped_measure(grid, mass, mean, "gaussian-bump",
                        [width](double k2) { return std::exp(-k2 / (2.0 * width * width)); });
}

SpectralMeasure power_law_measure(const Grid& grid, double nu, double mass, double mean) {
  if (!(nu > 0.0)) throw ConfigError("power-law: exponent must be > 0");
  return shaped_measure(grid, mass, mean, "power-law", [nu](double k2) { return std::pow(1.0 + k2, -nu); });
}

SpectralNoise draw_noise(const SpectralMeasure& measure, std::uint64_t seed) {
  measure.validate();
  const Grid& g = measure.grid;
  SpectralNoise noise{g, std::vector<cplx>(g.size()), seed, 0};
  const CounterRng rng(seed);
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const std::size_t mir = g.mirror(idx);
    const double w = measure.weights[idx];
    if (mir == idx) {
      noise.coeff[idx] = cplx(std::sqrt(w) * rng.normal(idx), 0.0);
    } else if (idx < mir) {
      auto [a, b] = rng.normal_pair(idx);
      const double amp = std::sqrt(0.5 * w);
      noise.coeff[idx] = cplx(amp * a, amp * b);
      noise.coeff[mir] = std::conj(noise.coeff[idx]);
    }
  }
  noise.counter = 2 * g.size();
  return noise;
}

FieldRealization sample_field(const SpectralMeasure& measure, std::uint64_t seed) {
  const SpectralNoise noise = draw_noise(measure, seed);
  const Grid& g = measure.grid;
  std::vector<cplx> half(g.half_size());
  for (std::size_t h = 0; h < half.size(); ++h) half[h] = noise.coeff[full_index_of_half(g, h)];
  FieldRealization u(g, 0.0);
  Transform::of(g).inverse(half, u.values);
  for (double& v : u.values) v += measure.mean;
  return u;
}

void Ensemble::validate() const {
  if (members.empty()) throw ConfigError("ensemble is empty");
  for (const auto& m : members) {
    if (!(m.grid == members.front().grid)) throw ConfigError("ensemble members do not share a grid");
    if (m.values.size() != m.grid.size()) throw ConfigError("ensemble member has the wrong number of values");
  }
}

Ensemble sample_ensemble(const SpectralMeasure& measure, std::uint64_t master_seed, std::size_t count, int workers) {
  if (count == 0) throw ConfigError("ensemble size must be >= 1");
  measure.validate();
  Ensemble ens;
  ens.seeds.resize(count);
  for (std::size_t i = 0; i < count; ++i) ens.seeds[i] = member_seed(master_seed, i);
  ens.members = parallel_map<FieldRealization>(count, workers, [&](std::size_t i) {
    return sample_field(measure, ens.seeds[i]);
  });
  return ens;
}

double covariance_from_measure(const SpectralMeasure& measure, Offset lag) {
  const Grid& g = measure.grid;
  const double yx = lag[0] * g.dx();
  const double yy = g.dim() == 2 ? lag[1] * g.dx() : 0.0;
  std::vector<double> terms(g.size());
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    auto [i, j] = g.unflatten(idx);
    const double phase = g.wavenumber(i) * yx + (g.dim() == 2 ? g.wavenumber(j) * yy : 0.0);
    terms[idx] = measure.weights[idx] * std::cos(phase);
  }
  return pairwise_sum(terms);
}

std::vector<CovarianceEstimate> estimate_covariance(const Ensemble& ens, std::span<const Offset> lags) {
  ens.validate();
  const Grid& g = ens.grid();
  for (const auto& lag : lags) {
    if (std::abs(lag[0]) >= g.n() || std::abs(lag[1]) >= g.n() || (g.dim() == 1 && lag[1] != 0))
      throw ConfigError("estimate_covariance: lag (" + std::to_string(lag[0]) + ", " + std::to_string(lag[1]) +
                        ") lies outside the grid");
  }
  const std::size_t n = ens.size();
  std::vector<double> means(n);
  for (std::size_t i = 0; i < n; ++i) means[i] = ens.members[i].mean();
  const double m = mean_of(means);

  std::vector<CovarianceEstimate> out;
  std::vector<double> per_member(n), prod(g.size());
  for (const auto& lag : lags) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& u = ens.members[i].values;
      for (std::size_t x = 0; x < g.size(); ++x) {
        auto [a, b] = g.unflatten(x);
        prod[x] = u[x] * u[g.flatten(a + lag[0], b + lag[1])];
      }
      per_member[i] = pairwise_sum(prod) / static_cast<double>(g.size()) - m * m;
    }
    const Estimate e = mean_and_stderr(per_member);
    out.push_back({lag, e.value, e.std_error});
  }
  return out;
}

SpectrumEstimate estimate_spectrum(const Ensemble& ens) {
  ens.validate();
  const Grid& g = ens.grid();
  const auto& tr = Transform::of(g);
  const std::size_t n = ens.size();
  std::vector<double> means(n);
  for (std::size_t i = 0; i < n; ++i) means[i] = ens.members[i].mean();
  const double m = mean_of(means);

  // Welford accumulation in member order keeps the result reproducible.
  std::vector<double> avg(g.half_size(), 0.0), m2(g.half_size(), 0.0);
  std::vector<cplx> half(g.half_size());
  for (std::size_t i = 0; i < n; ++i) {
    tr.forward(ens.members[i].values, half);
    half[0] -= m;
    for (std::size_t h = 0; h < half.size(); ++h) {
      const double x = std::norm(half[h]);
      const double delta = x - avg[h];
      avg[h] += delta / static_cast<double>(i + 1);
      m2[h] += delta * (x - avg[h]);
    }
  }
  SpectrumEstimate est{SpectralMeasure{g, std::vector<double>(g.size(), 0.0), m, false, "empirical"},
                       std::vector<double>(g.size(), 0.0)};
  for (std::size_t h = 0; h < half.size(); ++h) {
    const std::size_t idx = full_index_of_half(g, h);
    const std::size_t mir = g.mirror(idx);
    const double se = n > 1 ? std::sqrt(m2[h] / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    est.measure.weights[idx] = est.measure.weights[mir] = avg[h];
    est.std_error[idx] = est.std_error[mir] = se;
  }
  return est;
}

double sobolev_norm(const SpectralMeasure& measure, double alpha) {
  if (!(alpha >= 0.0)) throw ConfigError("sobolev_norm: alpha must be >= 0");
  const Grid& g = measure.grid;
  std::vector<double> terms(g.size());
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const double k2 = g.k_squared(idx);
    const double power = alpha == 0.0 ? 1.0 : (k2 == 0.0 ? 0.0 : std::pow(k2, alpha));
    terms[idx] = (1.0 + power) * measure.weights[idx];
  }
  return std::sqrt(pairwise_sum(terms));
}

OrthogonalityStat directional_orthogonality_stat(const Ensemble& ens, const ScalarFn& f, const ScalarFn& g,
                                                 std::span<const double> z) {
  ens.validate();
  const Grid& grid = ens.grid();
  const std::size_t n = ens.size();
  std::vector<double> per_member(n), scale(n);
  std::vector<double> prod(grid.size()), sq_a(grid.size()), sq_b(grid.size());
  FieldRealization fu(grid);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& u = ens.members[i];
    for (std::size_t x = 0; x < grid.size(); ++x) fu.values[x] = f(u.values[x]);
    const FieldRealization du = directional_derivative(fu, z);
    for (std::size_t x = 0; x < grid.size(); ++x) {
      const double gx = g(u.values[x]);
      prod[x] = du.values[x] * gx;
      sq_a[x] = du.values[x] * du.values[x];
      sq_b[x] = gx * gx;
    }
    const double size = static_cast<double>(grid.size());
    per_member[i] = pairwise_sum(prod) / size;
    scale[i] = std::sqrt(pairwise_sum(sq_a) / size * pairwise_sum(sq_b) / size);
  }
  const Estimate e = mean_and_stderr(per_member);
  OrthogonalityStat stat{e.value, e.std_error, 0.0};
  const double denom = floor_stderr(e.std_error, mean_of(scale), n);
  stat.z_score = denom > 0.0 ? e.value / denom : 0.0;
  return stat;
}

StationarityReport stationarity_test(const Ensemble& ens, std::span<const Offset> shifts, Offset reference) {
  ens.validate();
  const Grid& g = ens.grid();
  const std::size_t n = ens.size();
  StationarityReport report;
  std::vector<double> diff(n), scale(n);
  auto value_at = [&](std::size_t member, int a, int b) {
    return ens.members[member].values[g.flatten(reference[0] + a, reference[1] + b)];
  };
  for (const auto& shift : shifts) {
    for (int moment = 1; moment <= 2; ++moment) {
      for (bool reflection : {false, true}) {
        for (std::size_t i = 0; i < n; ++i) {
          const double ahead = std::pow(value_at(i, shift[0], shift[1]), moment);
          const double base = reflection ? std::pow(value_at(i, -shift[0], -shift[1]), moment)
                                         : std::pow(value_at(i, 0, 0), moment);
          diff[i] = ahead - base;
          scale[i] = std::abs(ahead) + std::abs(base);
        }
        const Estimate e = mean_and_stderr(diff);
        const double denom = floor_stderr(e.std_error, mean_of(scale), n);
        const double d = e.value == 0.0 ? 0.0 : std::abs(e.value) / denom;
        report.entries.push_back({shift, moment, reflection, d});
        report.max_discrepancy = std::max(report.max_discrepancy, d);
      }
    }
  }
  return report;
}

}  // namespace fracconv

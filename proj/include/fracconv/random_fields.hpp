#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fracconv/fft.hpp"
#include "fracconv/grid.hpp"
#include "fracconv/statistics.hpp"

namespace fracconv {

using Offset = std::array<int, 2>;

// Spectral measure of a homogeneous field: one nonnegative weight per dual
// grid point (FFT ordering) plus the deterministic mean. total_mass() is the
// variance of the field at every point.
struct SpectralMeasure {
  Grid grid;
  std::vector<double> weights;
  double mean = 0.0;
  bool isotropic = false;
  std::string family = "custom";

  double total_mass() const;
  // Throws ConfigError on negative, non-finite, asymmetric or (when the
  // isotropy flag is set) shell-inconsistent weights.
  void validate() const;
};

// Built-in families. The zero mode carries no mass in any of them: it is
// reserved for the deterministic mean.
SpectralMeasure two_mode_measure(const Grid& grid, Offset mode, double mass, double mean = 0.0);
// exp(-|k|^2 / (2 width^2)).
SpectralMeasure gaussian_bump_measure(const Grid& grid, double width, double mass, double mean = 0.0);
// (1 + |k|^2)^{-nu}, every resolved mode up to Nyquist.
SpectralMeasure power_law_measure(const Grid& grid, double nu, double mass, double mean = 0.0);

// Complex Gaussian coefficients on the full dual grid with
// coeff(-k) == conj(coeff(k)) and E|coeff(k)|^2 == weight(k).
struct SpectralNoise {
  Grid grid;
  std::vector<cplx> coeff;
  std::uint64_t seed = 0;
  std::uint64_t counter = 0;  // number of counter slots consumed
};

SpectralNoise draw_noise(const SpectralMeasure& measure, std::uint64_t seed);

// u(x) = mean + sum_k coeff_k exp(i k.x); real by construction, and a pure
// function of (measure, seed).
FieldRealization sample_field(const SpectralMeasure& measure, std::uint64_t seed);

struct Ensemble {
  std::vector<FieldRealization> members;
  double time = 0.0;
  std::vector<std::uint64_t> seeds;

  const Grid& grid() const { return members.front().grid; }
  std::size_t size() const { return members.size(); }
  void validate() const;
};

Ensemble sample_ensemble(const SpectralMeasure& measure, std::uint64_t master_seed, std::size_t count, int workers = 0);

// B(y) = sum_k weight_k cos(k.y), the covariance implied by a measure.
double covariance_from_measure(const SpectralMeasure& measure, Offset lag);

struct CovarianceEstimate {
  Offset lag{};
  double value = 0.0;
  double std_error = 0.0;
};

// Average over members and x of u(x) u(x+y), minus the squared ensemble mean.
std::vector<CovarianceEstimate> estimate_covariance(const Ensemble& ens, std::span<const Offset> lags);

struct SpectrumEstimate {
  SpectralMeasure measure;       // mean = ensemble mean
  std::vector<double> std_error;  // per dual grid point
};

// Averaged periodogram; total mass equals the empirical variance.
SpectrumEstimate estimate_spectrum(const Ensemble& ens);

// (sum_k (1 + |k|^{2 alpha}) weight_k)^{1/2}.
double sobolev_norm(const SpectralMeasure& measure, double alpha);

struct OrthogonalityStat {
  double estimate = 0.0;
  double std_error = 0.0;
  double z_score = 0.0;
};

using ScalarFn = std::function<double(double)>;

// Monte Carlo estimate of E[(grad_z f(u))(x) g(u(x))], averaged over x and
// members. The z-score divides by max(stderr, roundoff floor) so that
// estimates sitting at machine precision do not produce spurious scores.
OrthogonalityStat directional_orthogonality_stat(const Ensemble& ens, const ScalarFn& f, const ScalarFn& g,
                                                 std::span<const double> z);
inline OrthogonalityStat directional_orthogonality_stat(const Ensemble& ens, const ScalarFn& g,
                                                        std::span<const double> z) {
  return directional_orthogonality_stat(ens, [](double u) { return u; }, g, z);
}

struct StationarityEntry {
  Offset shift{};
  int moment = 1;
  bool reflection = false;
  double discrepancy = 0.0;  // in units of stderr
};

struct StationarityReport {
  std::vector<StationarityEntry> entries;
  double max_discrepancy = 0.0;
  bool stationary(double threshold = 3.0) const { return max_discrepancy <= threshold; }
};

// Compares first and second moments at x0 + y against x0 (translation) and
// x0 + y against x0 - y (reflection) for each shift y.
StationarityReport stationarity_test(const Ensemble& ens, std::span<const Offset> shifts, Offset reference = {0, 0});

}  // namespace fracconv

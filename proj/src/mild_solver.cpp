#include "fracconv/mild_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "fracconv/error.hpp"
#include "fracconv/fft.hpp"
#include "fracconv/spectral.hpp"

namespace fracconv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// (1 - e^{-x}) / x
double phi1(double x) { return x < 1e-12 ? 1.0 - 0.5 * x : -std::expm1(-x) / x; }

// int_0^1 v e^{-x v} dv = (1 - e^{-x}(1 + x)) / x^2; the closed form cancels
// badly for small x, where the series sum (-x)^n / (n! (n+2)) is used.
double psi(double x) {
  if (x < 0.1) {
    double term = 1.0, sum = 0.5;
    for (int n = 1; n < 14; ++n) {
      term *= -x / n;
      sum += term / (n + 2);
    }
    return sum;
  }
  return (1.0 - std::exp(-x) * (1.0 + x)) / (x * x);
}

double rms(std::span<const double> a, std::span<const double> b, std::vector<double>& scratch) {
  scratch.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) scratch[i] = (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(pairwise_sum(scratch) / static_cast<double>(a.size()));
}

double spatial_moment_root(std::span<const double> u, double p, std::vector<double>& scratch) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : u) m = std::max(m, std::abs(v));
    return m;
  }
  scratch.resize(u.size());
  if (p == 2.0) {
    for (std::size_t i = 0; i < u.size(); ++i) scratch[i] = u[i] * u[i];
    return std::sqrt(pairwise_sum(scratch) / static_cast<double>(u.size()));
  }
  for (std::size_t i = 0; i < u.size(); ++i) scratch[i] = std::pow(std::abs(u[i]), p);
  return std::pow(pairwise_sum(scratch) / static_cast<double>(u.size()), 1.0 / p);
}

void require_moment_order(double p) {
  if (!(p >= 2.0)) throw ConfigError("moment order p must be >= 2 or infinity");
}

// Product-integration coefficients of one subinterval, per half-spectrum mode.
struct IntervalCoeffs {
  double h = 0.0;
  std::vector<double> decay;  // e^{-h lambda}
  std::vector<double> left;   // weight of f(u(t_j))
  std::vector<double> right;  // weight of f(u(t_{j+1}))
};

// Precomputed operator data for one (grid, nonlinearity, config).
class DuhamelEngine {
 public:
  DuhamelEngine(const Grid& grid, const NonlinearitySpec& spec, const SolverConfig& config)
      : grid_(grid), tr_(Transform::of(grid)), spec_(spec), times_(config.time_grid) {
    const auto modes = half_modes(grid);
    const std::size_t hs = modes.size();
    const auto z = normalize_direction(config.z, grid.dim());
    const bool dealias = config.dealias_for(spec);
    const int n = grid.n();
    lambda_.resize(hs);
    mult_.resize(hs);
    for (std::size_t k = 0; k < hs; ++k) {
      const auto& m = modes[k];
      lambda_[k] = m.k2 == 0.0 ? 0.0 : std::pow(m.k2, config.s);
      const double zk = z[0] * m.kx_odd + (grid.dim() == 2 ? z[1] * m.ky_odd : 0.0);
      const bool kept = !dealias || (3 * std::abs(m.ix) < n && 3 * std::abs(m.iy) < n);
      mult_[k] = kept ? cplx(0.0, zk) : cplx(0.0, 0.0);
    }
    lin_.resize(times_.size(), std::vector<double>(hs));
    for (std::size_t j = 0; j < times_.size(); ++j)
      for (std::size_t k = 0; k < hs; ++k) lin_[j][k] = std::exp(-times_[j] * lambda_[k]);
    interval_.resize(times_.size() > 0 ? times_.size() - 1 : 0);
    for (std::size_t j = 0; j + 1 < times_.size(); ++j) {
      const double h = times_[j + 1] - times_[j];
      auto it = std::find_if(sets_.begin(), sets_.end(),
                             [h](const IntervalCoeffs& c) { return std::abs(c.h - h) <= 1e-13 * h; });
      if (it == sets_.end()) {
        IntervalCoeffs c{h, std::vector<double>(hs), std::vector<double>(hs), std::vector<double>(hs)};
        for (std::size_t k = 0; k < hs; ++k) {
          const double x = h * lambda_[k];
          const double p1 = phi1(x), ps = psi(x);
          c.decay[k] = std::exp(-x);
          c.left[k] = h * ps;
          c.right[k] = h * (p1 - ps);
        }
        sets_.push_back(std::move(c));
        it = sets_.end() - 1;
      }
      interval_[j] = static_cast<std::size_t>(it - sets_.begin());
    }
    u0_hat_.resize(hs);
    g_.resize(grid.size());
    ghat_prev_.resize(hs);
    ghat_cur_.resize(hs);
    integral_.resize(hs);
    work_.resize(hs);
  }

  std::size_t nodes() const { return times_.size(); }

  void set_initial(std::span<const double> u0) { tr_.forward(u0, u0_hat_); }

  void linear(std::vector<std::vector<double>>& out) {
    out.resize(nodes());
    for (std::size_t j = 0; j < nodes(); ++j) {
      for (std::size_t k = 0; k < work_.size(); ++k) work_[k] = lin_[j][k] * u0_hat_[k];
      out[j].resize(grid_.size());
      tr_.inverse(work_, out[j]);
    }
  }

  // out = F(old).
  void apply(const std::vector<std::vector<double>>& old, std::vector<std::vector<double>>& out) {
    out.resize(nodes());
    for (std::size_t j = 0; j < nodes(); ++j) {
      flux_hat(old[j], ghat_cur_);
      if (j == 0) {
        std::fill(integral_.begin(), integral_.end(), cplx(0.0));
      } else {
        const auto& c = sets_[interval_[j - 1]];
        for (std::size_t k = 0; k < integral_.size(); ++k)
          integral_[k] = c.decay[k] * integral_[k] + c.left[k] * ghat_prev_[k] + c.right[k] * ghat_cur_[k];
      }
      for (std::size_t k = 0; k < work_.size(); ++k) work_[k] = lin_[j][k] * u0_hat_[k] + mult_[k] * integral_[k];
      out[j].resize(grid_.size());
      tr_.inverse(work_, out[j]);
      if (!finite(out[j])) throw NumericError("Duhamel operator output is not finite");
      std::swap(ghat_prev_, ghat_cur_);
    }
  }

  // One marching step from (u_j, ghat_j) to u_{j+1} given a guess for ghat_{j+1}.
  void step(std::size_t j, std::span<const cplx> u_hat_j, std::span<const cplx> ghat_j, std::span<const cplx> ghat_next,
            std::span<cplx> u_hat_next) const {
    const auto& c = sets_[interval_[j]];
    for (std::size_t k = 0; k < u_hat_next.size(); ++k)
      u_hat_next[k] = c.decay[k] * u_hat_j[k] + mult_[k] * (c.left[k] * ghat_j[k] + c.right[k] * ghat_next[k]);
  }

  void flux_hat(std::span<const double> u, std::span<cplx> out) {
    for (std::size_t x = 0; x < g_.size(); ++x) g_[x] = spec_(u[x]);
    if (!finite(g_)) throw NumericError("nonlinearity " + spec_.name() + " produced non-finite values");
    tr_.forward(g_, out);
  }

  const Transform& transform() const { return tr_; }
  std::span<const cplx> u0_hat() const { return u0_hat_; }

 private:
  static bool finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  }

  Grid grid_;
  const Transform& tr_;
  NonlinearitySpec spec_;
  std::vector<double> times_;
  std::vector<double> lambda_;
  std::vector<cplx> mult_;
  std::vector<std::vector<double>> lin_;
  std::vector<IntervalCoeffs> sets_;
  std::vector<std::size_t> interval_;
  std::vector<cplx> u0_hat_;
  std::vector<double> g_;
  std::vector<cplx> ghat_prev_, ghat_cur_, integral_, work_;
};

Trajectory make_trajectory(const Grid& grid, const std::vector<double>& times,
                           std::vector<std::vector<double>>&& values) {
  Trajectory traj;
  traj.times = times;
  traj.states.reserve(times.size());
  for (std::size_t j = 0; j < times.size(); ++j) traj.states.emplace_back(grid, std::move(values[j]), times[j]);
  return traj;
}

double bielecki_of_values(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                          const std::vector<double>& times, double K, std::vector<double>& scratch) {
  double sup = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) sup = std::max(sup, std::exp(-times[j] * K) * rms(a[j], b[j], scratch));
  return sup;
}

void check_u0(const FieldRealization& u0, const SolverConfig& config) {
  config.validate(u0.grid.dim());
  if (u0.values.size() != u0.grid.size()) throw ConfigError("initial field has the wrong number of values");
  if (!u0.all_finite()) throw NumericError("initial field has non-finite values");
}

}  // namespace

std::vector<double> SolverConfig::uniform_time_grid(double t_end, int steps) {
  if (!(t_end > 0.0) || steps < 1) throw ConfigError("time grid needs t_end > 0 and at least one step");
  std::vector<double> t(static_cast<std::size_t>(steps) + 1);
  for (int j = 0; j <= steps; ++j) t[j] = t_end * j / steps;
  return t;
}

void SolverConfig::validate(int dim) const {
  if (!(s > 0.5 && s <= 1.0)) throw ConfigError("solver exponent s must lie in (1/2, 1], got " + std::to_string(s));
  normalize_direction(z, dim);
  if (time_grid.size() < 2) throw ConfigError("time grid needs at least two nodes");
  if (time_grid.front() != 0.0) throw ConfigError("time grid must start at 0");
  for (std::size_t j = 1; j < time_grid.size(); ++j)
    if (!(time_grid[j] > time_grid[j - 1]) || !std::isfinite(time_grid[j]))
      throw ConfigError("time grid must be strictly increasing");
  if (!(tol > 0.0)) throw ConfigError("tolerance must be > 0");
  if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (!(K >= 0.0) || !std::isfinite(K)) throw ConfigError("Bielecki weight K must be >= 0");
}

bool SolverConfig::dealias_for(const NonlinearitySpec& spec) const {
  switch (dealias) {
    case Dealias::on:
      return true;
    case Dealias::off:
      return false;
    case Dealias::automatic:
      return spec.polynomial_class();
  }
  return false;
}

double PicardDiagnostics::max_ratio() const {
  double m = 0.0;
  for (double r : ratios) m = std::max(m, r);
  return m;
}

double contraction_bound(double s, double L, double K) {
  if (!(s > 0.5 && s <= 1.0)) throw ConfigError("contraction_bound needs s in (1/2, 1]");
  if (!(K > 0.0)) throw ConfigError("contraction_bound needs K > 0");
  if (!(L >= 0.0)) throw ConfigError("contraction_bound needs L >= 0");
  if (L == 0.0) return 0.0;
  return gradient_constant(s) * L * std::pow(K, -1.0 + 1.0 / (2.0 * s)) * std::tgamma(1.0 - 1.0 / (2.0 * s));
}

double kernel_contraction_bound(double s, double L, double K) {
  return contraction_bound(s, L, K) * kernel_gradient_constant(s) / gradient_constant(s);
}

double minimal_K(double s, double L) {
  if (!(s > 0.5 && s <= 1.0)) throw ConfigError("minimal_K needs s in (1/2, 1]");
  if (!(L > 0.0)) throw ConfigError("minimal_K needs L > 0");
  const double a = gradient_constant(s) * L * std::tgamma(1.0 - 1.0 / (2.0 * s));
  const double exponent = 2.0 * s / (2.0 * s - 1.0);
  double k0 = std::pow(a, exponent);
  if (!std::isfinite(k0) || k0 == 0.0) {
    // Bisection on log K for rho(K) = 1 when the power over/underflows.
    double lo = -700.0, hi = 700.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double log_rho = std::log(a) - (1.0 - 1.0 / (2.0 * s)) * mid;
      (log_rho > 0.0 ? lo : hi) = mid;
    }
    k0 = std::exp(0.5 * (lo + hi));
    if (!std::isfinite(k0)) throw NumericError("minimal_K: threshold exceeds the double range");
  }
  return k0;
}

double bielecki_norm(const Trajectory& traj, double K, double p) {
  require_moment_order(p);
  std::vector<double> scratch;
  double sup = 0.0;
  for (std::size_t j = 0; j < traj.size(); ++j)
    sup = std::max(sup, std::exp(-traj.times[j] * K) * spatial_moment_root(traj.states[j].values, p, scratch));
  return sup;
}

double bielecki_norm(std::span<const Trajectory> trajs, double K, double p) {
  require_moment_order(p);
  if (trajs.empty()) throw ConfigError("bielecki_norm: empty ensemble");
  std::vector<double> scratch, per_member(trajs.size());
  double sup = 0.0;
  for (std::size_t j = 0; j < trajs.front().size(); ++j) {
    double value;
    if (std::isinf(p)) {
      value = 0.0;
      for (const auto& t : trajs) value = std::max(value, spatial_moment_root(t.states[j].values, p, scratch));
    } else {
      for (std::size_t i = 0; i < trajs.size(); ++i)
        per_member[i] = std::pow(spatial_moment_root(trajs[i].states[j].values, p, scratch), p);
      value = std::pow(pairwise_sum(per_member) / static_cast<double>(trajs.size()), 1.0 / p);
    }
    sup = std::max(sup, std::exp(-trajs.front().times[j] * K) * value);
  }
  return sup;
}

Trajectory difference(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) throw ConfigError("trajectories have different time grids");
  Trajectory d = a;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (!(a.states[j].grid == b.states[j].grid)) throw ConfigError("trajectories live on different grids");
    for (std::size_t x = 0; x < d.states[j].values.size(); ++x) d.states[j].values[x] -= b.states[j].values[x];
  }
  return d;
}

Trajectory linear_solution(const FieldRealization& u0, const SolverConfig& config) {
  check_u0(u0, config);
  DuhamelEngine engine(u0.grid, NonlinearitySpec::zero(), config);
  engine.set_initial(u0.values);
  std::vector<std::vector<double>> values;
  engine.linear(values);
  values.front() = u0.values;
  return make_trajectory(u0.grid, config.time_grid, std::move(values));
}

Trajectory duhamel_apply(const Trajectory& traj, const NonlinearitySpec& spec, const SolverConfig& config) {
  spec.validate();
  if (traj.states.empty()) throw ConfigError("duhamel_apply: empty trajectory");
  const Grid& grid = traj.initial().grid;
  config.validate(grid.dim());
  if (traj.times.size() != config.time_grid.size() || traj.states.size() != traj.times.size())
    throw ConfigError("duhamel_apply: trajectory is not defined on the configured time grid");
  for (std::size_t j = 0; j < traj.times.size(); ++j) {
    if (std::abs(traj.times[j] - config.time_grid[j]) > 1e-12 * (1.0 + config.time_grid[j]))
      throw ConfigError("duhamel_apply: trajectory times differ from the configured time grid");
    if (!(traj.states[j].grid == grid)) throw ConfigError("duhamel_apply: states live on different grids");
  }
  DuhamelEngine engine(grid, spec, config);
  engine.set_initial(traj.initial().values);
  std::vector<std::vector<double>> old(traj.size()), out;
  for (std::size_t j = 0; j < traj.size(); ++j) old[j] = traj.states[j].values;
  engine.apply(old, out);
  return make_trajectory(grid, config.time_grid, std::move(out));
}

std::pair<Trajectory, PicardDiagnostics> picard_solve(const FieldRealization& u0, const NonlinearitySpec& spec,
                                                      const SolverConfig& config) {
  spec.validate();
  check_u0(u0, config);
  if (!spec.lipschitz_class())
    throw ConfigError("picard_solve: " + spec.name() + " is not globally Lipschitz; set a cut-off level");

  PicardDiagnostics diag;
  const double L = spec.effective_lipschitz();
  diag.bound = config.K > 0.0 ? contraction_bound(config.s, L, config.K) : kInf;
  diag.kernel_bound = config.K > 0.0 ? kernel_contraction_bound(config.s, L, config.K) : kInf;

  DuhamelEngine engine(u0.grid, spec, config);
  engine.set_initial(u0.values);
  std::vector<std::vector<double>> current, next;
  engine.linear(current);
  current.front() = u0.values;
  std::vector<double> scratch;

  for (int m = 1; m <= config.max_iter; ++m) {
    engine.apply(current, next);
    const double res = bielecki_of_values(next, current, config.time_grid, config.K, scratch);
    if (!std::isfinite(res)) throw NumericError("picard_solve: residual is not finite");
    if (!diag.residuals.empty()) {
      const double prev = diag.residuals.back();
      diag.ratios.push_back(prev > 0.0 ? res / prev : 0.0);
    }
    diag.residuals.push_back(res);
    diag.iterations = m;
    std::swap(current, next);
    if (res <= config.tol) {
      diag.converged = true;
      break;
    }
  }
  if (!diag.converged && !diag.ratios.empty() && diag.ratios.back() >= 1.0) {
    std::ostringstream os;
    os << "picard_solve: no contraction after " << diag.iterations << " iterations (measured ratio "
       << diag.ratios.back() << ", bound rho(K) = " << diag.bound << "); increase K or shorten the horizon";
    throw NonContractionError(os.str(), diag.ratios.back(), diag.bound);
  }
  return {make_trajectory(u0.grid, config.time_grid, std::move(current)), diag};
}

Trajectory step_solve(const FieldRealization& u0, const NonlinearitySpec& spec, const SolverConfig& config) {
  spec.validate();
  check_u0(u0, config);
  if (!spec.lipschitz_class())
    throw ConfigError("step_solve: " + spec.name() + " is not globally Lipschitz; set a cut-off level");

  constexpr int kInnerSweeps = 5;
  const double inner_tol = 1e-2 * config.tol;
  const Grid& grid = u0.grid;
  const std::size_t hs = grid.half_size();
  DuhamelEngine engine(grid, spec, config);
  engine.set_initial(u0.values);
  const auto& tr = engine.transform();

  std::vector<std::vector<double>> values(engine.nodes());
  values[0] = u0.values;
  std::vector<cplx> u_hat(engine.u0_hat().begin(), engine.u0_hat().end());
  std::vector<cplx> g_hat(hs), g_prev(hs), g_next(hs), u_hat_next(hs);
  std::vector<double> trial(grid.size()), scratch;
  engine.flux_hat(values[0], g_hat);

  for (std::size_t j = 0; j + 1 < engine.nodes(); ++j) {
    // Linear extrapolation of the flux as the predictor.
    for (std::size_t k = 0; k < hs; ++k) g_next[k] = j == 0 ? g_hat[k] : 2.0 * g_hat[k] - g_prev[k];
    engine.step(j, u_hat, g_hat, g_next, u_hat_next);
    tr.inverse(u_hat_next, trial);
    double increment = kInf;
    double last_increment = kInf;
    int sweep = 0;
    for (; sweep < kInnerSweeps && increment > inner_tol; ++sweep) {
      engine.flux_hat(trial, g_next);
      engine.step(j, u_hat, g_hat, g_next, u_hat_next);
      values[j + 1].resize(grid.size());
      tr.inverse(u_hat_next, values[j + 1]);
      last_increment = increment;
      increment = rms(values[j + 1], trial, scratch);
      std::swap(values[j + 1], trial);
    }
    if (increment > inner_tol && increment >= last_increment) {
      std::ostringstream os;
      os << "step_solve: inner iteration diverges at t = " << config.time_grid[j + 1] << " (increment " << increment
         << " after " << last_increment << "); refine the time grid";
      throw StepSizeError(os.str());
    }
    values[j + 1] = trial;
    engine.flux_hat(values[j + 1], g_next);
    std::swap(g_prev, g_hat);
    std::swap(g_hat, g_next);
    u_hat = u_hat_next;
  }
  return make_trajectory(grid, config.time_grid, std::move(values));
}

bool ladder_is_cauchy(std::span<const double> levels, std::span<const LadderPair> pairs, std::string* warning) {
  std::map<double, double> largest;  // min level of a pair -> largest distance among such pairs
  double scale = 0.0;
  for (const auto& p : pairs) {
    const double key = std::min(levels[p.lo], levels[p.hi]);
    auto [it, fresh] = largest.emplace(key, p.distance);
    if (!fresh) it->second = std::max(it->second, p.distance);
    scale = std::max(scale, p.distance);
  }
  bool ok = true;
  std::ostringstream os;
  for (auto it = largest.begin(); it != largest.end() && std::next(it) != largest.end(); ++it) {
    const auto nx = std::next(it);
    if (nx->second > it->second + 1e-12 * scale) {
      ok = false;
      os << "distance " << nx->second << " at min level " << nx->first << " exceeds " << it->second
         << " at min level " << it->first << "; ";
    }
  }
  if (warning) *warning = os.str();
  return ok;
}

std::pair<Trajectory, LadderReport> solve_polynomial(const FieldRealization& u0, const NonlinearitySpec& spec,
                                                     const SolverConfig& config, std::span<const double> ladder) {
  spec.validate();
  if (!spec.polynomial_class()) throw ConfigError("solve_polynomial: nonlinearity must be of polynomial kind");
  if (ladder.empty()) throw ConfigError("solve_polynomial: empty cut-off ladder");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (!(ladder[i] > 0.0)) throw ConfigError("solve_polynomial: cut-off levels must be positive");
    if (i > 0 && !(ladder[i] > ladder[i - 1])) throw ConfigError("solve_polynomial: ladder must be increasing");
  }
  LadderReport report;
  report.levels.assign(ladder.begin(), ladder.end());
  std::vector<Trajectory> solutions;
  for (double level : ladder) {
    FieldRealization start = u0;
    for (double& v : start.values) v = cutoff(v, level);
    auto [traj, diag] = picard_solve(start, spec.with_cutoff(level), config);
    solutions.push_back(std::move(traj));
    report.diagnostics.push_back(std::move(diag));
  }
  std::vector<double> scratch;
  for (std::size_t a = 0; a < solutions.size(); ++a) {
    for (std::size_t b = a + 1; b < solutions.size(); ++b) {
      LadderPair pair{a, b, 0.0, std::vector<double>(solutions[a].size())};
      for (std::size_t j = 0; j < solutions[a].size(); ++j) {
        const double r = rms(solutions[a].states[j].values, solutions[b].states[j].values, scratch);
        pair.mean_square[j] = r * r;
        pair.distance = std::max(pair.distance, r);
      }
      report.pairs.push_back(std::move(pair));
    }
  }
  report.cauchy = ladder_is_cauchy(report.levels, report.pairs, &report.warning);
  return {std::move(solutions.back()), std::move(report)};
}

}  // namespace fracconv

#include "fracconv/ensemble_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fracconv/error.hpp"
#include "fracconv/fft.hpp"
#include "fracconv/spectral.hpp"

namespace fracconv {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_order(double p) {
  if (!(p >= 2.0)) throw ConfigError("moment order p must be >= 2 or infinity, got " + std::to_string(p));
}

double spatial_power_mean(std::span<const double> u, double p, std::vector<double>& scratch) {
  scratch.resize(u.size());
  if (p == 2.0) {
    for (std::size_t x = 0; x < u.size(); ++x) scratch[x] = u[x] * u[x];
  } else {
    for (std::size_t x = 0; x < u.size(); ++x) scratch[x] = std::pow(std::abs(u[x]), p);
  }
  return pairwise_sum(scratch) / static_cast<double>(u.size());
}

double spatial_product_mean(std::span<const double> u, std::span<const double> v, std::vector<double>& scratch) {
  scratch.resize(u.size());
  for (std::size_t x = 0; x < u.size(); ++x) scratch[x] = u[x] * v[x];
  return pairwise_sum(scratch) / static_cast<double>(u.size());
}

// Difference in stderr units; the floor keeps roundoff-level differences of
// (near) deterministic quantities from turning into large scores.
double z_units(double diff, double se, double scale, std::size_t n) {
  const double floor = 64.0 * kEps * std::abs(scale) / std::sqrt(static_cast<double>(std::max<std::size_t>(n, 1)));
  const double den = std::max(se, floor);
  if (den == 0.0) return diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  return diff / den;
}

// d/dt at node j: three-point formula inside, one-sided at the ends.
double derivative(std::span<const double> t, std::span<const double> f, std::size_t j) {
  const std::size_t m = t.size() - 1;
  if (j == 0) return (f[1] - f[0]) / (t[1] - t[0]);
  if (j == m) return (f[m] - f[m - 1]) / (t[m] - t[m - 1]);
  const double h1 = t[j] - t[j - 1], h2 = t[j + 1] - t[j];
  const double back = (f[j] - f[j - 1]) / h1, fwd = (f[j + 1] - f[j]) / h2;
  return (h2 * back + h1 * fwd) / (h1 + h2);
}

void check_members(std::span<const MemberSummary> members) {
  if (members.empty()) throw ConfigError("empty ensemble");
  const auto& t = members.front().times;
  for (const auto& m : members)
    if (m.times != t) throw ConfigError("ensemble members use different time grids");
}

void check_trajectories(std::span<const Trajectory> trajs) {
  if (trajs.empty()) throw ConfigError("empty ensemble");
  const auto& ref = trajs.front();
  for (const auto& tr : trajs) {
    if (tr.times != ref.times) throw ConfigError("trajectories use different time grids");
    if (tr.states.empty() || !(tr.initial().grid == ref.initial().grid))
      throw ConfigError("trajectories live on different grids");
  }
}

std::size_t order_index(const MemberSummary& m, double p) {
  for (std::size_t i = 0; i < m.orders.size(); ++i)
    if (m.orders[i] == p) return i;
  throw ConfigError("summaries do not contain the p = " + std::to_string(p) + " moment");
}

}  // namespace

Estimate moment(const Ensemble& ens, double p) {
  if (ens.members.empty()) throw ConfigError("moment: empty ensemble");
  if (std::isinf(p) && p > 0) {
    Estimate e;
    e.count = ens.size();
    for (const auto& m : ens.members) e.value = std::max(e.value, m.max_abs());
    return e;
  }
  require_order(p);
  std::vector<double> per(ens.size()), scratch;
  for (std::size_t i = 0; i < ens.size(); ++i) per[i] = spatial_power_mean(ens.members[i].values, p, scratch);
  return mean_and_stderr(per);
}

MemberSummary summarize(const Trajectory& traj, const SummaryRequest& request) {
  for (double p : request.orders) require_order(p);
  if (traj.states.empty()) throw ConfigError("summarize: empty trajectory");
  const Grid& grid = traj.initial().grid;
  const std::size_t nodes = traj.size();
  MemberSummary out;
  out.times = traj.times;
  out.orders = request.orders;
  out.moments.assign(request.orders.size(), std::vector<double>(nodes));
  out.mean.resize(nodes);
  out.dissipation.resize(nodes);
  out.covariance.assign(request.lags.size(), std::vector<double>(nodes));

  const auto modes = half_modes(grid);
  std::vector<double> weight(modes.size());
  for (std::size_t k = 0; k < modes.size(); ++k) weight[k] = modes[k].k2 == 0.0 ? 0.0 : std::pow(modes[k].k2, request.s);
  const auto& tr = Transform::of(grid);
  std::vector<cplx> half(grid.half_size());
  std::vector<double> scratch, shifted(grid.size());

  for (std::size_t j = 0; j < nodes; ++j) {
    const auto& u = traj.states[j].values;
    for (std::size_t o = 0; o < request.orders.size(); ++o)
      out.moments[o][j] = spatial_power_mean(u, request.orders[o], scratch);
    out.mean[j] = pairwise_sum(u) / static_cast<double>(u.size());
    tr.forward(u, half);
    out.dissipation[j] = weighted_energy(grid, half, weight);
    for (std::size_t l = 0; l < request.lags.size(); ++l) {
      const auto lag = request.lags[l];
      for (std::size_t x = 0; x < grid.size(); ++x) {
        const auto ij = grid.unflatten(x);
        shifted[x] = u[grid.dim() == 1 ? grid.flatten(grid.wrap(ij[0] + lag[0]))
                                       : grid.flatten(grid.wrap(ij[0] + lag[0]), grid.wrap(ij[1] + lag[1]))];
      }
      out.covariance[l][j] = spatial_product_mean(u, shifted, scratch);
    }
  }
  return out;
}

double MomentSeries::max_violation() const {
  double m = 0.0;
  for (double v : step_violation) m = std::max(m, v);
  for (double v : initial_violation) m = std::max(m, v);
  return m;
}

MomentSeries moment_series(std::span<const MemberSummary> members, double p) {
  check_members(members);
  const std::size_t o = order_index(members.front(), p);
  MomentSeries out;
  out.p = p;
  out.times = members.front().times;
  out.count = members.size();
  const std::size_t nodes = out.times.size();
  std::vector<double> per(members.size());
  for (std::size_t j = 0; j < nodes; ++j) {
    for (std::size_t i = 0; i < members.size(); ++i) per[i] = members[i].moments[o][j];
    const auto e = mean_and_stderr(per);
    out.values.push_back(e.value);
    out.std_error.push_back(e.std_error);
  }
  out.step_violation.assign(nodes, 0.0);
  out.initial_violation.assign(nodes, 0.0);
  for (std::size_t j = 1; j < nodes; ++j) {
    out.step_violation[j] = z_units(out.values[j] - out.values[j - 1], out.std_error[j], out.values[j], out.count);
    out.initial_violation[j] = z_units(out.values[j] - out.values[0], out.std_error[j], out.values[j], out.count);
  }
  return out;
}

MomentSeries moment_series(std::span<const Trajectory> trajs, double p) {
  check_trajectories(trajs);
  require_order(p);
  SummaryRequest req;
  req.orders = {p};
  std::vector<MemberSummary> members;
  members.reserve(trajs.size());
  for (const auto& t : trajs) members.push_back(summarize(t, req));
  return moment_series(members, p);
}

bool DissipationReport::holds(double rel, double z) const {
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (!interior[j]) continue;
    if (std::abs(residual[j]) > std::max(rel * std::abs(rhs[j]), z * std_error[j])) return false;
  }
  return true;
}

double DissipationReport::max_relative_residual() const {
  double m = 0.0;
  for (std::size_t j = 0; j < times.size(); ++j)
    if (interior[j] && rhs[j] != 0.0) m = std::max(m, std::abs(residual[j] / rhs[j]));
  return m;
}

DissipationReport dissipation_residual(std::span<const MemberSummary> members) {
  check_members(members);
  const auto& t = members.front().times;
  const std::size_t nodes = t.size();
  if (nodes < 3) throw ResolutionError("dissipation_residual needs at least three time nodes");
  const std::size_t o2 = order_index(members.front(), 2.0);
  const std::size_t n = members.size();

  DissipationReport out;
  out.times = t;
  out.interior.assign(nodes, true);
  out.interior.front() = out.interior.back() = false;
  std::vector<double> lhs(n), rhs(n), res(n), var(n);
  double shortest = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < nodes; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& m = members[i];
      lhs[i] = derivative(t, m.moments[o2], j);
      rhs[i] = -2.0 * m.dissipation[j];
      res[i] = lhs[i] - rhs[i];
      var[i] = m.moments[o2][j] - m.mean[j] * m.mean[j];
    }
    out.lhs.push_back(mean_of(lhs));
    out.rhs.push_back(mean_of(rhs));
    const auto r = mean_and_stderr(res);
    out.residual.push_back(r.value);
    out.std_error.push_back(r.std_error);
    if (out.rhs.back() != 0.0) shortest = std::min(shortest, std::max(mean_of(var), 0.0) / std::abs(out.rhs.back()));
  }
  double max_step = 0.0;
  for (std::size_t j = 1; j < nodes; ++j) max_step = std::max(max_step, t[j] - t[j - 1]);
  if (max_step > 1e-2 * shortest)
    throw ResolutionError("time step " + std::to_string(max_step) + " does not resolve the energy decay time " +
                          std::to_string(shortest) + "; need dt <= 1e-2 of it");
  return out;
}

DissipationReport dissipation_residual(std::span<const Trajectory> trajs, double s) {
  check_trajectories(trajs);
  SummaryRequest req;
  req.orders = {2.0};
  req.s = s;
  std::vector<MemberSummary> members;
  members.reserve(trajs.size());
  for (const auto& tr : trajs) members.push_back(summarize(tr, req));
  return dissipation_residual(members);
}

CovarianceDynamics covariance_dynamics(std::span<const MemberSummary> members, std::span<const Offset> lags) {
  check_members(members);
  const auto& first = members.front();
  if (first.covariance.size() != lags.size()) throw ConfigError("summaries were built with a different lag list");
  CovarianceDynamics out;
  out.times = first.times;
  out.lags.assign(lags.begin(), lags.end());
  const std::size_t nodes = out.times.size(), n = members.size();
  std::vector<double> per(n), means(n);
  for (std::size_t l = 0; l < lags.size(); ++l) {
    out.value.emplace_back(nodes);
    out.std_error.emplace_back(nodes);
    for (std::size_t j = 0; j < nodes; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        per[i] = members[i].covariance[l][j];
        means[i] = members[i].mean[j];
      }
      const double mu = mean_of(means);
      const auto e = mean_and_stderr(per);
      out.value[l][j] = e.value - mu * mu;
      out.std_error[l][j] = e.std_error;
    }
  }
  out.identity = dissipation_residual(members);
  return out;
}

CovarianceDynamics covariance_dynamics(std::span<const Trajectory> trajs, std::span<const Offset> lags, double s) {
  check_trajectories(trajs);
  SummaryRequest req;
  req.orders = {2.0};
  req.s = s;
  req.lags.assign(lags.begin(), lags.end());
  std::vector<MemberSummary> members;
  members.reserve(trajs.size());
  for (const auto& tr : trajs) members.push_back(summarize(tr, req));
  return covariance_dynamics(members, lags);
}

double SvReport::z_score() const { return slack / std::max(std_error, std::numeric_limits<double>::min()); }

SvReport stroock_varopoulos_check(const Ensemble& ens_w, double a, double b, double h, double s) {
  if (ens_w.members.empty()) throw ConfigError("stroock_varopoulos_check: empty ensemble");
  if (!(a > 0.0 && b > 0.0) || std::abs(a + b - 2.0) > 1e-12)
    throw ConfigError("stroock_varopoulos_check needs a, b > 0 with a + b = 2");
  if (!(h > 0.0)) throw ConfigError("stroock_varopoulos_check needs h > 0");
  require_exponent(s);

  const std::size_t n = ens_w.size();
  std::vector<double> slack(n), literal(n), lhs(n), rhs(n), energy(n), scratch;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& w = ens_w.members[i];
    FieldRealization F(w.grid), G(w.grid), A(w.grid);
    for (std::size_t x = 0; x < w.values.size(); ++x) {
      const double v = w.values[x], m = std::abs(v), sg = (v > 0.0) - (v < 0.0);
      F.values[x] = sg * std::pow(m, a);
      G.values[x] = sg * std::pow(m, b);
      A.values[x] = m;
    }
    const auto PF = semigroup_apply(F, h, s);
    const auto PA = semigroup_apply(A, h, s);
    const double pfg = spatial_product_mean(PF.values, G.values, scratch);
    const double fg = spatial_product_mean(F.values, G.values, scratch);
    const double paa = spatial_product_mean(PA.values, A.values, scratch);
    const double aa = spatial_product_mean(A.values, A.values, scratch);
    lhs[i] = pfg - fg;
    rhs[i] = a * b * (paa - aa);
    slack[i] = rhs[i] - lhs[i];
    literal[i] = a * b * paa - pfg;
    energy[i] = aa;
  }
  SvReport r{a, b, h, s};
  r.lhs = mean_of(lhs);
  r.rhs = mean_of(rhs);
  const auto sl = mean_and_stderr(slack);
  const auto li = mean_and_stderr(literal);
  const double floor = 64.0 * kEps * mean_of(energy) / std::sqrt(static_cast<double>(n));
  r.slack = sl.value;
  r.std_error = std::max(sl.std_error, floor);
  r.literal_slack = li.value;
  r.literal_std_error = std::max(li.std_error, floor);
  return r;
}

}  // namespace fracconv

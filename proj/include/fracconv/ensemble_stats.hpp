#pragma once

#include <span>
#include <vector>

#include "fracconv/mild_solver.hpp"
#include "fracconv/random_fields.hpp"
#include "fracconv/statistics.hpp"

namespace fracconv {

// Spatially averaged |u|^p per member, averaged over members. p = infinity
// returns the largest grid value over all members with zero stderr.
Estimate moment(const Ensemble& ens, double p);

// Per-node scalars of one trajectory. Large ensembles are reduced through
// these so that full trajectories never have to be held at once.
struct SummaryRequest {
  std::vector<double> orders{2.0};  // moment orders p
  double s = 1.0;                   // exponent of the dissipation term
  std::vector<Offset> lags;         // covariance lags
};

struct MemberSummary {
  std::vector<double> times;
  std::vector<double> orders;
  std::vector<std::vector<double>> moments;     // [order][node] mean_x |u|^p
  std::vector<double> mean;                     // [node] mean_x u
  std::vector<double> dissipation;              // [node] mean_x ((-Delta)^{s/2} u)^2
  std::vector<std::vector<double>> covariance;  // [lag][node] mean_x u(x) u(x+y)
};

MemberSummary summarize(const Trajectory& traj, const SummaryRequest& request);

struct MomentSeries {
  double p = 2.0;
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> std_error;
  std::size_t count = 0;
  // (value_j - value_{j-1}) / stderr_j, and the same against node 0;
  // positive entries are increases.
  std::vector<double> step_violation;
  std::vector<double> initial_violation;

  // Largest increase, in stderr units, against the previous node or node 0.
  double max_violation() const;
  bool nonincreasing(double z = 3.0) const { return max_violation() <= z; }
};

MomentSeries moment_series(std::span<const Trajectory> trajs, double p);
// p must be one of the orders the summaries were built with.
MomentSeries moment_series(std::span<const MemberSummary> members, double p);

struct DissipationReport {
  std::vector<double> times;
  std::vector<double> lhs;       // d/dt E u^2 by finite differences
  std::vector<double> rhs;       // -2 E ((-Delta)^{s/2} u)^2
  std::vector<double> residual;  // lhs - rhs
  std::vector<double> std_error; // of the residual, from member-level residuals
  std::vector<bool> interior;    // endpoints use one-sided differences

  // |residual| <= max(rel |rhs|, z stderr) at every interior node.
  bool holds(double rel = 0.05, double z = 3.0) const;
  double max_relative_residual() const;
};

// Needs summaries with p = 2. Throws ResolutionError when the largest step
// exceeds 1e-2 of the shortest energy decay time Var/|dE/dt| on the grid.
DissipationReport dissipation_residual(std::span<const MemberSummary> members);
DissipationReport dissipation_residual(std::span<const Trajectory> trajs, double s);

struct CovarianceDynamics {
  std::vector<double> times;
  std::vector<Offset> lags;
  std::vector<std::vector<double>> value;      // [lag][node] B(t, y)
  std::vector<std::vector<double>> std_error;  // [lag][node]
  // y = 0 identity: dB/dt(t, 0) against -2 sum_k |k|^{2s} S_t(k).
  DissipationReport identity;
};

CovarianceDynamics covariance_dynamics(std::span<const MemberSummary> members, std::span<const Offset> lags);
CovarianceDynamics covariance_dynamics(std::span<const Trajectory> trajs, std::span<const Offset> lags, double s);

struct SvReport {
  double a = 1.0, b = 1.0, h = 0.0, s = 1.0;
  // Increment form: E[(P_h - I) F G] <= ab E[(P_h - I)|w| |w|] with
  // F = sgn(w)|w|^a, G = sgn(w)|w|^b.
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  double std_error = 0.0;
  // Without subtracting the identity: ab E[P_h|w| |w|] - E[P_h F G].
  double literal_slack = 0.0;
  double literal_std_error = 0.0;

  double z_score() const;
  bool holds(double z = 3.0) const { return z_score() >= -z; }
};

SvReport stroock_varopoulos_check(const Ensemble& ens_w, double a, double b, double h, double s);

}  // namespace fracconv

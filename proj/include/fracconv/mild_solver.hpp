#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fracconv/grid.hpp"
#include "fracconv/nonlinearity.hpp"

namespace fracconv {

enum class Dealias { automatic, on, off };

struct SolverConfig {
  double s = 1.0;
  std::vector<double> z{1.0};
  std::vector<double> time_grid{0.0, 1.0};  // 0 = t_0 < ... < t_M
  double K = 1.0;                           // Bielecki weight
  double tol = 1e-8;
  int max_iter = 50;
  Dealias dealias = Dealias::automatic;

  static std::vector<double> uniform_time_grid(double t_end, int steps);

  // s in (1/2, 1], strictly increasing grid starting at 0, tol > 0,
  // max_iter >= 1, K >= 0, direction of the grid's dimension.
  void validate(int dim) const;
  // Automatic: on for polynomial kinds, off otherwise.
  bool dealias_for(const NonlinearitySpec& spec) const;
};

// States of one realization on the solver's time grid.
struct Trajectory {
  std::vector<FieldRealization> states;
  std::vector<double> times;

  const FieldRealization& initial() const { return states.front(); }
  const FieldRealization& final() const { return states.back(); }
  std::size_t size() const { return states.size(); }
};

struct PicardDiagnostics {
  std::vector<double> residuals;  // Bielecki norm of u_{m+1} - u_m
  std::vector<double> ratios;     // residuals[m] / residuals[m-1]
  double bound = 0.0;             // contraction_bound(s, L_eff, K)
  double kernel_bound = 0.0;      // same with the L^p kernel constant
  bool converged = false;
  int iterations = 0;

  double max_ratio() const;
};

// P_t u(0) at every node.
Trajectory linear_solution(const FieldRealization& u0, const SolverConfig& config);

// F(u)(t_j) = P_{t_j} u(0) + int_0^{t_j} grad_z P_{t_j - tau} f(u(tau)) dtau,
// with f(u(tau)) linearly interpolated between nodes and the time integral
// done exactly per Fourier mode.
Trajectory duhamel_apply(const Trajectory& traj, const NonlinearitySpec& spec, const SolverConfig& config);

// u_1 = P_t u0, u_{m+1} = F(u_m) until the Bielecki residual drops below
// tol. Throws NonContractionError if max_iter is reached while the residual
// still grows.
std::pair<Trajectory, PicardDiagnostics> picard_solve(const FieldRealization& u0, const NonlinearitySpec& spec,
                                                      const SolverConfig& config);

// Marches node to node with the restart identity
//   u(t+h) = P_h u(t) + int_t^{t+h} grad_z P_{t+h-tau} f(u(tau)) dtau
// using the same product integration and at most five fixed-point sweeps
// per step. Throws StepSizeError when the sweeps of a step stop shrinking.
Trajectory step_solve(const FieldRealization& u0, const NonlinearitySpec& spec, const SolverConfig& config);

// rho(K) = c_s L K^{-1+1/2s} Gamma(1 - 1/2s), c_s = gradient_constant(s).
double contraction_bound(double s, double L, double K);
// Same with kernel_gradient_constant(s) in place of c_s.
double kernel_contraction_bound(double s, double L, double K);
// K_0 with contraction_bound(s, L, K_0) == 1.
double minimal_K(double s, double L);

// sup_j e^{-t_j K} (mean_x |u(t_j)|^p)^{1/p}; p = infinity uses the grid
// maximum. The ensemble overload averages over members as well.
double bielecki_norm(const Trajectory& traj, double K, double p);
double bielecki_norm(std::span<const Trajectory> trajs, double K, double p);

Trajectory difference(const Trajectory& a, const Trajectory& b);

struct LadderPair {
  std::size_t lo = 0, hi = 0;           // indices into the ladder
  double distance = 0.0;                // sup_t RMS_x |u^lo - u^hi|
  std::vector<double> mean_square;      // mean_x |u^lo - u^hi|^2 per node
};

struct LadderReport {
  std::vector<double> levels;
  std::vector<LadderPair> pairs;
  std::vector<PicardDiagnostics> diagnostics;  // one per level
  bool cauchy = true;
  std::string warning;
};

// Groups pairs by min(n_i, n_j); the largest distance in each group must
// not increase with that level.
bool ladder_is_cauchy(std::span<const double> levels, std::span<const LadderPair> pairs, std::string* warning);

// Runs picard_solve with h_n(u0) and f o h_n for each level n of the ladder
// and returns the top-level trajectory.
std::pair<Trajectory, LadderReport> solve_polynomial(const FieldRealization& u0, const NonlinearitySpec& spec,
                                                     const SolverConfig& config, std::span<const double> ladder);

}  // namespace fracconv

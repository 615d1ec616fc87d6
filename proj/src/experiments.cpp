#include "fracconv/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "fracconv/ensemble_stats.hpp"
#include "fracconv/error.hpp"
#include "fracconv/parallel.hpp"
#include "fracconv/rng.hpp"
#include "fracconv/spectral.hpp"

namespace fracconv {

namespace {

constexpr double kPi = std::numbers::pi;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

template <class T>
T param(const ResolvedConfig& c, const char* key) {
  if (!c.params.contains(key)) throw ConfigError("params: missing key \"" + std::string(key) + "\"");
  try {
    return c.params.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("params: key \"" + std::string(key) + "\" has the wrong type");
  }
}

double rms_diff(std::span<const double> a, std::span<const double> b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(pairwise_sum(d) / static_cast<double>(a.size()));
}

double sup_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_step(const std::vector<double>& t) {
  double h = 0.0;
  for (std::size_t j = 1; j < t.size(); ++j) h = std::max(h, t[j] - t[j - 1]);
  return h;
}

std::string mode_label(const Grid& g, std::size_t idx) {
  const auto ij = g.unflatten(idx);
  std::string s = std::to_string(g.signed_index(ij[0]));
  if (g.dim() == 2) s += "," + std::to_string(g.signed_index(ij[1]));
  return s;
}

std::vector<double> log_grid(double lo, double hi, int points) {
  std::vector<double> t(points);
  for (int j = 0; j < points; ++j)
    t[j] = points == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * j / (points - 1));
  return t;
}

// Runs fn(i, u0_i) for every member on the pool. Members failing with a
// numerical error are flagged and skipped; configuration errors propagate.
template <class T, class Fn>
std::vector<T> over_members(const ResolvedConfig& c, int workers, const std::string& stage, ExperimentResult& res,
                            Fn&& fn) {
  struct Slot {
    std::optional<T> value;
    std::string error;
  };
  auto slots = parallel_map<Slot>(c.members, workers, [&](std::size_t i) -> Slot {
    try {
      return {fn(i, sample_field(c.measure, member_seed(c.seed, i))), {}};
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      return {std::nullopt, e.what()};
    }
  });
  std::vector<T> out;
  out.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].value) {
      out.push_back(std::move(*slots[i].value));
    } else {
      res.flagged.push_back({stage, i, member_seed(c.seed, i), slots[i].error});
    }
  }
  return out;
}

void check_no_flags(ExperimentResult& res) {
  res.check("no flagged members", res.flagged.empty(), std::to_string(res.flagged.size()) + " flagged");
}

ScalarFn named_fn(const std::string& name) {
  if (name == "id") return [](double u) { return u; };
  if (name == "burgers") return [](double u) { return 0.5 * u * u; };
  if (name == "tanh") return [](double u) { return std::tanh(u); };
  if (name == "cube") return [](double u) { return u * u * u; };
  if (name == "one") return [](double) { return 1.0; };
  throw ConfigError("unknown scalar function \"" + name + "\" (id, burgers, tanh, cube, one)");
}

// ---------------------------------------------------------------------------

ExperimentResult linear_spectral_decay(const ResolvedConfig& c, int workers) {
  ExperimentResult res;
  const auto s_values = param<std::vector<double>>(c, "s_values");
  const auto t_values = param<std::vector<double>>(c, "t_values");
  const double z_max = param<double>(c, "z_max");
  const Ensemble u0 = sample_ensemble(c.measure, c.seed, c.members, workers);
  Table tab({"s", "t", "mode", "expected", "estimate", "stderr", "z", "pass"});
  std::size_t compared = 0, failed = 0;
  double worst = 0.0;
  for (double s : s_values) {
    for (double t : t_values) {
      Ensemble ev;
      ev.time = t;
      ev.seeds = u0.seeds;
      ev.members = parallel_map<FieldRealization>(u0.size(), workers,
                                                  [&](std::size_t i) { return semigroup_apply(u0.members[i], t, s); });
      const auto est = estimate_spectrum(ev);
      for (std::size_t idx = 0; idx < c.grid.size(); ++idx) {
        const double w = c.measure.weights[idx];
        if (!(w > 0.0)) continue;
        const double expected = std::exp(-2.0 * t * std::pow(c.grid.k_squared(idx), s)) * w;
        const double diff = est.measure.weights[idx] - expected;
        const double se = est.std_error[idx];
        const double z = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        const bool ok = std::abs(z) <= z_max;
        ++compared;
        failed += !ok;
        worst = std::max(worst, std::abs(z));
        tab.row().add(s).add(t).add(mode_label(c.grid, idx)).add(expected).add(est.measure.weights[idx]).add(se).add(z).add(ok);
      }
    }
  }
  res.tables.emplace_back("spectral_decay", std::move(tab));
  res.check("empirical spectrum of P_t u0 matches exp(-2t|k|^{2s}) sigma", failed == 0 && compared > 0,
            std::to_string(compared) + " mode comparisons, worst |z| = " + num(worst));
  return res;
}

ExperimentResult semigroup_contraction(const ResolvedConfig& c, int workers) {
  ExperimentResult res;
  const auto s_values = param<std::vector<double>>(c, "s_values");
  const auto t_pairs = param<std::vector<std::array<double, 2>>>(c, "t_pairs");
  const double tol = param<double>(c, "semigroup_tol");
  const auto t_norm = log_grid(param<double>(c, "norm_t_min"), param<double>(c, "norm_t_max"),
                               param<int>(c, "norm_points"));
  const Ensemble fields = sample_ensemble(c.measure, c.seed, c.members, workers);

  Table law({"s", "t1", "t2", "sup_error", "pass"});
  double worst = 0.0;
  for (double s : s_values) {
    for (const auto& [t1, t2] : t_pairs) {
      double err = 0.0;
      for (const auto& u : fields.members) {
        const auto a = semigroup_apply(semigroup_apply(u, t2, s), t1, s);
        const auto b = semigroup_apply(u, t1 + t2, s);
        err = std::max(err, sup_diff(a.values, b.values));
      }
      worst = std::max(worst, err);
      law.row().add(s).add(t1).add(t2).add(err).add(err <= tol);
    }
  }
  res.tables.emplace_back("semigroup_law", std::move(law));
  res.check("sup |P_t1 P_t2 u - P_(t1+t2) u| <= " + num(tol), worst <= tol, "worst " + num(worst));

  Table norms({"s", "member", "t", "l2_norm", "pass"});
  std::size_t increases = 0;
  for (double s : s_values) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      double prev = l2_norm(fields.members[i]);
      norms.row().add(s).add(i).add(0.0).add(prev).add(true);
      for (double t : t_norm) {
        const double cur = l2_norm(semigroup_apply(fields.members[i], t, s));
        const bool ok = cur <= prev;
        increases += !ok;
        norms.row().add(s).add(i).add(t).add(cur).add(ok);
        prev = cur;
      }
    }
  }
  res.tables.emplace_back("l2_contraction", std::move(norms));
  res.check("||P_t u||_2 nonincreasing in t (exact)", increases == 0, std::to_string(increases) + " increases");
  return res;
}

ExperimentResult kernel_identities(const ResolvedConfig& c, int) {
  ExperimentResult res;
  const auto s_values = param<std::vector<double>>(c, "s_values");
  const auto t_values = param<std::vector<double>>(c, "t_values");
  const double mass_tol = param<double>(c, "mass_tol");

  Table mass({"s", "t", "mass", "error", "pass"});
  double worst_mass = 0.0;
  for (double s : s_values) {
    for (double t : t_values) {
      const auto p = kernel_values(t, s, c.grid);
      const double m = pairwise_sum(p.values) * c.grid.cell_volume();
      worst_mass = std::max(worst_mass, std::abs(m - 1.0));
      mass.row().add(s).add(t).add(m).add(std::abs(m - 1.0)).add(std::abs(m - 1.0) <= mass_tol);
    }
  }
  res.tables.emplace_back("kernel_mass", std::move(mass));
  res.check("kernel mass |sum p_t dx - 1| <= " + num(mass_tol), worst_mass <= mass_tol, "worst " + num(worst_mass));

  // p_t(x) = t^{-d/2s} p_1(t^{-1/2s} x), compared on grids whose lengths
  // scale with t^{1/2s} so that grid points correspond one to one.
  const double s_scale = param<double>(c, "scaling_s");
  const double scale_tol = param<double>(c, "scaling_tol");
  const double len1 = param<double>(c, "scaling_len");
  Table scaling({"dim", "n", "t", "sup_rel_error", "pass"});
  double worst_scale = 0.0;
  for (const auto& [dim, n] : param<std::vector<std::array<int, 2>>>(c, "scaling_grids")) {
    const Grid g1(dim, n, len1);
    const auto p1 = kernel_values(1.0, s_scale, g1);
    for (double t : param<std::vector<double>>(c, "scaling_t_values")) {
      const double stretch = std::pow(t, 1.0 / (2.0 * s_scale));
      const Grid gt(dim, n, len1 * stretch);
      const auto pt = kernel_values(t, s_scale, gt);
      const double factor = std::pow(stretch, -dim);
      double err = 0.0, peak = 0.0;
      for (std::size_t i = 0; i < gt.size(); ++i) {
        err = std::max(err, std::abs(pt.values[i] - factor * p1.values[i]));
        peak = std::max(peak, std::abs(pt.values[i]));
      }
      const double rel = err / peak;
      worst_scale = std::max(worst_scale, rel);
      scaling.row().add(dim).add(n).add(t).add(rel).add(rel <= scale_tol);
    }
  }
  res.tables.emplace_back("kernel_scaling", std::move(scaling));
  res.check("scaling law relative error <= " + num(scale_tol) + " at s = " + num(s_scale), worst_scale <= scale_tol,
            "worst " + num(worst_scale));

  // s = 1: the periodized heat kernel (4 pi t)^{-1/2} sum_m exp(-(x + mL)^2 / 4t).
  const double gauss_tol = param<double>(c, "gaussian_tol");
  const double len_factor = param<double>(c, "gaussian_len_factor");
  const int gauss_n = param<int>(c, "gaussian_n");
  Table gauss({"t", "len", "sup_error", "pass"});
  double worst_gauss = 0.0;
  for (double t : param<std::vector<double>>(c, "gaussian_t_values")) {
    const Grid g(1, gauss_n, len_factor * std::sqrt(t));
    const auto p = kernel_values(t, 1.0, g);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = position(g, i)[0];
      double oracle = 0.0;
      for (int m = -3; m <= 3; ++m) oracle += std::exp(-(x + m * g.len()) * (x + m * g.len()) / (4.0 * t));
      oracle /= std::sqrt(4.0 * kPi * t);
      err = std::max(err, std::abs(p.values[i] - oracle));
    }
    worst_gauss = std::max(worst_gauss, err);
    gauss.row().add(t).add(g.len()).add(err).add(err <= gauss_tol);
  }
  res.tables.emplace_back("kernel_gaussian", std::move(gauss));
  res.check("s = 1 kernel matches the Gaussian to " + num(gauss_tol), worst_gauss <= gauss_tol,
            "worst " + num(worst_gauss));
  return res;
}

ExperimentResult gradient_bound(const ResolvedConfig& c, int workers) {
  ExperimentResult res;
  const auto s_values = param<std::vector<double>>(c, "s_values");
  const auto times = log_grid(param<double>(c, "t_min"), param<double>(c, "t_max"), param<int>(c, "t_points"));
  const double slack = param<double>(c, "rel_slack");
  const int n2 = param<int>(c, "n_2d");
  const auto random_count = param<std::size_t>(c, "random_fields");

  Table tab({"dim", "s", "t", "measured", "grid_sup", "bound", "ratio", "pass"});
  std::size_t violations = 0;
  double sharpest = 0.0;
  for (int dim : param<std::vector<int>>(c, "dims")) {
    const Grid g = dim == 1 ? c.grid : Grid(2, n2, c.grid.len());
    std::vector<double> z = dim == 1 ? std::vector<double>{1.0} : normalize_direction(std::vector<double>{1.0, 1.0}, 2);
    const auto measure = power_law_measure(g, 1.0, 1.0);
    const Ensemble randoms = sample_ensemble(measure, c.seed + static_cast<std::uint64_t>(dim), random_count, workers);
    for (double s : s_values) {
      for (double t : times) {
        // Mode with the largest multiplier |z.k| exp(-t|k|^{2s}).
        std::size_t best = 0;
        double grid_sup = 0.0;
        for (std::size_t idx = 0; idx < g.size(); ++idx) {
          const auto ij = g.unflatten(idx);
          const double zk = z[0] * g.odd_wavenumber(ij[0]) + (dim == 2 ? z[1] * g.odd_wavenumber(ij[1]) : 0.0);
          const double m = std::abs(zk) * std::exp(-t * std::pow(g.k_squared(idx), s));
          if (m > grid_sup) {
            grid_sup = m;
            best = idx;
          }
        }
        const auto bij = g.unflatten(best);
        FieldRealization probe(g);
        for (std::size_t x = 0; x < g.size(); ++x) {
          const auto pos = position(g, x);
          probe.values[x] = std::cos(g.wavenumber(bij[0]) * pos[0] + (dim == 2 ? g.wavenumber(bij[1]) * pos[1] : 0.0));
        }
        double measured = l2_norm(grad_semigroup_apply(probe, t, s, z)) / l2_norm(probe);
        for (const auto& u : randoms.members)
          measured = std::max(measured, l2_norm(grad_semigroup_apply(u, t, s, z)) / l2_norm(u));
        const double bound = gradient_constant(s) * std::pow(t, -1.0 / (2.0 * s));
        const bool ok = measured <= bound * (1.0 + slack);
        violations += !ok;
        sharpest = std::max(sharpest, measured / bound);
        tab.row().add(dim).add(s).add(t).add(measured).add(grid_sup).add(bound).add(measured / bound).add(ok);
      }
    }
  }
  res.tables.emplace_back("gradient_bound", std::move(tab));
  res.check("||grad_z P_t||_{L2} <= c_s t^{-1/2s}", violations == 0,
            std::to_string(violations) + " violations, largest measured/bound = " + num(sharpest));
  return res;
}

ExperimentResult picard_contraction(const ResolvedConfig& c, int workers) {
  ExperimentResult res;
  const auto s_values = param<std::vector<double>>(c, "s_values");
  const auto multipliers = param<std::vector<double>>(c, "K_multipliers");
  const double ratio_factor = param<double>(c, "ratio_factor");
  const int iteration_cap = param<int>(c, "iteration_cap");
  const double L = c.nonlinearity.effective_lipschitz();

  Table summary({"s", "K0", "K", "rho", "kernel_rho", "max_ratio", "max_iterations", "max_final_residual", "members",
                 "pass"});
  Table members({"s", "K", "member", "iterations", "final_residual", "max_ratio", "converged"});
  bool all_ok = true;
  std::string detail;
  for (double s : s_values) {
    for (double mult : multipliers) {
      SolverConfig cfg = c.solver;
      cfg.s = s;
      cfg.K = mult * minimal_K(s, L);
      cfg.max_iter = iteration_cap;
      const auto diags = over_members<PicardDiagnostics>(
          c, workers, "picard s=" + num(s) + " K=" + num(mult) + "K0", res,
          [&](std::size_t, const FieldRealization& u0) { return picard_solve(u0, c.nonlinearity, cfg).second; });
      double max_ratio = 0.0, max_res = 0.0;
      int max_it = 0;
      bool converged = !diags.empty();
      for (std::size_t i = 0; i < diags.size(); ++i) {
        const auto& d = diags[i];
        max_ratio = std::max(max_ratio, d.max_ratio());
        max_it = std::max(max_it, d.iterations);
        max_res = std::max(max_res, d.residuals.back());
        converged = converged && d.converged;
        members.row().add(s).add(cfg.K).add(i).add(d.iterations).add(d.residuals.back()).add(d.max_ratio()).add(d.converged);
      }
      const double rho = contraction_bound(s, L, cfg.K);
      const bool ok = converged && max_ratio <= ratio_factor * rho && max_it <= iteration_cap && max_res <= cfg.tol;
      all_ok = all_ok && ok;
      summary.row().add(s).add(cfg.K / mult).add(cfg.K).add(rho).add(kernel_contraction_bound(s, L, cfg.K))
          .add(max_ratio).add(max_it).add(max_res).add(diags.size()).add(ok);
      detail += "s=" + num(s) + " K=" + num(mult) + "K0: ratio " + num(max_ratio) + " vs rho " + num(rho) + ", " +
                std::to_string(max_it) + " it; ";
      if (!diags.empty())
        res.texts.emplace_back("diagnostics/picard_s" + num(s) + "_K" + num(mult) + "K0_member0.tsv",
                               diagnostics_tsv(diags.front()));
    }
  }
  res.tables.emplace_back("picard_summary", std::move(summary));
  res.tables.emplace_back("picard_members", std::move(members));
  res.check("Picard converges with ratio <= " + num(ratio_factor) + " rho(K) within " + std::to_string(iteration_cap) +
                " iterations",
            all_ok, detail);
  check_no_flags(res);
  return res;
}

void moment_rows(Table& tab, const MomentSeries& ms, const std::string& run, double z_max, bool& ok) {
  for (std::size_t j = 0; j < ms.times.size(); ++j) {
    const bool node_ok = ms.step_violation[j] <= z_max && ms.initial_violation[j] <= z_max;
    ok = ok && node_ok;
    tab.row().add(run).add(ms.p).add(ms.times[j]).add(ms.values[j]).add(ms.std_error[j]).add(ms.step_violation[j])
        .add(ms.initial_violation[j]).add(node_ok);
  }
}

ExperimentResult moment_monotonicity(const ResolvedConfig& c, int workers) {
  ExperimentResult res;
  const auto ladder = param<std::vector<double>>(c, "ladder");
  const auto orders = param<std::vector<double>>(c, "orders");
  const double z_max = param<double>(c, "z_max");
  if (!c.nonlinearity.polynomial_class()) throw ConfigError("moment-monotonicity needs a polynomial nonlinearity");
  SummaryRequest req;
  req.orders = orders;
  req.s = c.solver.s;

  const auto per_member = over_members<std::vector<MemberSummary>>(
      c, workers, "cut-off ladder", res, [&](std::size_t, const FieldRealization& u0) {
        std::vector<MemberSummary> levels;
        for (double n : ladder) {
          FieldRealization start = u0;
          for (double& v : start.values) v = cutoff(v, n);
          auto [traj, diag] = picard_solve(start, c.nonlinearity.with_cutoff(n), c.solver);
          if (!diag.converged) throw NumericError("Picard did not reach tol at cut-off level " + num(n));
          levels.push_back(summarize(traj, req));
        }
        return levels;
      });
  if (per_member.empty()) throw NumericError("moment-monotonicity: every member failed");

  Table tab({"level", "p", "t", "moment", "stderr", "z_vs_previous", "z_vs_initial", "pass"});
  bool ok = true;
  double worst = 0.0;
  for (std::size_t l = 0; l < ladder.size(); ++l) {
    std::vector<MemberSummary> level;
    level.reserve(per_member.size());
    for (const auto& m : per_member) level.push_back(m[l]);
    for (double p : orders) {
      const auto ms = moment_series(level, p);
      worst = std::max(worst, ms.max_violation());
      moment_rows(tab, ms, num(ladder[l]), z_max, ok);
    }
  }
  res.tables.emplace_back("moments", std::move(tab));
  res.check("E|u(t)|^p nonincreasing within " + num(z_max) + " stderr at every node", ok,
            "largest increase " + num(worst) + " stderr over " + std::to_string(per_member.size()) + " members");
  check_no_flags(res);
  return res;
}

ExperimentResult energy_dissipation(const ResolvedConfig& c, int workers) {
  ExperimentResult res;
  const double rel = param<double>(c, "rel_tol");
  const double z_max = param<double>(c, "z_max");
  const auto solver_name = param<std::string>(c, "solver");
  if (solver_name != "step" && solver_name != "picard") throw ConfigError("params.solver must be step or picard");
  const double dt = max_step(c.solver.time_grid);
  SummaryRequest req;
  req.orders = {2.0};
  req.s = c.solver.s;

  Table tab({"run", "t", "lhs", "rhs", "residual", "stderr", "tolerance", "pass"});

  // Linear flow first: the identity is exact up to the difference stencil.
  const auto linear = over_members<MemberSummary>(c, workers, "linear", res, [&](std::size_t, const FieldRealization& u0) {
    return summarize(linear_solution(u0, c.solver), req);
  });
  const auto lin = dissipation_residual(linear);
  bool lin_ok = true;
  for (std::size_t j = 0; j < lin.times.size(); ++j) {
    const double tolerance = dt * dt * std::abs(lin.rhs[j]) + z_max * lin.std_error[j];
    const bool ok = !lin.interior[j] || std::abs(lin.residual[j]) <= tolerance;
    lin_ok = lin_ok && ok;
    tab.row().add("linear").add(lin.times[j]).add(lin.lhs[j]).add(lin.rhs[j]).add(lin.residual[j]).add(lin.std_error[j])
        .add(tolerance).add(lin.interior[j] ? (ok ? "pass" : "fail") : "endpoint");
  }
  // Oracle for the linear energy: sum_k exp(-2 t |k|^{2s}) sigma_k + mean^2.
  const auto energy = moment_series(linear, 2.0);
  Table oracle({"t", "energy", "stderr", "oracle", "z", "pass"});
  bool oracle_ok = true;
  for (std::size_t j = 0; j < energy.times.size(); ++j) {
    std::vector<double> terms(c.grid.size());
    for (std::size_t idx = 0; idx < c.grid.size(); ++idx)
      terms[idx] = std::exp(-2.0 * energy.times[j] * std::pow(c.grid.k_squared(idx), c.solver.s)) * c.measure.weights[idx];
    const double expected = pairwise_sum(terms) + c.measure.mean * c.measure.mean;
    const double z = (energy.values[j] - expected) / energy.std_error[j];
    const bool ok = std::abs(z) <= z_max;
    oracle_ok = oracle_ok && ok;
    oracle.row().add(energy.times[j]).add(energy.values[j]).add(energy.std_error[j]).add(expected).add(z).add(ok);
  }
  res.check("linear flow: |residual| <= dt^2 |rhs| + " + num(z_max) + " stderr", lin_ok,
            "max relative residual " + num(lin.max_relative_residual()) + ", dt^2 = " + num(dt * dt));
  res.check("linear flow: E u^2 matches the spectral decay oracle", oracle_ok);

  bool nonlinear_ok = true;
  for (const auto& spec_json : param<json>(c, "nonlinear_runs")) {
    const auto spec = nonlinearity_from_json(spec_json);
    const auto summaries = over_members<MemberSummary>(c, workers, spec.name(), res,
                                                        [&](std::size_t, const FieldRealization& u0) {
                                                          if (solver_name == "step")
                                                            return summarize(step_solve(u0, spec, c.solver), req);
                                                          auto [traj, diag] = picard_solve(u0, spec, c.solver);
                                                          if (!diag.converged) throw NumericError("Picard did not reach tol");
                                                          return summarize(traj, req);
                                                        });
    if (summaries.empty()) throw NumericError("energy-dissipation: every member failed for " + spec.name());
    const auto rep = dissipation_residual(summaries);
    for (std::size_t j = 0; j < rep.times.size(); ++j) {
      const double tolerance = std::max(rel * std::abs(rep.rhs[j]), z_max * rep.std_error[j]);
      const bool ok = std::abs(rep.residual[j]) <= tolerance;
      tab.row().add(spec.name()).add(rep.times[j]).add(rep.lhs[j]).add(rep.rhs[j]).add(rep.residual[j])
          .add(rep.std_error[j]).add(tolerance).add(rep.interior[j] ? (ok ? "pass" : "fail") : "endpoint");
    }
    const bool ok = rep.holds(rel, z_max);
    nonlinear_ok = nonlinear_ok && ok;
    res.check(spec.name() + ": |residual| <= max(" + num(rel) + " |rhs|, " + num(z_max) + " stderr)", ok,
              "max relative residual " + num(rep.max_relative_residual()));
  }
  res.tables.emplace_back("dissipation", std::move(tab));
  res.tables.emplace_back("linear_energy_oracle", std::move(oracle));
  check_no_flags(res);
  return res;
}

ExperimentResult orthogonality(const ResolvedConfig& c, int workers) {
  ExperimentResult res;
  const double z_max = param<double>(c, "z_max");
  const Ensemble ens = sample_ensemble(c.measure, c.seed, c.members, workers);
  Table tab({"f", "g", "estimate", "stderr", "z", "pass"});
  bool ok = true;
  double worst = 0.0;
  for (const auto& pair : param<std::vector<std::array<std::string, 2>>>(c, "pairs")) {
    const auto st = directional_orthogonality_stat(ens, named_fn(pair[0]), named_fn(pair[1]), c.solver.z);
    const bool pass = std::abs(st.z_score) <= z_max;
    ok = ok && pass;
    worst = std::max(worst, std::abs(st.z_score));
    tab.row().add(pair[0]).add(pair[1]).add(st.estimate).add(st.std_error).add(st.z_score).add(pass);
  }
  res.tables.emplace_back("orthogonality", std::move(tab));
  res.check("|z| <= " + num(z_max) + " for E[(grad_z f(u)) g(u)]", ok, "worst |z| = " + num(worst));
  return res;
}

ExperimentResult cutoff_ladder(const ResolvedConfig& c, int workers) {
  ExperimentResult res;
  const auto ladder = param<std::vector<double>>(c, "ladder");
  const double amplitude = param<double>(c, "amplitude");
  const double bound = param<double>(c, "bound");
  struct Outcome {
    LadderReport report;
    double bound_fraction = 0.0;  // share of grid values above the lowest cut-off
  };
  const auto outcomes = over_members<Outcome>(c, workers, "ladder", res, [&](std::size_t, const FieldRealization& g) {
    FieldRealization u0 = g;
    std::size_t above = 0;
    for (double& v : u0.values) {
      v = cutoff(amplitude * v, bound);
      above += std::abs(v) > ladder.front();
    }
    auto rep = solve_polynomial(u0, c.nonlinearity, c.solver, ladder).second;
    for (std::size_t l = 0; l < rep.diagnostics.size(); ++l)
      if (!rep.diagnostics[l].converged) throw NumericError("Picard did not reach tol at cut-off level " + num(ladder[l]));
    return Outcome{std::move(rep), static_cast<double>(above) / static_cast<double>(u0.values.size())};
  });
  if (outcomes.empty()) throw NumericError("cutoff-ladder: every member failed");

  // Ensemble distances sup_t (E mean_x |u^a - u^b|^2)^{1/2}.
  std::vector<LadderPair> pairs = outcomes.front().report.pairs;
  const std::size_t nodes = c.solver.time_grid.size();
  std::size_t member_cauchy = 0;
  double binding = 0.0;
  for (auto& p : pairs) {
    std::vector<double> per(outcomes.size());
    p.distance = 0.0;
    for (std::size_t j = 0; j < nodes; ++j) {
      const std::size_t k = static_cast<std::size_t>(&p - pairs.data());
      for (std::size_t i = 0; i < outcomes.size(); ++i) per[i] = outcomes[i].report.pairs[k].mean_square[j];
      p.mean_square[j] = mean_of(per);
      p.distance = std::max(p.distance, std::sqrt(p.mean_square[j]));
    }
  }
  for (const auto& o : outcomes) {
    member_cauchy += o.report.cauchy;
    binding += o.bound_fraction / static_cast<double>(outcomes.size());
  }
  std::string warning;
  const bool cauchy = ladder_is_cauchy(ladder, pairs, &warning);

  Table tab({"level_lo", "level_hi", "min_level", "distance"});
  for (const auto& p : pairs) tab.row().add(ladder[p.lo]).add(ladder[p.hi]).add(std::min(ladder[p.lo], ladder[p.hi])).add(p.distance);
  Table groups({"min_level", "largest_distance", "pass"});
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l + 1 < ladder.size(); ++l) {
    double largest = 0.0;
    for (const auto& p : pairs)
      if (std::min(p.lo, p.hi) == l) largest = std::max(largest, p.distance);
    groups.row().add(ladder[l]).add(largest).add(largest <= prev);
    prev = largest;
  }
  res.tables.emplace_back("ladder_pairs", std::move(tab));
  res.tables.emplace_back("ladder_groups", std::move(groups));
  res.check("ladder distances decrease with the lower cut-off level", cauchy,
            warning.empty() ? "0 violations; " + std::to_string(member_cauchy) + "/" +
                                  std::to_string(outcomes.size()) + " members Cauchy individually; " +
                                  num(100.0 * binding) + "% of u0 values above the lowest cut-off"
                            : warning);
  res.check("lowest cut-off binds", binding > 0.0, num(100.0 * binding) + "% of values");
  check_no_flags(res);
  return res;
}

// Brute-force two-point evaluation of E[(P_h - I) F G] with the grid kernel
// p(x) = len^{-1} sum_k exp(-h|k|^{2s}) cos(kx) built by direct summation.
struct TwoPoint {
  double increment = 0.0;  // mean_x G (P_h F - F)
  double pair_form = 0.0;  // -1/2 mean_x sum_y dx p(x-y) (F(x)-F(y)) (G(x)-G(y))
};

TwoPoint two_point(const Grid& g, std::span<const double> F, std::span<const double> G, double h, double s) {
  const int n = g.n();
  std::vector<double> p(n, 0.0);
  for (int d = 0; d < n; ++d) {
    for (int m = 0; m < n; ++m) {
      const double k = g.wavenumber(m);
      p[d] += std::exp(-h * std::pow(k * k, s)) * std::cos(k * d * g.dx());
    }
    p[d] /= g.len();
  }
  TwoPoint out;
  for (int i = 0; i < n; ++i) {
    double pf = 0.0, pair = 0.0;
    for (int j = 0; j < n; ++j) {
      const double w = g.dx() * p[((i - j) % n + n) % n];
      pf += w * F[j];
      pair += w * (F[i] - F[j]) * (G[i] - G[j]);
    }
    out.increment += G[i] * (pf - F[i]);
    out.pair_form -= 0.5 * pair;
  }
  out.increment /= n;
  out.pair_form /= n;
  return out;
}

ExperimentResult stroock_varopoulos(const ResolvedConfig& c, int workers) {
  ExperimentResult res;
  const auto ab = param<std::vector<std::array<double, 2>>>(c, "ab");
  const auto h_values = param<std::vector<double>>(c, "h_values");
  const auto s_values = param<std::vector<double>>(c, "s_values");
  const double z_max = param<double>(c, "z_max");
  const Ensemble w = sample_ensemble(c.measure, c.seed, c.members, workers);
  Ensemble abs_w = w;
  for (auto& m : abs_w.members)
    for (double& v : m.values) v = std::abs(v);

  Table tab({"field", "s", "h", "a", "b", "lhs", "rhs", "slack", "stderr", "z", "literal_slack", "literal_z", "pass"});
  bool gaussian_ok = true, abs_ok = true, equality_ok = true;
  double worst = std::numeric_limits<double>::infinity();
  for (double s : s_values) {
    for (double h : h_values) {
      for (const auto& [a, b] : ab) {
        for (int nonneg = 0; nonneg < 2; ++nonneg) {
          const auto r = stroock_varopoulos_check(nonneg ? abs_w : w, a, b, h, s);
          const bool ok = r.holds(z_max);
          (nonneg ? abs_ok : gaussian_ok) &= ok;
          if (nonneg && a == 1.0 && b == 1.0) equality_ok &= std::abs(r.z_score()) <= z_max;
          worst = std::min(worst, r.z_score());
          tab.row().add(nonneg ? "abs" : "gaussian").add(s).add(h).add(a).add(b).add(r.lhs).add(r.rhs).add(r.slack)
              .add(r.std_error).add(r.z_score()).add(r.literal_slack).add(r.literal_slack / r.literal_std_error).add(ok);
        }
      }
    }
  }
  res.tables.emplace_back("stroock_varopoulos", std::move(tab));
  res.check("slack >= -" + num(z_max) + " stderr for Gaussian w", gaussian_ok, "smallest z = " + num(worst));
  res.check("slack >= -" + num(z_max) + " stderr for nonnegative w", abs_ok);
  res.check("a = b = 1 with nonnegative w: both sides agree", equality_ok);

  // Brute-force oracle on a small grid.
  const Grid og(1, param<int>(c, "oracle_n"), c.grid.len());
  const auto om = gaussian_bump_measure(og, param<double>(c, "oracle_width"), 1.0);
  const auto oracle_members = param<std::size_t>(c, "oracle_members");
  const double oracle_tol = param<double>(c, "oracle_tol");
  Table otab({"member", "s", "h", "a", "b", "spectral_lhs", "brute_force_lhs", "pair_form", "spectral_rhs",
              "brute_force_rhs", "max_rel_error", "pass"});
  double worst_rel = 0.0;
  for (std::size_t i = 0; i < oracle_members; ++i) {
    Ensemble one;
    one.members.push_back(sample_field(om, member_seed(c.seed + 1, i)));
    one.seeds.push_back(member_seed(c.seed + 1, i));
    const auto& v = one.members.front().values;
    for (double s : s_values) {
      for (double h : h_values) {
        for (const auto& [a, b] : ab) {
          const auto r = stroock_varopoulos_check(one, a, b, h, s);
          std::vector<double> F(v.size()), G(v.size()), A(v.size());
          double scale = 0.0;
          for (std::size_t x = 0; x < v.size(); ++x) {
            const double sg = (v[x] > 0.0) - (v[x] < 0.0);
            F[x] = sg * std::pow(std::abs(v[x]), a);
            G[x] = sg * std::pow(std::abs(v[x]), b);
            A[x] = std::abs(v[x]);
            scale += A[x] * A[x] / static_cast<double>(v.size());
          }
          const auto lhs = two_point(og, F, G, h, s);
          const auto rhs = two_point(og, A, A, h, s);
          const double err = std::max({std::abs(r.lhs - lhs.increment), std::abs(lhs.increment - lhs.pair_form),
                                       std::abs(r.rhs - a * b * rhs.increment),
                                       std::abs(rhs.increment - rhs.pair_form)}) /
                             scale;
          worst_rel = std::max(worst_rel, err);
          otab.row().add(i).add(s).add(h).add(a).add(b).add(r.lhs).add(lhs.increment).add(lhs.pair_form).add(r.rhs)
              .add(a * b * rhs.increment).add(err).add(err <= oracle_tol);
        }
      }
    }
  }
  res.tables.emplace_back("stroock_varopoulos_oracle", std::move(otab));
  res.check("brute-force two-point sums agree with the spectral evaluation on n = " + std::to_string(og.n()),
            worst_rel <= oracle_tol, "worst relative error " + num(worst_rel));
  return res;
}

ExperimentResult solver_cross_validation(const ResolvedConfig& c, int workers) {
  ExperimentResult res;
  const double factor = param<double>(c, "discrepancy_factor");
  const auto refinements = param<std::vector<int>>(c, "refinement_steps");
  const auto range = param<std::array<double, 2>>(c, "ratio_range");
  if (refinements.size() != 3) throw ConfigError("params.refinement_steps needs three step counts");
  const double t_end = c.solver.time_grid.back();
  struct Outcome {
    double discrepancy = 0.0;
    double coarse = 0.0, fine = 0.0;  // successive step_solve differences at t_end
  };
  const auto outcomes = over_members<Outcome>(c, workers, "cross-validation", res,
                                              [&](std::size_t, const FieldRealization& u0) {
    Outcome o;
    auto [pic, diag] = picard_solve(u0, c.nonlinearity, c.solver);
    if (!diag.converged) throw NumericError("Picard did not reach tol");
    const auto st = step_solve(u0, c.nonlinearity, c.solver);
    o.discrepancy = rms_diff(pic.final().values, st.final().values);
    std::vector<std::vector<double>> finals;
    for (int steps : refinements) {
      SolverConfig cfg = c.solver;
      cfg.time_grid = SolverConfig::uniform_time_grid(t_end, steps);
      finals.push_back(step_solve(u0, c.nonlinearity, cfg).final().values);
    }
    o.coarse = rms_diff(finals[0], finals[1]);
    o.fine = rms_diff(finals[1], finals[2]);
    return o;
  });
  Table tab({"member", "picard_step_discrepancy", "diff_coarse", "diff_fine", "ratio", "pass"});
  bool disc_ok = !outcomes.empty(), ratio_ok = !outcomes.empty();
  double worst_disc = 0.0, lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    const double ratio = o.coarse / o.fine;
    const bool d_ok = o.discrepancy <= factor * c.solver.tol;
    const bool r_ok = ratio >= range[0] && ratio <= range[1];
    disc_ok = disc_ok && d_ok;
    ratio_ok = ratio_ok && r_ok;
    worst_disc = std::max(worst_disc, o.discrepancy);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    tab.row().add(i).add(o.discrepancy).add(o.coarse).add(o.fine).add(ratio).add(d_ok && r_ok);
  }
  res.tables.emplace_back("cross_validation", std::move(tab));
  res.check("final-time RMS |picard - step| <= " + num(factor) + " tol", disc_ok, "worst " + num(worst_disc));
  res.check("step_solve self-convergence ratio in [" + num(range[0]) + ", " + num(range[1]) + "]", ratio_ok,
            "ratios in [" + num(lo) + ", " + num(hi) + "]");
  check_no_flags(res);
  return res;
}

std::string serialize_tables(const ExperimentResult& r) {
  std::string all;
  for (const auto& [name, table] : r.tables) all += "## " + name + "\n" + table.to_tsv();
  return all;
}

ExperimentResult replay_determinism(const ResolvedConfig& c, int) {
  ExperimentResult res;
  const auto inner_name = param<std::string>(c, "inner");
  if (inner_name == "replay-determinism") throw ConfigError("replay-determinism cannot replay itself");
  json inner = {{"experiment", inner_name}, {"members", param<std::size_t>(c, "inner_members")}, {"seed", c.seed}};
  const auto cfg = resolve_config(inner);
  Table tab({"workers", "fnv1a", "identical"});
  std::string reference;
  bool identical = true;
  for (int w : param<std::vector<int>>(c, "worker_counts")) {
    const auto text = serialize_tables(run_resolved(cfg, w));
    if (reference.empty()) reference = text;
    const bool same = text == reference;
    identical = identical && same;
    tab.row().add(w).add(hex64(fnv1a(text))).add(same);
  }
  res.tables.emplace_back("replay", std::move(tab));
  res.check("tables byte-identical across worker counts", identical, inner_name);
  return res;
}

ExperimentResult zero_nonlinearity(const ResolvedConfig& c, int workers) {
  ExperimentResult res;
  const double tol = param<double>(c, "match_tol");
  struct Outcome {
    double error = 0.0;
    int iterations = 0;
  };
  const auto outcomes = over_members<Outcome>(c, workers, "zero", res, [&](std::size_t, const FieldRealization& u0) {
    auto [traj, diag] = picard_solve(u0, NonlinearitySpec::zero(), c.solver);
    const auto lin = linear_solution(u0, c.solver);
    double err = 0.0;
    for (std::size_t j = 0; j < traj.size(); ++j) err = std::max(err, sup_diff(traj.states[j].values, lin.states[j].values));
    return Outcome{err, diag.iterations};
  });
  Table tab({"member", "sup_error", "iterations", "pass"});
  bool ok = !outcomes.empty();
  double worst = 0.0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const bool pass = outcomes[i].error <= tol && outcomes[i].iterations == 1;
    ok = ok && pass;
    worst = std::max(worst, outcomes[i].error);
    tab.row().add(i).add(outcomes[i].error).add(outcomes[i].iterations).add(pass);
  }
  res.tables.emplace_back("zero_nonlinearity", std::move(tab));
  res.check("picard_solve with f = 0 equals the semigroup to " + num(tol) + " in one iteration", ok,
            "worst " + num(worst));
  check_no_flags(res);
  return res;
}

// ---------------------------------------------------------------------------

json base_defaults(const char* name, std::uint64_t seed) {
  return {{"experiment", name},
          {"grid", {{"dim", 1}, {"n", 512}, {"len", 2.0 * kPi}}},
          {"measure", {{"family", "gaussian-bump"}, {"width", 1.0}, {"mass", 1.0}, {"mean", 0.0}}},
          {"nonlinearity", {{"kind", "zero"}, {"cutoff", nullptr}}},
          {"solver",
           {{"s", 1.0}, {"z", {1.0}}, {"t_end", 2.0}, {"steps", 200}, {"K", 1.0}, {"tol", 1e-8}, {"max_iter", 50},
            {"dealias", "auto"}}},
          {"members", 2000},
          {"seed", seed},
          {"raw_members", 8},
          {"params", json::object()}};
}

std::vector<ExperimentInfo> build_registry() {
  std::vector<ExperimentInfo> r;

  {
    auto d = base_defaults("linear-spectral-decay", 1001);
    d["measure"] = {{"family", "two-mode"}, {"mode", {3}}, {"mass", 1.0}, {"mean", 0.0}};
    d["params"] = {{"s_values", {0.6, 0.75, 1.0}}, {"t_values", {0.1, 0.5, 1.0}}, {"z_max", 3.0}};
    r.push_back({"linear-spectral-decay", "empirical spectrum of P_t u0 against exp(-2t|k|^{2s}) sigma",
                 "Spec(P_t u0) = exp(-2t|xi|^{2s}) sigma(dxi)", 1, d, linear_spectral_decay});
  }
  {
    auto d = base_defaults("semigroup-contraction", 1002);
    d["measure"] = {{"family", "power-law"}, {"nu", 1.0}, {"mass", 1.0}, {"mean", 0.0}};
    d["members"] = 4;
    d["params"] = {{"s_values", {0.6, 0.75, 1.0}},
                   {"t_pairs", {{0.01, 0.1}, {0.1, 0.5}, {0.5, 1.0}, {1.0, 1.0}}},
                   {"semigroup_tol", 1e-12},
                   {"norm_t_min", 1e-3},
                   {"norm_t_max", 10.0},
                   {"norm_points", 20}};
    r.push_back({"semigroup-contraction", "semigroup law and L2 contraction of P_t",
                 "P_t P_s = P_{t+s} and ||P_t u||_2 <= ||u||_2", 2, d, semigroup_contraction});
  }
  {
    auto d = base_defaults("kernel-identities", 1003);
    d["members"] = 1;
    d["raw_members"] = 0;
    d["params"] = {{"s_values", {0.6, 0.75, 1.0}},
                   {"t_values", {0.5, 1.0, 2.0}},
                   {"mass_tol", 1e-8},
                   {"scaling_s", 0.75},
                   {"scaling_t_values", {0.5, 1.0, 2.0}},
                   {"scaling_len", 8.0 * kPi},
                   {"scaling_grids", {{1, 256}, {2, 64}}},
                   {"scaling_tol", 1e-6},
                   {"gaussian_t_values", {0.5, 1.0, 2.0}},
                   {"gaussian_len_factor", 20.0},
                   {"gaussian_n", 256},
                   {"gaussian_tol", 1e-8}};
    r.push_back({"kernel-identities", "unit mass, scaling law and Gaussian case of the kernel p_t",
                 "int p_t = 1, p_t(x) = t^{-d/2s} p_1(t^{-1/2s} x), p_t Gaussian for s = 1", 3, d, kernel_identities});
  }
  {
    auto d = base_defaults("gradient-bound", 1004);
    d["members"] = 1;
    d["raw_members"] = 0;
    d["params"] = {{"s_values", {0.6, 0.75, 1.0}}, {"t_min", 1e-3}, {"t_max", 10.0}, {"t_points", 41},
                   {"dims", {1, 2}},              {"n_2d", 64},     {"random_fields", 8}, {"rel_slack", 1e-12}};
    r.push_back({"gradient-bound", "L2 amplification of grad_z P_t against c_s t^{-1/2s}",
                 "||grad_z P_t u||_2 <= c_s t^{-1/2s} ||u||_2", 4, d, gradient_bound});
  }
  {
    auto d = base_defaults("picard-contraction", 1005);
    d["nonlinearity"] = {{"kind", "tanh"}, {"L", 0.1}, {"cutoff", nullptr}};
    d["members"] = 200;
    d["params"] = {{"s_values", {0.75, 1.0}}, {"K_multipliers", {2.0, 4.0}}, {"ratio_factor", 1.1},
                   {"iteration_cap", 30}};
    r.push_back({"picard-contraction", "Picard residual ratios against rho(K) for K = 2 K0 and 4 K0",
                 "||F(u) - F(v)||_K <= c_s L K^{-1+1/2s} Gamma(1-1/2s) ||u - v||_K", 5, d, picard_contraction});
  }
  {
    auto d = base_defaults("moment-monotonicity", 1006);
    d["grid"]["len"] = 8.0 * kPi;
    d["measure"] = {{"family", "gaussian-bump"}, {"width", 0.5}, {"mass", 1.0}, {"mean", 0.0}};
    d["nonlinearity"] = {{"kind", "burgers"}, {"cutoff", nullptr}};
    d["solver"]["steps"] = 100;
    d["solver"]["max_iter"] = 400;
    d["params"] = {{"ladder", {1.0, 2.0, 4.0, 8.0}}, {"orders", {2.0, 4.0, 6.0}}, {"z_max", 3.0}};
    r.push_back({"moment-monotonicity", "E|u(t)|^p along cut-off Burgers solutions",
                 "E|u(t)|^p <= E|u_0|^p", 6, d, moment_monotonicity});
  }
  {
    auto d = base_defaults("energy-dissipation", 1007);
    d["grid"]["len"] = 8.0 * kPi;
    d["measure"] = {{"family", "gaussian-bump"}, {"width", 0.5}, {"mass", 1.0}, {"mean", 0.0}};
    d["solver"]["steps"] = 400;
    d["members"] = 5000;
    d["params"] = {{"rel_tol", 0.05},
                   {"z_max", 3.0},
                   {"solver", "step"},
                   {"nonlinear_runs", json::array({json{{"kind", "tanh"}, {"L", 1.0}, {"cutoff", nullptr}},
                                                    json{{"kind", "burgers"}, {"cutoff", 8.0}}})}};
    r.push_back({"energy-dissipation", "d/dt E u^2 against -2 E((-Delta)^{s/2} u)^2",
                 "d/dt E u(t)^2 = -2 E((-Delta)^{s/2} u(t))^2", 7, d, energy_dissipation});
  }
  {
    auto d = base_defaults("orthogonality", 1008);
    d["params"] = {{"pairs", json::array({json::array({"id", "id"}), json::array({"burgers", "id"}), json::array({"tanh", "cube"})})}, {"z_max", 3.0}};
    r.push_back({"orthogonality", "Monte Carlo z-scores of E[(grad_z f(u)) g(u)]",
                 "E grad u(x) v(x) = 0 for v = g(u)", 8, d, orthogonality});
  }
  {
    auto d = base_defaults("cutoff-ladder", 1009);
    d["grid"]["len"] = 8.0 * kPi;
    d["measure"] = {{"family", "gaussian-bump"}, {"width", 0.5}, {"mass", 1.0}, {"mean", 0.0}};
    d["nonlinearity"] = {{"kind", "burgers"}, {"cutoff", nullptr}};
    d["solver"]["steps"] = 100;
    d["solver"]["max_iter"] = 400;
    d["members"] = 200;
    d["params"] = {{"ladder", {1.0, 2.0, 4.0, 8.0}}, {"amplitude", 2.5}, {"bound", 6.0}};
    r.push_back({"cutoff-ladder", "pairwise distances between cut-off ladder solutions",
                 "u^n is a Cauchy sequence as the cut-off level n grows", 9, d, cutoff_ladder});
  }
  {
    auto d = base_defaults("stroock-varopoulos", 1010);
    d["members"] = 1000;
    d["params"] = {{"ab", {{0.5, 1.5}, {1.0, 1.0}}}, {"h_values", {0.05, 0.2}}, {"s_values", {0.6, 1.0}},
                   {"z_max", 3.0},                   {"oracle_n", 16},           {"oracle_width", 2.0},
                   {"oracle_members", 4},            {"oracle_tol", 1e-12}};
    r.push_back({"stroock-varopoulos", "kernel-level convexity estimate for theta|w|^a, theta|w|^b",
                 "E P_h theta|w|^a theta|w|^b <= ab E P_h|w| |w|, a + b = 2 (increment form)", 10, d,
                 stroock_varopoulos});
  }
  {
    auto d = base_defaults("solver-cross-validation", 1011);
    d["nonlinearity"] = {{"kind", "tanh"}, {"L", 1.0}, {"cutoff", nullptr}};
    d["solver"]["t_end"] = 1.0;
    d["solver"]["steps"] = 200;
    d["solver"]["max_iter"] = 100;
    d["members"] = 8;
    d["params"] = {{"discrepancy_factor", 10.0}, {"refinement_steps", {50, 100, 200}}, {"ratio_range", {3.0, 5.0}}};
    r.push_back({"solver-cross-validation", "picard_solve against step_solve and step_solve self-convergence",
                 "u(t+h) = P_h u(t) + int_t^{t+h} grad P_{t+h-tau} f(u(tau)) dtau", 11, d, solver_cross_validation});
  }
  {
    auto d = base_defaults("replay-determinism", 1012);
    d["members"] = 1;
    d["raw_members"] = 0;
    d["params"] = {{"inner", "linear-spectral-decay"}, {"inner_members", 200}, {"worker_counts", {1, 3}}};
    r.push_back({"replay-determinism", "identical tables across worker counts",
                 "(config, seed) determines every table byte for byte", 12, d, replay_determinism});
  }
  {
    auto d = base_defaults("zero-nonlinearity", 1013);
    d["members"] = 16;
    d["params"] = {{"match_tol", 1e-10}};
    r.push_back({"zero-nonlinearity", "picard_solve with f = 0 against the linear semigroup",
                 "F(u)(t) = P_t u(0) when f = 0", 0, d, zero_nonlinearity});
  }
  return r;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1])});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

void overlay(json& target, const json& patch, const std::string& where) {
  for (const auto& [key, value] : patch.items()) {
    if (!target.contains(key)) {
      std::vector<std::string> known;
      for (const auto& [k, v] : target.items()) known.push_back(k);
      throw ConfigError(where + ": unknown key \"" + key + "\"; did you mean \"" + nearest_name(key, known) + "\"?");
    }
    target[key] = value;
  }
}

}  // namespace

bool ExperimentResult::passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

void ExperimentResult::check(std::string name, bool passed, std::string detail) {
  checks.push_back({std::move(name), passed, std::move(detail)});
}

const std::vector<ExperimentInfo>& experiment_registry() {
  static const std::vector<ExperimentInfo> registry = build_registry();
  return registry;
}

std::string nearest_name(std::string_view name, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = std::numeric_limits<std::size_t>::max();
  for (const auto& c : candidates) {
    const auto d = edit_distance(name, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

const ExperimentInfo& find_experiment(std::string_view name) {
  std::vector<std::string> names;
  for (const auto& e : experiment_registry()) {
    if (e.name == name) return e;
    names.push_back(e.name);
  }
  throw ConfigError("unknown experiment \"" + std::string(name) + "\"; did you mean \"" + nearest_name(name, names) +
                    "\"?");
}

ResolvedConfig resolve_config(const json& user) {
  if (!user.is_object()) throw ConfigError("config: expected a JSON object");
  if (!user.contains("experiment") || !user.at("experiment").is_string())
    throw ConfigError("config: missing string key \"experiment\"");
  const auto& info = find_experiment(user.at("experiment").get<std::string>());
  json echo = info.defaults;
  for (const auto& [key, value] : user.items()) {
    if (!echo.contains(key)) {
      std::vector<std::string> known;
      for (const auto& [k, v] : echo.items()) known.push_back(k);
      throw ConfigError("config: unknown key \"" + key + "\"; did you mean \"" + nearest_name(key, known) + "\"?");
    }
    if (key == "measure" && value.is_object() && value.contains("family") &&
        value.at("family") != echo["measure"].at("family")) {
      echo[key] = value;
    } else if (key == "nonlinearity" && value.is_object() && value.contains("kind") &&
               value.at("kind") != echo["nonlinearity"].at("kind")) {
      echo[key] = value;
    } else if (key == "solver" && value.is_object() && value.contains("time_grid")) {
      echo[key].erase("t_end");
      echo[key].erase("steps");
      overlay(echo[key], value, key);
    } else if (value.is_object() && echo[key].is_object()) {
      overlay(echo[key], value, key);
    } else {
      echo[key] = value;
    }
  }

  ResolvedConfig c;
  c.experiment = info.name;
  c.grid = grid_from_json(echo.at("grid"));
  c.measure = measure_from_json(echo.at("measure"), c.grid);
  c.measure.validate();
  c.nonlinearity = nonlinearity_from_json(echo.at("nonlinearity"));
  c.solver = solver_from_json(echo.at("solver"));
  c.solver.validate(c.grid.dim());
  try {
    const auto members = echo.at("members").get<long long>();
    if (members < 1) throw ConfigError("config: members must be >= 1");
    c.members = static_cast<std::size_t>(members);
    c.seed = echo.at("seed").get<std::uint64_t>();
    const auto raw = echo.at("raw_members").get<long long>();
    if (raw < 0) throw ConfigError("config: raw_members must be >= 0");
    c.raw_members = static_cast<std::size_t>(raw);
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config: members, seed and raw_members must be nonnegative integers");
  }
  c.params = echo.at("params");
  c.echo = echo;
  return c;
}

ExperimentResult run_resolved(const ResolvedConfig& config, int workers) {
  auto result = find_experiment(config.experiment).run(config, workers);
  if (config.raw_members > 0)
    result.raw_initial = sample_ensemble(config.measure, config.seed, std::min(config.raw_members, config.members), workers);
  return result;
}

}  // namespace fracconv

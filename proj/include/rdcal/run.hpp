#pragma once

// Orchestration behind the CLI subcommands: build the experiment objects
// from a RunConfig, run the requested stage, and leave every artifact on
// disk under out.dir.

#include <iostream>
#include <utility>
#include <vector>

#include "rdcal/config.hpp"

namespace rdcal {

struct Experiment {
  GridPtr grid;
  ScalarField u0;
  TimeGrid time;
  ParamPair params;      // from param.* (truth / verification base point)
  ParamPair init_guess;  // calibration start
  RegOperator reg_op_d;
  RegOperator reg_op_g;
};

namespace detail {

inline ScalarField build_field(const GridPtr& grid, const FieldSpec& spec,
                               const std::string& what) {
  if (spec.kind == "constant") return ScalarField(grid, spec.value);
  ScalarField f = read_field(grid, spec.file);
  require(all_finite(f), what + ": non-finite value in " +
                             spec.file.string());
  return f;
}

inline ScalarField build_initial_condition(const GridPtr& grid,
                                           const RunConfig& cfg) {
  if (cfg.ic_kind == "file") {
    ScalarField u0 = read_field(grid, cfg.ic_file);
    require(min_value(u0) >= 0.0 && max_value(u0) <= 1.0,
            "ic.file: initial condition must lie in [0, 1]");
    return u0;
  }
  const double w2 = 2.0 * cfg.ic_width * cfg.ic_width;
  return field_from_function(grid, [&](double x, double y) {
    const double dx = x - cfg.ic_center_x;
    const double dy = y - cfg.ic_center_y;
    return cfg.ic_amplitude * std::exp(-(dx * dx + dy * dy) / w2);
  });
}

}  // namespace detail

inline GridPtr build_grid_from_config(const RunConfig& cfg) {
  if (cfg.grid_shape == "file") return read_grid(cfg.mask_file);
  if (cfg.grid_shape == "disk") {
    return build_grid(cfg.nx, cfg.ny, cfg.hx, cfg.hy,
                      disk_mask(cfg.nx, cfg.ny, cfg.hx, cfg.hy,
                                cfg.disk_radius));
  }
  return build_grid(cfg.nx, cfg.ny, cfg.hx, cfg.hy,
                    full_mask(cfg.nx, cfg.ny));
}

inline Experiment build_experiment(const RunConfig& cfg) {
  Experiment exp;
  exp.grid = build_grid_from_config(cfg);
  exp.u0 = detail::build_initial_condition(exp.grid, cfg);
  exp.time = TimeGrid(cfg.final_time, cfg.steps);

  exp.params = ParamPair{detail::build_field(exp.grid, cfg.param_d, "param.d"),
                         detail::build_field(exp.grid, cfg.param_g,
                                             "param.g")};
  exp.params.validate("param.*");

  exp.reg_op_d = RegOperator::create(
      cfg.reg_d_gamma, cfg.reg_d_delta,
      detail::build_field(exp.grid, cfg.reg_d_mean, "reg.d.mean"));
  exp.reg_op_g = RegOperator::create(
      cfg.reg_g_gamma, cfg.reg_g_delta,
      detail::build_field(exp.grid, cfg.reg_g_mean, "reg.g.mean"));

  exp.init_guess = ParamPair{
      cfg.init_d ? detail::build_field(exp.grid, *cfg.init_d, "init.d")
                 : exp.reg_op_d.mean,
      cfg.init_g ? detail::build_field(exp.grid, *cfg.init_g, "init.g")
                 : exp.reg_op_g.mean};
  exp.init_guess.validate("init.*");
  return exp;
}

/// Load the observation bundle when obs.dir is set, otherwise synthesize
/// from the configured parameters.
inline ObservationSet build_observations(const Experiment& exp,
                                         const RunConfig& cfg) {
  if (!cfg.obs_dir.empty()) return read_observations(exp.grid, cfg.obs_dir);
  return generate_synthetic(exp.params, exp.u0, exp.time, cfg.obs_steps,
                            cfg.obs_sigma, cfg.obs_seed);
}

inline ProblemSetup build_problem_setup(const Experiment& exp,
                                        const ObservationSet& obs) {
  return ProblemSetup{exp.u0, exp.time, obs, exp.reg_op_d, exp.reg_op_g};
}

/// forward: trajectory dump (every dump_stride-th step plus the final one).
inline void run_forward(const RunConfig& cfg) {
  const Experiment exp = build_experiment(cfg);
  const StateTrajectory traj = solve_forward(exp.params, exp.u0, exp.time);
  std::vector<int> steps;
  for (int k = 0; k <= exp.time.steps; k += cfg.dump_stride)
    steps.push_back(k);
  if (steps.back() != exp.time.steps) steps.push_back(exp.time.steps);
  write_trajectory(cfg.out_dir / "trajectory", traj, steps);
  std::cout << "forward: wrote " << steps.size() << " snapshots to "
            << (cfg.out_dir / "trajectory").string() << '\n';
}

/// synth: observation bundle from the configured truth parameters.
inline void run_synth(const RunConfig& cfg) {
  const Experiment exp = build_experiment(cfg);
  const ObservationSet obs = generate_synthetic(
      exp.params, exp.u0, exp.time, cfg.obs_steps, cfg.obs_sigma,
      cfg.obs_seed);
  write_observations(cfg.out_dir / "observations", obs, cfg.obs_seed);
  std::cout << "synth: wrote " << obs.steps.size() << " observations to "
            << (cfg.out_dir / "observations").string() << '\n';
}

/// calibrate: Newton-CG from the configured initial guess; history CSV and
/// final parameter fields land in out.dir. Returns the result so callers
/// (and the CLI) can decide the exit status.
inline CalibrationResult run_calibrate(const RunConfig& cfg) {
  const Experiment exp = build_experiment(cfg);
  const ObservationSet obs = build_observations(exp, cfg);
  const CalibrationResult result =
      newton_cg(exp.init_guess, exp.u0, exp.time, obs, exp.reg_op_d,
                exp.reg_op_g, cfg.opt);
  write_history_csv(cfg.out_dir / "history.csv", result.history);
  write_field(cfg.out_dir / "param_D.txt", result.params_final.D);
  write_field(cfg.out_dir / "param_G.txt", result.params_final.G);
  std::cout << "calibrate: " << (result.converged ? "converged" : "stopped")
            << " (" << result.reason << ")";
  if (!result.history.empty()) {
    std::cout << " after " << result.history.back().iter
              << " iterations, final cost "
              << format_double(result.history.back().cost);
  }
  std::cout << '\n';
  return result;
}

/// verify-grad: finite-difference gradient check at the configured
/// parameter point; CSV of (epsilon, r) plus the fitted slope on stdout.
inline FDCheckReport run_verify_grad(const RunConfig& cfg) {
  const Experiment exp = build_experiment(cfg);
  const ObservationSet obs = build_observations(exp, cfg);
  const ProblemSetup setup = build_problem_setup(exp, obs);
  const FDCheckReport report =
      fd_gradient_check(exp.params, setup, cfg.fd_epsilons, cfg.fd_seed,
                        cfg.fd_fit_lo, cfg.fd_fit_hi);
  write_fd_csv(cfg.out_dir / "fd_gradient.csv", report);
  std::cout << "verify-grad: slope " << format_double(report.slope)
            << " over [" << format_double(cfg.fd_fit_lo) << ", "
            << format_double(cfg.fd_fit_hi) << "], csv "
            << (cfg.out_dir / "fd_gradient.csv").string() << '\n';
  return report;
}

/// verify-hess: finite-difference check of the Hessian action plus the
/// symmetry diagnostic.
inline std::pair<FDCheckReport, double> run_verify_hess(const RunConfig& cfg) {
  const Experiment exp = build_experiment(cfg);
  const ObservationSet obs = build_observations(exp, cfg);
  const ProblemSetup setup = build_problem_setup(exp, obs);
  const FDCheckReport report =
      fd_hessian_check(exp.params, setup, cfg.fd_epsilons, cfg.fd_seed,
                       cfg.fd_fit_lo, cfg.fd_fit_hi);
  write_fd_csv(cfg.out_dir / "fd_hessian.csv", report);
  const double asym = hessian_symmetry_check(exp.params, setup,
                                             cfg.fd_symmetry_pairs,
                                             cfg.fd_seed);
  {
    std::ofstream out = detail::open_out(cfg.out_dir /
                                         "hessian_symmetry.txt");
    out << "pairs " << cfg.fd_symmetry_pairs << '\n';
    out << "seed " << cfg.fd_seed << '\n';
    out << "max_relative_asymmetry " << format_double(asym) << '\n';
  }
  std::cout << "verify-hess: slope " << format_double(report.slope)
            << ", max relative asymmetry " << format_double(asym) << ", csv "
            << (cfg.out_dir / "fd_hessian.csv").string() << '\n';
  return {report, asym};
}

}  // namespace rdcal

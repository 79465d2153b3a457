#pragma once

// Finite-difference verification of the gradient and of the Hessian action,
// plus a Hessian symmetry diagnostic. One-sided differences are used on
// purpose: the residual then decays linearly in epsilon until the
// floating-point floor, and the fitted log-log slope should sit near one.

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "rdcal/hessian.hpp"

namespace rdcal {

/// Everything that defines the objective except the parameter point.
struct ProblemSetup {
  ScalarField u0;
  TimeGrid time;
  ObservationSet obs;
  RegOperator reg_op_d;
  RegOperator reg_op_g;
};

struct FDCheckReport {
  std::vector<double> epsilons;   // strictly decreasing
  std::vector<double> residuals;  // r(eps), nonnegative
  double slope = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t direction_seed = 0;
};

inline std::vector<double> default_epsilons() {
  return {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10};
}

/// Least-squares slope of log10(r) against log10(eps) over the window
/// [lo, hi]; NaN when fewer than two usable points fall inside.
inline double fit_loglog_slope(const std::vector<double>& epsilons,
                               const std::vector<double>& residuals,
                               double lo, double hi) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    const double eps = epsilons[i];
    if (eps < lo * (1.0 - 1e-9) || eps > hi * (1.0 + 1e-9)) continue;
    if (!(residuals[i] > 0.0)) continue;
    const double x = std::log10(eps);
    const double y = std::log10(residuals[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace detail {

inline void check_epsilons(const std::vector<double>& epsilons) {
  require(!epsilons.empty(), "fd check: empty epsilon sweep");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    require(epsilons[i] > 0.0 && epsilons[i] < 1.0,
            "fd check: epsilons must lie in (0, 1)");
    if (i > 0)
      require(epsilons[i] < epsilons[i - 1],
              "fd check: epsilons must be strictly decreasing");
  }
}

inline FieldPair sampled_direction(const GridPtr& grid, std::uint64_t seed) {
  GaussianSampler sampler(seed);
  FieldPair dir;
  dir.D = white_noise_field(grid, sampler);
  dir.G = white_noise_field(grid, sampler);
  return dir;
}

inline ParamPair shifted(const ParamPair& base, double eps,
                         const FieldPair& dir) {
  ParamPair out = base;
  out.D.axpy(eps, dir.D);
  out.G.axpy(eps, dir.G);
  return out;
}

}  // namespace detail

/// r(eps) = | [J(theta0 + eps dir) - J(theta0)] / eps - <g(theta0), dir> |
/// for a white-noise direction drawn from `seed`.
inline FDCheckReport fd_gradient_check(const ParamPair& params0,
                                       const ProblemSetup& setup,
                                       const std::vector<double>& epsilons,
                                       std::uint64_t seed,
                                       double fit_lo = 1e-5,
                                       double fit_hi = 1e-2) {
  detail::check_epsilons(epsilons);
  const FieldPair dir = detail::sampled_direction(params0.D.grid(), seed);

  const StateTrajectory traj = solve_forward(params0, setup.u0, setup.time);
  const AdjointTrajectory adj = solve_adjoint(traj, params0, setup.obs);
  const GradientPair grad =
      assemble_gradient(traj, adj, params0, setup.reg_op_d, setup.reg_op_g);
  const double directional = inner(grad, dir);
  const double cost0 = misfit_cost(traj, setup.obs) +
                       reg_cost(params0.D, setup.reg_op_d) +
                       reg_cost(params0.G, setup.reg_op_g);

  FDCheckReport report;
  report.direction_seed = seed;
  report.epsilons = epsilons;
  report.residuals.reserve(epsilons.size());
  for (double eps : epsilons) {
    const ParamPair shifted = detail::shifted(params0, eps, dir);
    const double cost_eps = total_cost(shifted, setup.u0, setup.time,
                                       setup.obs, setup.reg_op_d,
                                       setup.reg_op_g);
    report.residuals.push_back(
        std::abs((cost_eps - cost0) / eps - directional));
  }
  report.slope =
      fit_loglog_slope(report.epsilons, report.residuals, fit_lo, fit_hi);
  return report;
}

/// r(eps) = || [g(theta0 + eps dir) - g(theta0)] / eps - H dir || in the
/// joint (D, G) norm.
inline FDCheckReport fd_hessian_check(const ParamPair& params0,
                                      const ProblemSetup& setup,
                                      const std::vector<double>& epsilons,
                                      std::uint64_t seed,
                                      double fit_lo = 1e-5,
                                      double fit_hi = 1e-2,
                                      HessianOptions options = {}) {
  detail::check_epsilons(epsilons);
  const FieldPair dir = detail::sampled_direction(params0.D.grid(), seed);

  const StateTrajectory traj = solve_forward(params0, setup.u0, setup.time);
  const AdjointTrajectory adj = solve_adjoint(traj, params0, setup.obs);
  const GradientPair grad0 =
      assemble_gradient(traj, adj, params0, setup.reg_op_d, setup.reg_op_g);
  const HessianContext ctx =
      make_hessian_context(params0, traj, adj, setup.obs, setup.reg_op_d,
                           setup.reg_op_g, options);
  const GradientPair hess_dir = apply_hessian(ctx, dir);

  FDCheckReport report;
  report.direction_seed = seed;
  report.epsilons = epsilons;
  report.residuals.reserve(epsilons.size());
  for (double eps : epsilons) {
    const ParamPair shifted = detail::shifted(params0, eps, dir);
    const StateTrajectory traj_eps =
        solve_forward(shifted, setup.u0, setup.time);
    const AdjointTrajectory adj_eps =
        solve_adjoint(traj_eps, shifted, setup.obs);
    const GradientPair grad_eps = assemble_gradient(
        traj_eps, adj_eps, shifted, setup.reg_op_d, setup.reg_op_g);
    FieldPair diff = grad_eps;
    diff -= grad0;
    diff *= 1.0 / eps;
    diff -= hess_dir;
    report.residuals.push_back(norm(diff));
  }
  report.slope =
      fit_loglog_slope(report.epsilons, report.residuals, fit_lo, fit_hi);
  return report;
}

/// max over pairs of |<Hv, w> - <v, Hw>| / (||v|| ||w||). Certifies the
/// self-adjointness of the assembled Hessian action; the sign of the
/// second-order reaction coupling is exactly what this test adjudicates.
inline double hessian_symmetry_check(const ParamPair& params0,
                                     const ProblemSetup& setup, int n_pairs,
                                     std::uint64_t seed,
                                     HessianOptions options = {}) {
  require(n_pairs >= 1, "symmetry check: n_pairs must be >= 1");
  const StateTrajectory traj = solve_forward(params0, setup.u0, setup.time);
  const AdjointTrajectory adj = solve_adjoint(traj, params0, setup.obs);
  const HessianContext ctx =
      make_hessian_context(params0, traj, adj, setup.obs, setup.reg_op_d,
                           setup.reg_op_g, options);

  GaussianSampler sampler(seed);
  const GridPtr& grid = params0.D.grid();
  double worst = 0.0;
  for (int i = 0; i < n_pairs; ++i) {
    FieldPair v{white_noise_field(grid, sampler),
                white_noise_field(grid, sampler)};
    FieldPair w{white_noise_field(grid, sampler),
                white_noise_field(grid, sampler)};
    const FieldPair hv = apply_hessian(ctx, v);
    const FieldPair hw = apply_hessian(ctx, w);
    const double asym = std::abs(inner(hv, w) - inner(v, hw)) /
                        (norm(v) * norm(w));
    worst = std::max(worst, asym);
  }
  return worst;
}

}  // namespace rdcal

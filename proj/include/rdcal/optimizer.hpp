#pragma once

// Globalized inexact Newton-CG. Each outer iteration computes one gradient
// (forward + adjoint pair), solves the Newton system approximately with CG
// under an Eisenstat-Walker forcing tolerance (negative curvature exits with
// the current iterate), and globalizes with Armijo backtracking plus a
// positivity floor on D. An optional log reparameterization optimizes
// log D, log G with the exact chain rule.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rdcal/hessian.hpp"

namespace rdcal {

enum class ParamMode { direct, log_reparam };

enum class CgExit { tolerance, negative_curvature, max_iters };

inline const char* to_string(CgExit e) {
  switch (e) {
    case CgExit::tolerance: return "tolerance";
    case CgExit::negative_curvature: return "negative_curvature";
    case CgExit::max_iters: return "max_iters";
  }
  return "unknown";
}

struct NewtonCGConfig {
  int max_newton_iters = 50;
  double grad_rtol = 1e-6;
  double grad_atol = 1e-12;
  int cg_max_iters = 200;
  double forcing_exponent = 0.5;  // Eisenstat-Walker schedule
  double forcing_cap = 0.5;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  int max_backtracks = 25;
  double param_floor_d = 1e-10;
  ParamMode mode = ParamMode::direct;
  bool gauss_newton = false;
  bool precondition = false;  // CG preconditioned by the inverse reg block

  void validate() const {
    require(max_newton_iters >= 0, "optimizer: max_newton_iters < 0");
    require(grad_rtol > 0.0 && grad_atol > 0.0,
            "optimizer: gradient tolerances must be positive");
    require(cg_max_iters >= 1, "optimizer: cg_max_iters must be >= 1");
    require(armijo_c > 0.0 && armijo_c < 1.0,
            "optimizer: armijo_c must lie in (0, 1)");
    require(backtrack_factor > 0.0 && backtrack_factor < 1.0,
            "optimizer: backtrack_factor must lie in (0, 1)");
    require(max_backtracks >= 1, "optimizer: max_backtracks must be >= 1");
    require(param_floor_d > 0.0, "optimizer: param_floor_d must be > 0");
  }
};

struct IterationRecord {
  int iter = 0;
  double cost = 0.0;
  double misfit = 0.0;
  double reg_d = 0.0;
  double reg_g = 0.0;
  double grad_norm = 0.0;
  int cg_iters = 0;
  std::string cg_exit = "none";
  double alpha = 0.0;
};

struct CalibrationResult {
  ParamPair params_final;
  std::vector<IterationRecord> history;
  bool converged = false;
  std::string reason;
};

struct CgResult {
  FieldPair direction;
  CgExit exit = CgExit::tolerance;
  int iterations = 0;
  double rel_residual = 0.0;
};

/// CG on H s = -g in the joint (D, G) inner product, stopped at relative
/// residual <= forcing_tol, on nonpositive curvature (returning the current
/// iterate, or -g when it happens on the first iteration), or at the
/// iteration cap. The returned direction is always a descent direction.
template <class HessFn, class PrecFn>
CgResult cg_steihaug_preconditioned(HessFn&& hess, PrecFn&& prec,
                                    const GradientPair& g, double forcing_tol,
                                    int max_iters) {
  const double gnorm = norm(g);
  require(gnorm > 0.0, "cg_steihaug: zero gradient");

  FieldPair b = -1.0 * g;
  CgResult result;
  result.direction = FieldPair{ScalarField(g.D.grid(), 0.0),
                               ScalarField(g.G.grid(), 0.0)};
  FieldPair residual = b;
  FieldPair z = prec(residual);
  FieldPair d = z;
  double rz = inner(residual, z);
  for (int it = 0; it < max_iters; ++it) {
    const FieldPair h = hess(d);
    const double curvature = inner(d, h);
    if (curvature <= 0.0) {
      result.exit = CgExit::negative_curvature;
      if (it == 0) result.direction = b;  // steepest descent fallback
      result.rel_residual = norm(residual) / gnorm;
      break;
    }
    const double alpha = rz / curvature;
    result.direction.axpy(alpha, d);
    residual.axpy(-alpha, h);
    result.iterations = it + 1;
    const double res = norm(residual);
    if (res <= forcing_tol * gnorm) {
      result.exit = CgExit::tolerance;
      result.rel_residual = res / gnorm;
      break;
    }
    if (it + 1 == max_iters) {
      result.exit = CgExit::max_iters;
      result.rel_residual = res / gnorm;
      break;
    }
    z = prec(residual);
    const double rz_new = inner(residual, z);
    d *= rz_new / rz;
    d += z;
    rz = rz_new;
  }
  if (!(inner(result.direction, g) < 0.0)) result.direction = b;
  return result;
}

template <class HessFn>
CgResult cg_steihaug(HessFn&& hess, const GradientPair& g, double forcing_tol,
                     int max_iters) {
  return cg_steihaug_preconditioned(
      hess, [](const FieldPair& r) { return r; }, g, forcing_tol, max_iters);
}

/// One cost evaluation at a trial point, carrying the trajectory so an
/// accepted step does not re-run the forward solve.
struct TrialPoint {
  ParamPair params;
  StateTrajectory traj;
  CostBreakdown cost;
};

/// Armijo backtracking: the largest alpha in {1, beta, beta^2, ...} with
///   J(theta + alpha s) <= J(theta) + c alpha <g, s>,
/// rejecting any alpha whose trial point is infeasible (D at or below the
/// floor, overflow under the log map) or whose forward solve fails. Throws
/// when max_backtracks is exhausted.
template <class EvalFn>
std::pair<double, TrialPoint> armijo_linesearch(
    const FieldPair& theta, const FieldPair& direction, const GradientPair& g,
    double cost0, EvalFn&& evaluate, const NewtonCGConfig& config) {
  const double slope = inner(g, direction);
  require(slope < 0.0, "line search requires a descent direction");
  double alpha = 1.0;
  for (int bt = 0; bt < config.max_backtracks; ++bt) {
    FieldPair trial = theta;
    trial.axpy(alpha, direction);
    std::optional<TrialPoint> eval = evaluate(trial);
    if (eval && eval->cost.total() <= cost0 + config.armijo_c * alpha * slope) {
      return {alpha, std::move(*eval)};
    }
    alpha *= config.backtrack_factor;
  }
  throw Error("line search failed: no acceptable step within " +
              std::to_string(config.max_backtracks) + " backtracks");
}

namespace detail {

/// theta -> physical parameters; empty when the trial point is infeasible.
inline std::optional<ParamPair> to_physical(const FieldPair& theta,
                                            const NewtonCGConfig& config) {
  if (config.mode == ParamMode::direct) {
    if (min_value(theta.D) <= config.param_floor_d) return std::nullopt;
    return ParamPair{theta.D, theta.G};
  }
  ParamPair params{ScalarField(theta.D.grid()), ScalarField(theta.G.grid())};
  for (int c = 0; c < theta.D.size(); ++c) {
    params.D[c] = std::exp(theta.D[c]);
    params.G[c] = std::exp(theta.G[c]);
  }
  if (!all_finite(params.D) || !all_finite(params.G)) return std::nullopt;
  return params;
}

inline FieldPair to_theta(const ParamPair& params,
                          const NewtonCGConfig& config) {
  if (config.mode == ParamMode::direct) return FieldPair{params.D, params.G};
  require(min_value(params.D) > 0.0 && min_value(params.G) > 0.0,
          "log mode requires strictly positive initial D and G");
  FieldPair theta{ScalarField(params.D.grid()), ScalarField(params.G.grid())};
  for (int c = 0; c < theta.D.size(); ++c) {
    theta.D[c] = std::log(params.D[c]);
    theta.G[c] = std::log(params.G[c]);
  }
  return theta;
}

/// Chain rule into theta space: under log reparameterization the gradient
/// picks up an elementwise factor of the physical value.
inline GradientPair pull_gradient(const ParamPair& params,
                                  const GradientPair& grad_physical,
                                  const NewtonCGConfig& config) {
  if (config.mode == ParamMode::direct) return grad_physical;
  return GradientPair{hadamard(params.D, grad_physical.D),
                      hadamard(params.G, grad_physical.G)};
}

}  // namespace detail

/// Outer Newton-CG loop. Records one history row for the initial point and
/// one per accepted step; converged=false results carry the reason (line
/// search failure, solver failure, or iteration cap).
inline CalibrationResult newton_cg(const ParamPair& params0,
                                   const ScalarField& u0,
                                   const TimeGrid& time,
                                   const ObservationSet& obs,
                                   const RegOperator& reg_op_d,
                                   const RegOperator& reg_op_g,
                                   const NewtonCGConfig& config) {
  config.validate();
  if (config.precondition) {
    require(config.mode == ParamMode::direct,
            "preconditioning is only available in direct mode");
    require(reg_op_d.delta > 0.0 && reg_op_g.delta > 0.0,
            "preconditioning requires delta > 0");
  }

  CalibrationResult result;
  result.params_final = params0;

  auto evaluate = [&](const FieldPair& theta) -> std::optional<TrialPoint> {
    std::optional<ParamPair> params = detail::to_physical(theta, config);
    if (!params) return std::nullopt;
    try {
      StateTrajectory traj = solve_forward(*params, u0, time);
      CostBreakdown cost;
      cost.misfit = misfit_cost(traj, obs);
      cost.reg_d = reg_cost(params->D, reg_op_d);
      cost.reg_g = reg_cost(params->G, reg_op_g);
      return TrialPoint{std::move(*params), std::move(traj), cost};
    } catch (const Error&) {
      return std::nullopt;
    }
  };

  FieldPair theta = detail::to_theta(params0, config);
  std::optional<TrialPoint> current = evaluate(theta);
  if (!current) {
    result.reason = "initial point infeasible or forward solve failed";
    return result;
  }

  AdjointTrajectory adj;
  GradientPair grad_physical, grad;
  double grad_norm = 0.0;
  auto refresh_gradient = [&]() {
    adj = solve_adjoint(current->traj, current->params, obs);
    grad_physical =
        assemble_gradient(current->traj, adj, current->params, reg_op_d,
                          reg_op_g);
    grad = detail::pull_gradient(current->params, grad_physical, config);
    grad_norm = norm(grad);
  };

  try {
    refresh_gradient();
  } catch (const Error& err) {
    result.reason = std::string("adjoint solve failed: ") + err.what();
    return result;
  }

  auto record = [&](int iter, const CgResult* cg, double alpha) {
    IterationRecord row;
    row.iter = iter;
    row.cost = current->cost.total();
    row.misfit = current->cost.misfit;
    row.reg_d = current->cost.reg_d;
    row.reg_g = current->cost.reg_g;
    row.grad_norm = grad_norm;
    if (cg) {
      row.cg_iters = cg->iterations;
      row.cg_exit = to_string(cg->exit);
      row.alpha = alpha;
    }
    result.history.push_back(std::move(row));
  };

  record(0, nullptr, 0.0);
  const double grad_norm0 = grad_norm;
  const double target = std::max(config.grad_rtol * grad_norm0,
                                 config.grad_atol);

  for (int it = 1; it <= config.max_newton_iters; ++it) {
    if (grad_norm <= target) {
      result.converged = true;
      result.reason = "gradient tolerance reached";
      result.params_final = current->params;
      return result;
    }

    HessianOptions hopts;
    hopts.gauss_newton = config.gauss_newton;
    const HessianContext ctx =
        make_hessian_context(current->params, current->traj, adj, obs,
                             reg_op_d, reg_op_g, hopts);

    auto hess_theta = [&](const FieldPair& v) -> FieldPair {
      if (config.mode == ParamMode::direct) return apply_hessian(ctx, v);
      const ParamPair& p = current->params;
      FieldPair scaled{hadamard(p.D, v.D), hadamard(p.G, v.G)};
      FieldPair h = apply_hessian(ctx, scaled);
      h.D = hadamard(p.D, h.D);
      h.G = hadamard(p.G, h.G);
      for (int c = 0; c < h.D.size(); ++c) {
        h.D[c] += p.D[c] * grad_physical.D[c] * v.D[c];
        h.G[c] += p.G[c] * grad_physical.G[c] * v.G[c];
      }
      return h;
    };

    auto prec = [&](const FieldPair& r) -> FieldPair {
      if (!config.precondition) return r;
      const int cap = detail::linear_iter_cap(r.D.size());
      auto op_d = [&](const ScalarField& v) { return reg_op_d.apply(v); };
      auto op_g = [&](const ScalarField& v) { return reg_op_g.apply(v); };
      FieldPair z;
      z.D = solve_symmetric(
          op_d, solve_symmetric(op_d, r.D, detail::kLinearRtol, cap, "prec"),
          detail::kLinearRtol, cap, "prec");
      z.G = solve_symmetric(
          op_g, solve_symmetric(op_g, r.G, detail::kLinearRtol, cap, "prec"),
          detail::kLinearRtol, cap, "prec");
      return z;
    };

    const double forcing =
        std::min(config.forcing_cap,
                 std::pow(grad_norm / grad_norm0, config.forcing_exponent));

    CgResult cg;
    try {
      cg = cg_steihaug_preconditioned(hess_theta, prec, grad, forcing,
                                      config.cg_max_iters);
    } catch (const Error& err) {
      result.reason = std::string("Hessian solve failed: ") + err.what();
      result.params_final = current->params;
      return result;
    }

    double alpha = 0.0;
    try {
      auto [a, accepted] = armijo_linesearch(theta, cg.direction, grad,
                                             current->cost.total(), evaluate,
                                             config);
      alpha = a;
      theta.axpy(alpha, cg.direction);
      current = std::move(accepted);
    } catch (const Error& err) {
      result.reason = err.what();
      result.params_final = current->params;
      return result;
    }

    try {
      refresh_gradient();
    } catch (const Error& err) {
      result.reason = std::string("adjoint solve failed: ") + err.what();
      result.params_final = current->params;
      return result;
    }
    record(it, &cg, alpha);
  }

  result.params_final = current->params;
  if (grad_norm <= target) {
    result.converged = true;
    result.reason = "gradient tolerance reached";
  } else {
    result.reason = "iteration cap reached";
  }
  return result;
}

}  // namespace rdcal

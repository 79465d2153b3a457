#pragma once

// Implicit-Euler time stepping of du/dt = div(D grad u) + G (1-u) u.
// Each step solves its nonlinear residual with an inner Newton iteration;
// the converged linearized operator of a step is exactly the operator the
// adjoint and incremental solves reuse (transposed, which here means
// unchanged: it is symmetric).

#include <string>
#include <utility>
#include <vector>

#include "rdcal/krylov.hpp"
#include "rdcal/operators.hpp"

namespace rdcal {

struct TimeGrid {
  double final_time = 0.0;  // days
  int steps = 0;

  TimeGrid() = default;
  TimeGrid(double T, int Nt) : final_time(T), steps(Nt) {
    require(T > 0.0, "final time must be positive");
    require(Nt >= 1, "time grid needs at least one step");
  }

  double dt() const { return final_time / steps; }
  double time_at(int k) const { return final_time * k / steps; }
};

struct StateTrajectory {
  TimeGrid time;
  std::vector<ScalarField> states;  // steps + 1 snapshots, index 0 = u0

  const ScalarField& at(int k) const { return states[k]; }
};

namespace detail {
inline constexpr double kStepNewtonTol = 1e-11;
// Slightly tighter than the 1e-12 the derivative-exactness properties are
// tested at, so that errors compounded over a trajectory of solves stay
// under those bounds.
inline constexpr double kLinearRtol = 1e-13;
inline constexpr int kMaxStepNewton = 50;
inline int linear_iter_cap(int n) { return 10 * n + 100; }
}  // namespace detail

/// Linearization of one implicit step at state u:
///   v -> v/dt - div(D grad v) - G (1-2u) v.
/// Symmetric, and positive definite whenever dt * max(G (1-2u)) < 1.
class StepJacobian {
 public:
  StepJacobian(const ParamPair& params, const ScalarField& u, double dt)
      : diffusivity_(&params.D), reaction_(params.G), inv_dt_(1.0 / dt) {
    for (int k = 0; k < reaction_.size(); ++k)
      reaction_[k] *= 1.0 - 2.0 * u[k];
  }

  ScalarField operator()(const ScalarField& v) const {
    ScalarField out = apply_diffusion(*diffusivity_, v);
    for (int k = 0; k < out.size(); ++k)
      out[k] = v[k] * inv_dt_ - out[k] - reaction_[k] * v[k];
    return out;
  }

 private:
  const ScalarField* diffusivity_;
  ScalarField reaction_;  // G (1-2u)
  double inv_dt_;
};

/// One implicit Euler step: solves
///   (u - u_prev)/dt - div(D grad u) - G (1-u) u = 0
/// by Newton iteration, converged when the residual norm drops below
/// 1e-11 * (1 + ||u_prev||).
inline ScalarField step_implicit(const ScalarField& u_prev,
                                 const ParamPair& params, double dt) {
  require(dt > 0.0, "step_implicit: dt must be positive");
  require_same_grid(u_prev, params.D, "step_implicit");
  require(min_value(params.D) >= 0.0,
          "step_implicit: D must be nonnegative");

  const double tol = detail::kStepNewtonTol * (1.0 + norm(u_prev));
  const int cap = detail::linear_iter_cap(u_prev.size());
  ScalarField u = u_prev;

  auto residual = [&](const ScalarField& v) {
    ScalarField f = apply_diffusion(params.D, v);
    for (int k = 0; k < f.size(); ++k) {
      const double react = params.G[k] * (1.0 - v[k]) * v[k];
      f[k] = (v[k] - u_prev[k]) / dt - f[k] - react;
    }
    return f;
  };

  for (int it = 0; it <= detail::kMaxStepNewton; ++it) {
    ScalarField f = residual(u);
    if (norm(f) <= tol) return u;
    if (it == detail::kMaxStepNewton) break;
    f *= -1.0;
    const StepJacobian jac(params, u, dt);
    const ScalarField delta =
        solve_symmetric(jac, f, detail::kLinearRtol, cap, "step_implicit");
    u += delta;
  }
  throw Error("timestep diverged: Newton failed to converge in " +
              std::to_string(detail::kMaxStepNewton) + " iterations (dt=" +
              std::to_string(dt) + ")");
}

/// March the full trajectory. Snapshots must stay within [-1e-6, 1 + 1e-6];
/// a violation (possible only for extreme parameter values) is treated as a
/// failed solve so that line searches reject the step.
inline StateTrajectory solve_forward(const ParamPair& params,
                                     const ScalarField& u0,
                                     const TimeGrid& time) {
  require_same_grid(params.D, params.G, "solve_forward");
  require(all_finite(params.D) && all_finite(params.G),
          "solve_forward: non-finite parameter value");
  require(min_value(params.D) >= 0.0, "solve_forward: D must be nonnegative");
  require_same_grid(u0, params.D, "solve_forward");
  require(min_value(u0) >= 0.0 && max_value(u0) <= 1.0,
          "solve_forward: u0 must lie in [0, 1]");

  constexpr double bound_slack = 1e-6;
  StateTrajectory traj;
  traj.time = time;
  traj.states.reserve(time.steps + 1);
  traj.states.push_back(u0);
  const double dt = time.dt();
  for (int k = 1; k <= time.steps; ++k) {
    ScalarField u = step_implicit(traj.states.back(), params, dt);
    if (min_value(u) < -bound_slack || max_value(u) > 1.0 + bound_slack) {
      throw Error("state out of bounds at step " + std::to_string(k));
    }
    traj.states.push_back(std::move(u));
  }
  return traj;
}

}  // namespace rdcal

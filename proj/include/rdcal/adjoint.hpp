#pragma once

// Backward-in-time adjoint solve and gradient assembly. The adjoint step
// operator is the (symmetric) linearization of the forward step at its
// converged state, so the assembled gradient is the exact derivative of the
// discrete cost up to the inner solver tolerances. Stored adjoint snapshots
// are scaled so that the gradient quadrature carries a plain dt per step:
// snapshot k-1 pairs with state snapshot k.

#include <cmath>
#include <utility>
#include <vector>

#include "rdcal/observation.hpp"
#include "rdcal/regularization.hpp"

namespace rdcal {

struct AdjointTrajectory {
  TimeGrid time;
  std::vector<ScalarField> snapshots;  // steps + 1, terminal snapshot zero

  const ScalarField& at(int k) const { return snapshots[k]; }
};

/// Pair of fields over (D, G) space; used for gradients, Hessian actions,
/// and search directions alike.
struct FieldPair {
  ScalarField D;
  ScalarField G;

  FieldPair& operator+=(const FieldPair& o) {
    D += o.D;
    G += o.G;
    return *this;
  }
  FieldPair& operator-=(const FieldPair& o) {
    D -= o.D;
    G -= o.G;
    return *this;
  }
  FieldPair& operator*=(double a) {
    D *= a;
    G *= a;
    return *this;
  }
  FieldPair& axpy(double a, const FieldPair& o) {
    D.axpy(a, o.D);
    G.axpy(a, o.G);
    return *this;
  }
};

using GradientPair = FieldPair;

inline double inner(const FieldPair& a, const FieldPair& b) {
  return inner(a.D, b.D) + inner(a.G, b.G);
}
inline double norm(const FieldPair& a) { return std::sqrt(inner(a, a)); }
inline FieldPair operator+(const FieldPair& a, const FieldPair& b) {
  FieldPair out = a;
  out += b;
  return out;
}
inline FieldPair operator-(const FieldPair& a, const FieldPair& b) {
  FieldPair out = a;
  out -= b;
  return out;
}
inline FieldPair operator*(double s, const FieldPair& a) {
  FieldPair out = a;
  out *= s;
  return out;
}

struct CostBreakdown {
  double misfit = 0.0;
  double reg_d = 0.0;
  double reg_g = 0.0;
  double total() const { return misfit + reg_d + reg_g; }
};

inline CostBreakdown evaluate_cost(const ParamPair& params,
                                   const ScalarField& u0,
                                   const TimeGrid& time,
                                   const ObservationSet& obs,
                                   const RegOperator& reg_op_d,
                                   const RegOperator& reg_op_g) {
  const StateTrajectory traj = solve_forward(params, u0, time);
  CostBreakdown cost;
  cost.misfit = misfit_cost(traj, obs);
  cost.reg_d = reg_cost(params.D, reg_op_d);
  cost.reg_g = reg_cost(params.G, reg_op_g);
  return cost;
}

inline double total_cost(const ParamPair& params, const ScalarField& u0,
                         const TimeGrid& time, const ObservationSet& obs,
                         const RegOperator& reg_op_d,
                         const RegOperator& reg_op_g) {
  return evaluate_cost(params, u0, time, obs, reg_op_d, reg_op_g).total();
}

/// March backward from a zero terminal condition. Snapshot k-1 solves
///   J_k q = (q_k - s_k) / dt,
/// with J_k the step linearization at state u_k and s_k the observation
/// source at step k (zero off observation steps). Observations at step 0
/// never enter: the initial state is fixed, so they carry no sensitivity.
inline AdjointTrajectory solve_adjoint(const StateTrajectory& traj,
                                       const ParamPair& params,
                                       const ObservationSet& obs) {
  require_same_grid(params.D, params.G, "solve_adjoint");
  require(min_value(params.D) >= 0.0, "solve_adjoint: D must be nonnegative");
  require_same_grid(traj.at(0), params.D, "solve_adjoint");
  const int nt = traj.time.steps;
  require(static_cast<int>(traj.states.size()) == nt + 1,
          "solve_adjoint: trajectory snapshot count mismatch");
  for (int k : obs.steps)
    require(k <= nt, "solve_adjoint: observation step beyond trajectory");

  const double dt = traj.time.dt();
  const int cap = detail::linear_iter_cap(traj.at(0).size());

  AdjointTrajectory adj;
  adj.time = traj.time;
  adj.snapshots.assign(nt + 1, ScalarField(traj.at(0).grid(), 0.0));
  for (int k = nt; k >= 1; --k) {
    ScalarField rhs = adj.snapshots[k];
    if (obs.find(k) >= 0) rhs -= obs_adjoint_source(traj, obs, k);
    rhs *= 1.0 / dt;
    const StepJacobian jac(params, traj.at(k), dt);
    adj.snapshots[k - 1] =
        solve_symmetric(jac, rhs, detail::kLinearRtol, cap, "solve_adjoint");
  }
  return adj;
}

/// Assemble the full gradient
///   g_D = A_D^2 (D - mean_D) + sum_k dt * grad_dot(u_k, q_{k-1})
///   g_G = A_G^2 (G - mean_G) - sum_k dt * q_{k-1} (u_k - u_k^2)
/// where the stencil pairing grad_dot makes the misfit part the exact
/// coefficient derivative of the discrete diffusion term.
inline GradientPair assemble_gradient(const StateTrajectory& traj,
                                      const AdjointTrajectory& adj,
                                      const ParamPair& params,
                                      const RegOperator& reg_op_d,
                                      const RegOperator& reg_op_g) {
  const int nt = traj.time.steps;
  require(static_cast<int>(adj.snapshots.size()) == nt + 1 &&
              adj.time.steps == nt,
          "assemble_gradient: trajectory pair mismatch");
  require_same_grid(traj.at(0), adj.at(0), "assemble_gradient");
  require_same_grid(traj.at(0), params.D, "assemble_gradient");

  const double dt = traj.time.dt();
  GradientPair grad{reg_grad(params.D, reg_op_d),
                    reg_grad(params.G, reg_op_g)};
  for (int k = 1; k <= nt; ++k) {
    const ScalarField& u = traj.at(k);
    const ScalarField& q = adj.at(k - 1);
    grad.D.axpy(dt, grad_dot(u, q));
    for (int c = 0; c < u.size(); ++c)
      grad.G[c] -= dt * q[c] * (u[c] - u[c] * u[c]);
  }
  return grad;
}

}  // namespace rdcal

#pragma once

// Tikhonov regularization 1/2 ||A (m - mean)||^2 with the elliptic smoothing
// operator A = -div(gamma grad .) + delta. The functional is quadratic, so
// its gradient A^2 (m - mean) and Hessian action A^2 mhat are exact.

#include <utility>

#include "rdcal/operators.hpp"

namespace rdcal {

struct RegOperator {
  double gamma = 0.0;  // > 0
  double delta = 0.0;  // >= 0
  ScalarField mean;    // prior mean

  static RegOperator create(double gamma, double delta, ScalarField mean) {
    require(gamma > 0.0, "regularization: gamma must be > 0");
    require(delta >= 0.0, "regularization: delta must be >= 0");
    RegOperator op;
    op.gamma = gamma;
    op.delta = delta;
    op.mean = std::move(mean);
    return op;
  }

  ScalarField apply(const ScalarField& m) const {
    return apply_elliptic(gamma, delta, m);
  }
};

inline double reg_cost(const ScalarField& m, const RegOperator& op) {
  require_same_grid(m, op.mean, "reg_cost");
  const ScalarField am = op.apply(m - op.mean);
  return 0.5 * inner(am, am);
}

inline ScalarField reg_grad(const ScalarField& m, const RegOperator& op) {
  require_same_grid(m, op.mean, "reg_grad");
  return op.apply(op.apply(m - op.mean));
}

inline ScalarField reg_hess_apply(const ScalarField& mhat,
                                  const RegOperator& op) {
  require_same_grid(mhat, op.mean, "reg_hess_apply");
  return op.apply(op.apply(mhat));
}

}  // namespace rdcal

#pragma once

// Matrix-free Krylov solvers for the symmetric step systems. CG handles the
// (usual) positive definite case; when CG meets nonpositive curvature the
// system is re-solved through the normal equations, which stay positive
// definite for any nonsingular symmetric operator.

#include <string>

#include "rdcal/field.hpp"

namespace rdcal {

struct KrylovStats {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
  bool indefinite = false;
};

/// CG on apply(x) = b starting from x = 0. Stops when ||r|| <= rtol * ||b||.
template <class Op>
KrylovStats conjugate_gradient(Op&& apply, const ScalarField& b,
                               ScalarField& x, double rtol, int max_iters) {
  KrylovStats stats;
  x = ScalarField(b.grid(), 0.0);
  const double bnorm = norm(b);
  if (bnorm == 0.0) {
    stats.converged = true;
    return stats;
  }
  ScalarField r = b;
  ScalarField p = r;
  double rr = inner(r, r);
  for (int it = 0; it < max_iters; ++it) {
    const ScalarField q = apply(p);
    const double curvature = inner(p, q);
    if (curvature <= 0.0) {
      stats.indefinite = true;
      stats.rel_residual = std::sqrt(rr) / bnorm;
      return stats;
    }
    const double alpha = rr / curvature;
    x.axpy(alpha, p);
    r.axpy(-alpha, q);
    const double rr_new = inner(r, r);
    stats.iterations = it + 1;
    if (std::sqrt(rr_new) <= rtol * bnorm) {
      stats.converged = true;
      stats.rel_residual = std::sqrt(rr_new) / bnorm;
      return stats;
    }
    p *= rr_new / rr;
    p += r;
    rr = rr_new;
  }
  stats.rel_residual = std::sqrt(rr) / bnorm;
  return stats;
}

/// CG on the normal equations A^2 x = A b for symmetric A. Convergence is
/// checked on the true residual b - A x, updated alongside the iteration.
template <class Op>
KrylovStats normal_equations_cg(Op&& apply, const ScalarField& b,
                                ScalarField& x, double rtol, int max_iters) {
  KrylovStats stats;
  x = ScalarField(b.grid(), 0.0);
  const double bnorm = norm(b);
  if (bnorm == 0.0) {
    stats.converged = true;
    return stats;
  }
  ScalarField r_true = b;
  ScalarField rhat = apply(b);
  ScalarField p = rhat;
  double rr = inner(rhat, rhat);
  for (int it = 0; it < max_iters; ++it) {
    const ScalarField t = apply(p);
    const double tt = inner(t, t);
    if (tt == 0.0) break;  // p in the null space: singular operator
    const double alpha = rr / tt;
    x.axpy(alpha, p);
    r_true.axpy(-alpha, t);
    const ScalarField q = apply(t);
    rhat.axpy(-alpha, q);
    stats.iterations = it + 1;
    const double res = norm(r_true);
    if (res <= rtol * bnorm) {
      stats.converged = true;
      stats.rel_residual = res / bnorm;
      return stats;
    }
    const double rr_new = inner(rhat, rhat);
    p *= rr_new / rr;
    p += rhat;
    rr = rr_new;
  }
  stats.rel_residual = norm(r_true) / bnorm;
  return stats;
}

/// Solve a symmetric system, preferring CG and falling back to the normal
/// equations when CG detects an indefinite operator. Throws on failure.
template <class Op>
ScalarField solve_symmetric(Op&& apply, const ScalarField& b, double rtol,
                            int max_iters, const char* what) {
  ScalarField x;
  KrylovStats stats = conjugate_gradient(apply, b, x, rtol, max_iters);
  if (stats.converged) return x;
  KrylovStats fallback =
      normal_equations_cg(apply, b, x, rtol, 2 * max_iters);
  if (!fallback.converged) {
    throw Error(std::string(what) + ": linear solve failed (rel residual " +
                std::to_string(fallback.rel_residual) + ")");
  }
  return x;
}

}  // namespace rdcal

#pragma once

// Conservative finite-volume operators on the masked grid. Face fluxes use
// the arithmetic mean of the two adjacent coefficient values; boundary faces
// carry no flux. Both operators are symmetric in the field inner product.

#include "rdcal/field.hpp"

namespace rdcal {

/// Discrete div(coef * grad(u)) with zero-flux boundary faces. `coef` may
/// have any sign; positivity is a requirement of the solves that invert the
/// operator, not of the operator itself (Hessian sources apply it with
/// sign-indefinite direction fields).
inline ScalarField apply_diffusion(const ScalarField& coef,
                                   const ScalarField& u) {
  require_same_grid(coef, u, "apply_diffusion");
  const Grid2D& g = *u.grid();
  ScalarField out(u.grid(), 0.0);
  const double wx = 1.0 / (g.hx() * g.hx());
  for (const Face& f : g.faces_x()) {
    const double flux = 0.5 * (coef[f.a] + coef[f.b]) * (u[f.b] - u[f.a]) * wx;
    out[f.a] += flux;
    out[f.b] -= flux;
  }
  const double wy = 1.0 / (g.hy() * g.hy());
  for (const Face& f : g.faces_y()) {
    const double flux = 0.5 * (coef[f.a] + coef[f.b]) * (u[f.b] - u[f.a]) * wy;
    out[f.a] += flux;
    out[f.b] -= flux;
  }
  return out;
}

/// Elliptic smoothing operator A m = -div(gamma grad m) + delta m with
/// zero-flux boundary condition. Requires gamma > 0 and delta >= 0.
inline ScalarField apply_elliptic(double gamma, double delta,
                                  const ScalarField& m) {
  require(gamma > 0.0, "apply_elliptic: gamma must be > 0");
  require(delta >= 0.0, "apply_elliptic: delta must be >= 0");
  const Grid2D& g = *m.grid();
  ScalarField out(m.grid(), 0.0);
  const double wx = gamma / (g.hx() * g.hx());
  for (const Face& f : g.faces_x()) {
    const double flux = wx * (m[f.b] - m[f.a]);
    out[f.a] -= flux;
    out[f.b] += flux;
  }
  const double wy = gamma / (g.hy() * g.hy());
  for (const Face& f : g.faces_y()) {
    const double flux = wy * (m[f.b] - m[f.a]);
    out[f.a] -= flux;
    out[f.b] += flux;
  }
  for (int k = 0; k < m.size(); ++k) out[k] += delta * m[k];
  return out;
}

/// Cellwise grad(u).grad(p), assembled as the coefficient derivative of the
/// diffusion stencil: each face contributes (du)(dp)/h^2, split evenly
/// between its two cells. With this definition,
///   inner(p, apply_diffusion(D, u)) == -inner(D, grad_dot(u, p))
/// holds exactly, which is what makes the assembled gradient the exact
/// derivative of the discrete cost.
inline ScalarField grad_dot(const ScalarField& u, const ScalarField& p) {
  require_same_grid(u, p, "grad_dot");
  const Grid2D& g = *u.grid();
  ScalarField out(u.grid(), 0.0);
  const double wx = 1.0 / (g.hx() * g.hx());
  for (const Face& f : g.faces_x()) {
    const double t = 0.5 * (u[f.b] - u[f.a]) * (p[f.b] - p[f.a]) * wx;
    out[f.a] += t;
    out[f.b] += t;
  }
  const double wy = 1.0 / (g.hy() * g.hy());
  for (const Face& f : g.faces_y()) {
    const double t = 0.5 * (u[f.b] - u[f.a]) * (p[f.b] - p[f.a]) * wy;
    out[f.a] += t;
    out[f.b] += t;
  }
  return out;
}

}  // namespace rdcal

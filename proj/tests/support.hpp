#pragma once

// Shared fixtures and independent oracles for the test suite. The oracles
// deliberately avoid the library's face lists and operator code paths:
// dense matrices are assembled straight from mask adjacency, scalar
// recursions are written out per cell.

#include <cmath>
#include <cstdint>
#include <vector>

#include "rdcal/rdcal.hpp"

namespace testsupport {

using namespace rdcal;

// ---------------------------------------------------------------------------
// dense operator oracles

struct DenseMatrix {
  int n = 0;
  std::vector<double> a;  // row-major n*n

  explicit DenseMatrix(int n_) : n(n_), a(static_cast<std::size_t>(n_) * n_) {}
  double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * n + c]; }
  double operator()(int r, int c) const {
    return a[static_cast<std::size_t>(r) * n + c];
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    std::vector<double> y(n, 0.0);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) y[r] += (*this)(r, c) * x[c];
    return y;
  }
};

/// Dense matrix of div(D grad .) with zero-flux boundary faces, assembled
/// cell by cell from mask adjacency (independent of the face lists).
inline DenseMatrix dense_diffusion_matrix(const Grid2D& g,
                                          const ScalarField& coef) {
  DenseMatrix m(g.num_active());
  const int di[4] = {1, -1, 0, 0};
  const int dj[4] = {0, 0, 1, -1};
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const int c = g.active_index(i, j);
      if (c < 0) continue;
      for (int s = 0; s < 4; ++s) {
        const int nbr = g.active_index(i + di[s], j + dj[s]);
        if (nbr < 0) continue;
        const double h = (s < 2) ? g.hx() : g.hy();
        const double face = 0.5 * (coef[c] + coef[nbr]) / (h * h);
        m(c, nbr) += face;
        m(c, c) -= face;
      }
    }
  }
  return m;
}

/// Dense matrix of the elliptic smoothing operator -div(gamma grad .) + delta.
inline DenseMatrix dense_elliptic_matrix(const GridPtr& grid, double gamma,
                                         double delta) {
  const DenseMatrix lap = dense_diffusion_matrix(*grid, ScalarField(grid, 1.0));
  DenseMatrix m(lap.n);
  for (int r = 0; r < m.n; ++r) {
    for (int c = 0; c < m.n; ++c) m(r, c) = -gamma * lap(r, c);
    m(r, r) += delta;
  }
  return m;
}

// ---------------------------------------------------------------------------
// scalar oracles

/// Root of (u - c)/dt = g u (1 - u) closest to the physical branch,
/// bracketed and bisected to machine precision.
inline double implicit_logistic_root(double c, double g, double dt) {
  auto phi = [&](double u) { return (u - c) / dt - g * u * (1.0 - u); };
  double lo = 0.0, hi = 1.0;
  while (phi(hi) < 0.0) hi += 1.0;
  if (phi(lo) > 0.0) lo = -1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (phi(mid) <= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Closed-form logistic solution of u' = g u (1 - u), u(0) = c.
inline double logistic_exact(double c, double g, double t) {
  const double e = std::exp(g * t);
  return c * e / (1.0 + c * (e - 1.0));
}

// ---------------------------------------------------------------------------
// field builders

/// Smoothed, normalized white noise: base + amp * noise after `passes`
/// neighbor-averaging sweeps, rescaled to unit max amplitude.
inline ScalarField smooth_random_field(const GridPtr& grid,
                                       std::uint64_t seed, double base,
                                       double amp, int passes = 30) {
  GaussianSampler sampler(seed);
  ScalarField f = white_noise_field(grid, sampler);
  const Grid2D& g = *grid;
  for (int p = 0; p < passes; ++p) {
    ScalarField next = f;
    for (const auto& [i, j] : g.active_cells()) {
      const int c = g.active_index(i, j);
      double sum = f[c];
      int count = 1;
      for (const auto& [di, dj] :
           {std::pair{1, 0}, std::pair{-1, 0}, std::pair{0, 1},
            std::pair{0, -1}}) {
        const int nbr = g.active_index(i + di, j + dj);
        if (nbr >= 0) {
          sum += f[nbr];
          ++count;
        }
      }
      next[c] = sum / count;
    }
    f = next;
  }
  const double scale = max_abs(f);
  if (scale > 0.0) f *= 1.0 / scale;
  ScalarField out(grid, base);
  out.axpy(amp, f);
  return out;
}

/// Restrict a field on a full 2n x 2n square grid to a full n x n grid by
/// 2x2 cell averaging.
inline ScalarField restrict_full_grid(const ScalarField& fine,
                                      const GridPtr& coarse) {
  const Grid2D& gf = *fine.grid();
  const Grid2D& gc = *coarse;
  ScalarField out(coarse, 0.0);
  for (int j = 0; j < gc.ny(); ++j) {
    for (int i = 0; i < gc.nx(); ++i) {
      const int c = gc.active_index(i, j);
      double sum = 0.0;
      for (int dj = 0; dj < 2; ++dj)
        for (int di = 0; di < 2; ++di)
          sum += fine[gf.active_index(2 * i + di, 2 * j + dj)];
      out[c] = 0.25 * sum;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// standard fixtures

struct Fixture {
  GridPtr grid;
  ScalarField u0;
  ParamPair truth;
  TimeGrid time;
  RegOperator reg_op_d;
  RegOperator reg_op_g;
};

/// Small disk-masked inverse-crime style problem used across tests.
inline Fixture small_disk_fixture(int n = 16, int nt = 10, double T = 4.0) {
  Fixture fx;
  fx.grid = build_grid(n, n, 1.0, 1.0, disk_mask(n, n, 1.0, 1.0, 0.375 * n));
  const double c = 0.5 * n;
  fx.u0 = field_from_function(fx.grid, [&](double x, double y) {
    const double dx = x - c, dy = y - c;
    return 0.7 * std::exp(-(dx * dx + dy * dy) / (2.0 * 2.0 * 2.0));
  });
  fx.truth = ParamPair{field_from_function(fx.grid,
                                           [](double x, double y) {
                                             return 0.5 + 0.15 *
                                                    std::sin(0.4 * x) *
                                                    std::cos(0.3 * y);
                                           }),
                       field_from_function(fx.grid, [](double x, double y) {
                         return 0.4 + 0.1 * std::cos(0.5 * x + 0.2 * y);
                       })};
  fx.time = TimeGrid(T, nt);
  fx.reg_op_d = RegOperator::create(0.1, 0.1, ScalarField(fx.grid, 0.5));
  fx.reg_op_g = RegOperator::create(0.1, 0.1, ScalarField(fx.grid, 0.4));
  return fx;
}

inline ObservationSet empty_observations(const GridPtr&) {
  return ObservationSet::create({}, {}, 1.0);
}

}  // namespace testsupport

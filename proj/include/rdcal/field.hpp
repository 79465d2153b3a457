#pragma once

// Scalar field: one value per active cell. The inner product is the
// midpoint quadrature of the L2 pairing, sum(f*g) times the cell area.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rdcal/grid.hpp"

namespace rdcal {

class ScalarField {
 public:
  ScalarField() = default;

  explicit ScalarField(GridPtr grid, double fill = 0.0)
      : grid_(std::move(grid)),
        values_(grid_ ? grid_->num_active() : 0, fill) {}

  ScalarField(GridPtr grid, std::vector<double> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    require(grid_ != nullptr, "field requires a grid");
    require(static_cast<int>(values_.size()) == grid_->num_active(),
            "field value count does not match active cell count");
  }

  int size() const { return static_cast<int>(values_.size()); }
  const GridPtr& grid() const { return grid_; }

  double& operator[](int k) { return values_[k]; }
  const double& operator[](int k) const { return values_[k]; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  ScalarField& operator+=(const ScalarField& f) {
    for (int k = 0; k < size(); ++k) values_[k] += f.values_[k];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& f) {
    for (int k = 0; k < size(); ++k) values_[k] -= f.values_[k];
    return *this;
  }
  ScalarField& operator*=(double a) {
    for (double& v : values_) v *= a;
    return *this;
  }
  /// this += a * f
  ScalarField& axpy(double a, const ScalarField& f) {
    for (int k = 0; k < size(); ++k) values_[k] += a * f.values_[k];
    return *this;
  }

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

inline void require_same_grid(const ScalarField& a, const ScalarField& b,
                              std::string_view what) {
  if (a.grid() == nullptr || a.grid() != b.grid())
    throw Error(std::string(what) + ": grid mismatch");
}

/// L2 inner product: sum(f*g) * hx * hy over active cells.
inline double inner(const ScalarField& f, const ScalarField& g) {
  require_same_grid(f, g, "inner");
  double s = 0.0;
  for (int k = 0; k < f.size(); ++k) s += f[k] * g[k];
  return s * f.grid()->cell_area();
}

inline double norm(const ScalarField& f) { return std::sqrt(inner(f, f)); }

inline ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a, b, "field sum");
  ScalarField out = a;
  out += b;
  return out;
}

inline ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a, b, "field difference");
  ScalarField out = a;
  out -= b;
  return out;
}

inline ScalarField operator*(double a, const ScalarField& f) {
  ScalarField out = f;
  out *= a;
  return out;
}

inline ScalarField hadamard(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a, b, "hadamard");
  ScalarField out = a;
  for (int k = 0; k < out.size(); ++k) out[k] *= b[k];
  return out;
}

inline double min_value(const ScalarField& f) {
  double m = std::numeric_limits<double>::infinity();
  for (int k = 0; k < f.size(); ++k) m = std::min(m, f[k]);
  return m;
}

inline double max_value(const ScalarField& f) {
  double m = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < f.size(); ++k) m = std::max(m, f[k]);
  return m;
}

inline double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (int k = 0; k < f.size(); ++k) m = std::max(m, std::abs(f[k]));
  return m;
}

inline bool all_finite(const ScalarField& f) {
  for (int k = 0; k < f.size(); ++k)
    if (!std::isfinite(f[k])) return false;
  return true;
}

/// Evaluate fn(x, y) at each active cell center.
inline ScalarField field_from_function(
    const GridPtr& grid, const std::function<double(double, double)>& fn) {
  ScalarField out(grid);
  const auto& cells = grid->active_cells();
  for (int k = 0; k < out.size(); ++k) {
    out[k] = fn(grid->cell_center_x(cells[k].first),
                grid->cell_center_y(cells[k].second));
  }
  return out;
}

/// Diffusivity / proliferation-rate pair on one grid.
struct ParamPair {
  ScalarField D;  // mm^2/day, strictly positive
  ScalarField G;  // 1/day

  void validate(std::string_view what = "params") const {
    require_same_grid(D, G, what);
    if (!all_finite(D) || !all_finite(G))
      throw Error(std::string(what) + ": non-finite value");
    if (min_value(D) <= 0.0)
      throw Error(std::string(what) + ": D must be strictly positive");
  }
};

}  // namespace rdcal

#pragma once

// Masked uniform cell-centered 2D grid. Active cells carry a contiguous
// index 0..N-1; a face between an active and an inactive (or out-of-range)
// cell is a boundary face and carries no flux, which realizes the zero-flux
// boundary condition in the discrete sense.

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "rdcal/error.hpp"

namespace rdcal {

/// Interior face between two active cells, stored as their active indices.
struct Face {
  int a;  // lower cell (smaller i or smaller j)
  int b;  // upper cell
};

class Grid2D;
using GridPtr = std::shared_ptr<const Grid2D>;

class Grid2D {
 public:
  static GridPtr create(int nx, int ny, double hx, double hy,
                        std::vector<std::uint8_t> mask) {
    require(nx >= 1 && ny >= 1, "grid dimensions must be at least 1x1");
    require(hx > 0.0 && hy > 0.0, "cell spacing must be positive");
    require(static_cast<int>(mask.size()) == nx * ny,
            "mask size does not match nx*ny");
    auto grid = std::shared_ptr<Grid2D>(new Grid2D());
    grid->nx_ = nx;
    grid->ny_ = ny;
    grid->hx_ = hx;
    grid->hy_ = hy;
    grid->mask_ = std::move(mask);
    grid->build_index();
    require(grid->num_active_ > 0, "empty domain");
    grid->build_faces();
    return grid;
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  double cell_area() const { return hx_ * hy_; }
  int num_active() const { return num_active_; }

  bool in_range(int i, int j) const {
    return i >= 0 && i < nx_ && j >= 0 && j < ny_;
  }
  bool is_active(int i, int j) const {
    return in_range(i, j) && mask_[flat(i, j)] != 0;
  }
  /// Active index of cell (i, j), or -1 when inactive or out of range.
  int active_index(int i, int j) const {
    return in_range(i, j) ? index_[flat(i, j)] : -1;
  }

  /// (i, j) coordinates per active index.
  const std::vector<std::pair<int, int>>& active_cells() const {
    return cells_;
  }
  const std::vector<Face>& faces_x() const { return faces_x_; }
  const std::vector<Face>& faces_y() const { return faces_y_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }

  double cell_center_x(int i) const { return (i + 0.5) * hx_; }
  double cell_center_y(int j) const { return (j + 0.5) * hy_; }

 private:
  Grid2D() = default;

  int flat(int i, int j) const { return j * nx_ + i; }

  void build_index() {
    index_.assign(static_cast<std::size_t>(nx_) * ny_, -1);
    cells_.clear();
    int next = 0;
    for (int j = 0; j < ny_; ++j) {
      for (int i = 0; i < nx_; ++i) {
        if (mask_[flat(i, j)] != 0) {
          index_[flat(i, j)] = next++;
          cells_.emplace_back(i, j);
        }
      }
    }
    num_active_ = next;
  }

  void build_faces() {
    faces_x_.clear();
    faces_y_.clear();
    for (int j = 0; j < ny_; ++j) {
      for (int i = 0; i < nx_; ++i) {
        const int a = active_index(i, j);
        if (a < 0) continue;
        const int bx = active_index(i + 1, j);
        if (bx >= 0) faces_x_.push_back({a, bx});
        const int by = active_index(i, j + 1);
        if (by >= 0) faces_y_.push_back({a, by});
      }
    }
  }

  int nx_ = 0, ny_ = 0;
  double hx_ = 0.0, hy_ = 0.0;
  int num_active_ = 0;
  std::vector<std::uint8_t> mask_;
  std::vector<int> index_;
  std::vector<std::pair<int, int>> cells_;
  std::vector<Face> faces_x_;
  std::vector<Face> faces_y_;
};

inline GridPtr build_grid(int nx, int ny, double hx, double hy,
                          std::vector<std::uint8_t> mask) {
  return Grid2D::create(nx, ny, hx, hy, std::move(mask));
}

inline std::vector<std::uint8_t> full_mask(int nx, int ny) {
  return std::vector<std::uint8_t>(static_cast<std::size_t>(nx) * ny, 1);
}

/// Cells whose center lies within `radius` (physical units) of the domain
/// center are active.
inline std::vector<std::uint8_t> disk_mask(int nx, int ny, double hx,
                                           double hy, double radius) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(nx) * ny, 0);
  const double cx = 0.5 * nx * hx;
  const double cy = 0.5 * ny * hy;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double dx = (i + 0.5) * hx - cx;
      const double dy = (j + 0.5) * hy - cy;
      if (dx * dx + dy * dy <= radius * radius) mask[j * nx + i] = 1;
    }
  }
  return mask;
}

}  // namespace rdcal

/**
 * @file grid_map.hpp
 * @brief Discretized information distribution over a rectangular domain.
 */
#pragma once

#include <cstddef>
#include <vector>

#include "ergodic/types.hpp"

namespace ergodic {

/// Rectangular search domain [0, width] x [0, height].
struct Domain {
  double width = 1.0;
  double height = 1.0;

  double area() const { return width * height; }
  bool contains(const Vec2& p) const {
    return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height;
  }
  Vec2 clamp(const Vec2& p) const;
  friend bool operator==(const Domain&, const Domain&) = default;
};

/**
 * Cell values are densities sampled at cell midpoints. Storage is row-major
 * with y as the slow index: cell (ix, iy) lives at iy * nx + ix, and row
 * iy = 0 is the bottom edge (y near 0).
 */
class GridMap {
 public:
  GridMap() = default;
  GridMap(std::size_t nx, std::size_t ny, Domain domain, double fill = 0.0);
  GridMap(std::size_t nx, std::size_t ny, Domain domain, std::vector<double> cells);

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  const Domain& domain() const { return domain_; }
  double cell_area() const { return domain_.area() / static_cast<double>(nx_ * ny_); }

  double& at(std::size_t ix, std::size_t iy) { return cells_[iy * nx_ + ix]; }
  double at(std::size_t ix, std::size_t iy) const { return cells_[iy * nx_ + ix]; }
  Vec2 midpoint(std::size_t ix, std::size_t iy) const;

  const std::vector<double>& cells() const { return cells_; }
  std::vector<double>& cells() { return cells_; }

  /// Sum of cells times cell area.
  double integral() const;
  /// Density-weighted mean position.
  Vec2 centroid() const;

  friend bool operator==(const GridMap&, const GridMap&) = default;

 private:
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  Domain domain_;
  std::vector<double> cells_;
};

/// Rescales so that integral() == 1. Throws DegenerateError for zero mass.
GridMap normalize(const GridMap& map);

/// True when every cell is >= 0 and the integral is within tol of 1.
bool is_normalized(const GridMap& map, double tol = 1e-9);

}  // namespace ergodic

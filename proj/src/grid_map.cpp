#include "ergodic/grid_map.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ergodic {

Vec2 Domain::clamp(const Vec2& p) const {
  return {std::clamp(p.x, 0.0, width), std::clamp(p.y, 0.0, height)};
}

GridMap::GridMap(std::size_t nx, std::size_t ny, Domain domain, double fill)
    : GridMap(nx, ny, domain, std::vector<double>(nx * ny, fill)) {}

GridMap::GridMap(std::size_t nx, std::size_t ny, Domain domain, std::vector<double> cells)
    : nx_(nx), ny_(ny), domain_(domain), cells_(std::move(cells)) {
  if (nx == 0 || ny == 0) throw PreconditionError("grid map needs at least one cell per axis");
  if (!(domain.width > 0.0) || !(domain.height > 0.0))
    throw PreconditionError("grid map domain lengths must be positive");
  if (cells_.size() != nx * ny) throw PreconditionError("grid map cell count does not match nx*ny");
}

Vec2 GridMap::midpoint(std::size_t ix, std::size_t iy) const {
  return {(static_cast<double>(ix) + 0.5) * domain_.width / static_cast<double>(nx_),
          (static_cast<double>(iy) + 0.5) * domain_.height / static_cast<double>(ny_)};
}

double GridMap::integral() const {
  return std::accumulate(cells_.begin(), cells_.end(), 0.0) * cell_area();
}

Vec2 GridMap::centroid() const {
  double mass = 0.0;
  Vec2 acc;
  for (std::size_t iy = 0; iy < ny_; ++iy) {
    for (std::size_t ix = 0; ix < nx_; ++ix) {
      const double w = at(ix, iy);
      acc += w * midpoint(ix, iy);
      mass += w;
    }
  }
  if (mass <= 0.0) return {0.5 * domain_.width, 0.5 * domain_.height};
  return (1.0 / mass) * acc;
}

GridMap normalize(const GridMap& map) {
  const double total = std::accumulate(map.cells().begin(), map.cells().end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total))
    throw DegenerateError("cannot normalize a map with no positive mass");
  const double scale = 1.0 / (total * map.cell_area());
  std::vector<double> cells = map.cells();
  for (double& c : cells) c *= scale;
  return GridMap(map.nx(), map.ny(), map.domain(), std::move(cells));
}

bool is_normalized(const GridMap& map, double tol) {
  for (double c : map.cells())
    if (!(c >= 0.0)) return false;
  return std::abs(map.integral() - 1.0) <= tol;
}

}  // namespace ergodic

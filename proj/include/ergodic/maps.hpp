/**
 * @file maps.hpp
 * @brief Synthetic Gaussian-mixture information maps, map and start-region
 *        file I/O, and start-region geometry (sampling and projection).
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "ergodic/grid_map.hpp"
#include "ergodic/types.hpp"

namespace ergodic {

using Rng = std::mt19937_64;

struct GaussianComponent {
  double weight = 1.0;
  Vec2 mean;
  // Symmetric covariance [[xx, xy], [xy, yy]].
  double cov_xx = 0.01;
  double cov_xy = 0.0;
  double cov_yy = 0.01;

  double density(const Vec2& p) const;
};

struct GmmSpec {
  std::vector<GaussianComponent> components;
  std::uint64_t seed = 0;
};

/// 2-5 isotropic components, means uniform in the domain, sigma uniform in
/// [0.05 L, 0.2 L] where L is the shorter domain side.
GmmSpec random_gmm_spec(std::uint64_t seed, const Domain& domain);

GridMap generate_gmm_map(const GmmSpec& spec, std::size_t nx, std::size_t ny, const Domain& domain);

struct Rect {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double area() const { return (xmax - xmin) * (ymax - ymin); }
  bool contains(const Vec2& p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
  Vec2 clamp(const Vec2& p) const;
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Viable start locations per agent type: a union of axis-aligned rectangles.
class StartRegionSet {
 public:
  StartRegionSet() = default;
  explicit StartRegionSet(Domain domain) : domain_(domain) {}

  /// Throws PreconditionError for zero-area rectangles or ones leaving the domain.
  void add(int type_id, const Rect& rect);

  const Domain& domain() const { return domain_; }
  bool has_type(int type_id) const { return regions_.contains(type_id); }
  const std::vector<Rect>& rects(int type_id) const;
  std::vector<int> types() const;
  bool contains(int type_id, const Vec2& p) const;
  double area(int type_id) const;

  friend bool operator==(const StartRegionSet&, const StartRegionSet&) = default;

 private:
  Domain domain_;
  std::map<int, std::vector<Rect>> regions_;
};

/// Area-weighted rectangle pick, then a uniform point inside it.
Vec2 sample_in_rects(std::span<const Rect> rects, Rng& rng);

/// Uniform draw over the union of a type's rectangles (area-weighted pick).
Vec2 sample_start(const StartRegionSet& regions, int type_id, Rng& rng);

/// Nearest point of the type's rectangle union; ties go to the lowest index.
Vec2 project_to_regions(const Vec2& x, const StartRegionSet& regions, int type_id);

/// Pairwise intersections of every listed type's rectangles; empty when no
/// point is viable for all of them.
std::vector<Rect> common_regions(const StartRegionSet& regions, const std::vector<int>& types);

/**
 * Alternating projection onto each type's region set, up to `rounds` sweeps.
 * Returns true and writes the point when it lands in every set.
 */
bool cyclic_project(const Vec2& x, const StartRegionSet& regions, const std::vector<int>& types,
                    Vec2* out, int rounds = 50);

/**
 * Random start regions for synthetic maps: 2-4 rectangles covering 5-15% of
 * the domain for type 0. Further types get a subset of those rectangles
 * (shrunk, so every type pair shares viable points) plus one region of
 * their own.
 */
StartRegionSet random_start_regions(std::uint64_t seed, const Domain& domain, int type_count);

void save_map(const GridMap& map, const std::filesystem::path& path);
GridMap load_map(const std::filesystem::path& path);

void save_regions(const StartRegionSet& regions, const std::filesystem::path& path);
/// Region files do not carry the domain; it is supplied by the caller.
StartRegionSet load_regions(const std::filesystem::path& path, const Domain& domain);

}  // namespace ergodic

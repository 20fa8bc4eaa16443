/**
 * @file spectral.hpp
 * @brief Cosine basis on a rectangle, spectral coefficients of maps and
 *        trajectories, the ergodic metric and its gradient.
 *
 * Basis functions are f_k(x) = (1/h_k) cos(k1 pi x / L1) cos(k2 pi y / L2)
 * for 0 <= k1, k2 <= K, normalized to unit L2 norm over the domain.
 */
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ergodic/grid_map.hpp"
#include "ergodic/types.hpp"

namespace ergodic {

struct Index2 {
  int k1 = 0;
  int k2 = 0;
  friend bool operator==(const Index2&, const Index2&) = default;
};

class BasisSpec {
 public:
  BasisSpec(Domain domain, int max_index);

  const Domain& domain() const { return domain_; }
  int max_index() const { return max_index_; }
  std::size_t size() const { return indices_.size(); }

  /// Indices in k1-major order: position = k1 * (K + 1) + k2.
  const std::vector<Index2>& indices() const { return indices_; }
  std::size_t position(Index2 k) const;
  const std::vector<double>& normalizations() const { return h_; }
  const std::vector<double>& weights() const { return alpha_; }
  double normalization(std::size_t pos) const { return h_[pos]; }
  double weight(std::size_t pos) const { return alpha_[pos]; }

  friend bool operator==(const BasisSpec& a, const BasisSpec& b) {
    return a.domain_ == b.domain_ && a.max_index_ == b.max_index_;
  }

 private:
  Domain domain_;
  int max_index_;
  std::vector<Index2> indices_;
  std::vector<double> h_;
  std::vector<double> alpha_;
};

/// One real per basis index, ordered like BasisSpec::indices().
using CoefficientVector = std::vector<double>;

/// A trajectory's position samples, as consumed by the spectral routines.
using PointPath = std::vector<Vec2>;

double basis_eval(const BasisSpec& basis, Index2 k, const Vec2& x);
Vec2 basis_grad(const BasisSpec& basis, Index2 k, const Vec2& x);

/// Midpoint quadrature of the map against every basis function.
CoefficientVector map_coefficients(const GridMap& map, const BasisSpec& basis);

/// Time-average statistics of a set of equal-length paths.
CoefficientVector trajectory_coefficients(std::span<const PointPath> paths, const BasisSpec& basis);

double ergodic_metric(std::span<const double> c, std::span<const double> xi, const BasisSpec& basis);

/// d metric / d point for every sample of every path.
std::vector<PointPath> ergodic_gradient_points(std::span<const PointPath> paths,
                                               std::span<const double> xi, const BasisSpec& basis);

/// Metric and point gradients in one pass; cheaper than the two calls above.
double ergodic_metric_and_gradient(std::span<const PointPath> paths, std::span<const double> xi,
                                   const BasisSpec& basis, std::vector<PointPath>* gradients);

/// Evaluates sum_k coeffs_k f_k at the cell midpoints of an nx-by-ny grid.
GridMap reconstruct_map(std::span<const double> coeffs, const BasisSpec& basis, std::size_t nx,
                        std::size_t ny);

}  // namespace ergodic

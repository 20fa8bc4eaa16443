/**
 * @file allocation.hpp
 * @brief Spectral-scale task decomposition for heterogeneous teams.
 *
 * Nonzero basis indices are split into contiguous bands of |k|. The widest
 * sensor footprint gets the lowest band; band edges are placed so that each
 * band's share of the alpha-weighted target energy tracks that type's share
 * of the team.
 */
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ergodic/agents.hpp"
#include "ergodic/spectral.hpp"

namespace ergodic {

struct BandPartition {
  /// Agent type per band, widest sensor first.
  std::vector<int> type_ids;
  /// Agents of each band's type.
  std::vector<int> counts;
  /// Basis positions per band. k = 0 is booked in band 0 only.
  std::vector<std::vector<std::size_t>> bands;
  /// |k| upper edge (inclusive) of bands 0 .. M-2.
  std::vector<double> thresholds;

  std::size_t size() const { return bands.size(); }
  /// Band index that owns the given agent type.
  std::size_t band_of_type(int type_id) const;
};

/// alpha_k * xi_k^2 for every nonzero index; the quantity the bands split.
double band_energy(std::span<const double> xi, const BasisSpec& basis, std::span<const std::size_t> band);

BandPartition partition_bands(const BasisSpec& basis, std::span<const double> xi,
                              std::span<const AgentSpec> agents);

/// Per-band reconstructions without clipping; these sum to the full one.
std::vector<GridMap> band_reconstructions(std::span<const double> xi, const BandPartition& partition,
                                          const BasisSpec& basis, std::size_t nx, std::size_t ny);

/**
 * Target coefficients per band: band coefficients, scaled by
 * team size / type count, plus the mean term are reconstructed, clipped at
 * zero, renormalized and projected back onto the basis. Before clipping, the
 * count-weighted mean of the targets is xi. A single band returns xi
 * unchanged.
 */
std::vector<CoefficientVector> band_targets(std::span<const double> xi, const BandPartition& partition,
                                            const BasisSpec& basis, std::size_t resolution = 100);

}  // namespace ergodic

#include "ergodic/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace ergodic {

std::size_t BandPartition::band_of_type(int type_id) const {
  for (std::size_t b = 0; b < type_ids.size(); ++b)
    if (type_ids[b] == type_id) return b;
  throw LookupError("agent type " + std::to_string(type_id) + " has no spectral band");
}

double band_energy(std::span<const double> xi, const BasisSpec& basis, std::span<const std::size_t> band) {
  double e = 0.0;
  for (std::size_t pos : band) {
    if (pos == 0) continue;
    e += basis.weight(pos) * xi[pos] * xi[pos];
  }
  return e;
}

BandPartition partition_bands(const BasisSpec& basis, std::span<const double> xi,
                              std::span<const AgentSpec> agents) {
  if (xi.size() != basis.size()) throw PreconditionError("target coefficients do not match the basis");
  if (agents.empty()) throw ConfigError("team has no agents");

  struct TypeInfo {
    int type_id;
    double sigma;
    int count;
  };
  std::map<int, TypeInfo> by_type;
  for (const auto& a : agents) {
    auto [it, inserted] = by_type.try_emplace(a.type_id, TypeInfo{a.type_id, a.sensor.sigma, 0});
    if (!inserted && it->second.sigma != a.sensor.sigma)
      throw ConfigError("agents of type " + std::to_string(a.type_id) + " disagree on sensor sigma");
    ++it->second.count;
  }
  std::vector<TypeInfo> types;
  for (const auto& [_, t] : by_type) types.push_back(t);
  if (types.size() > 4) throw ConfigError("at most 4 agent types are supported");
  std::stable_sort(types.begin(), types.end(),
                   [](const TypeInfo& a, const TypeInfo& b) { return a.sigma > b.sigma; });

  BandPartition part;
  for (const auto& t : types) {
    part.type_ids.push_back(t.type_id);
    part.counts.push_back(t.count);
  }
  const std::size_t m = types.size();
  part.bands.resize(m);
  if (m == 1) {
    for (std::size_t i = 0; i < basis.size(); ++i) part.bands[0].push_back(i);
    return part;
  }

  // Energy per distinct squared norm, ascending, excluding k = 0.
  std::map<int, double> shell_energy;
  std::map<int, int> shell_count;
  for (std::size_t i = 1; i < basis.size(); ++i) {
    const auto k = basis.indices()[i];
    const int n2 = k.k1 * k.k1 + k.k2 * k.k2;
    shell_energy[n2] += basis.weight(i) * xi[i] * xi[i];
    shell_count[n2] += 1;
  }
  if (shell_energy.size() < m)
    throw ConfigError("basis has fewer frequency shells than agent types");

  std::vector<int> shells;
  std::vector<double> cumulative;
  double total = 0.0;
  double running = 0.0;
  for (const auto& [n2, e] : shell_energy) total += e;
  const bool use_counts = !(total > 0.0);
  double total_count = 0.0;
  for (const auto& [_, c] : shell_count) total_count += c;
  for (const auto& [n2, e] : shell_energy) {
    running += use_counts ? shell_count[n2] : e;
    shells.push_back(n2);
    cumulative.push_back(running / (use_counts ? total_count : total));
  }

  int team = 0;
  for (int c : part.counts) team += c;
  // cut[b] = last shell (inclusive) of band b.
  std::vector<std::size_t> cut;
  double target = 0.0;
  std::size_t lo = 0;
  for (std::size_t b = 0; b + 1 < m; ++b) {
    target += static_cast<double>(part.counts[b]) / team;
    const std::size_t hi = shells.size() - (m - 1 - b);  // leave one shell per later band
    std::size_t best = lo;
    double best_gap = std::abs(cumulative[lo] - target);
    for (std::size_t s = lo + 1; s < hi; ++s) {
      const double gap = std::abs(cumulative[s] - target);
      if (gap < best_gap) {
        best = s;
        best_gap = gap;
      }
    }
    cut.push_back(best);
    part.thresholds.push_back(std::sqrt(static_cast<double>(shells[best])));
    lo = best + 1;
  }

  part.bands[0].push_back(0);
  for (std::size_t i = 1; i < basis.size(); ++i) {
    const auto k = basis.indices()[i];
    const double r = std::sqrt(static_cast<double>(k.k1 * k.k1 + k.k2 * k.k2));
    std::size_t b = 0;
    while (b < part.thresholds.size() && r > part.thresholds[b]) ++b;
    part.bands[b].push_back(i);
  }
  return part;
}

std::vector<GridMap> band_reconstructions(std::span<const double> xi, const BandPartition& partition,
                                          const BasisSpec& basis, std::size_t nx, std::size_t ny) {
  std::vector<GridMap> out;
  for (const auto& band : partition.bands) {
    CoefficientVector coeffs(basis.size(), 0.0);
    for (std::size_t pos : band) coeffs[pos] = xi[pos];
    out.push_back(reconstruct_map(coeffs, basis, nx, ny));
  }
  return out;
}

std::vector<CoefficientVector> band_targets(std::span<const double> xi, const BandPartition& partition,
                                            const BasisSpec& basis, std::size_t resolution) {
  if (xi.size() != basis.size()) throw PreconditionError("target coefficients do not match the basis");
  if (partition.size() == 1) return {CoefficientVector(xi.begin(), xi.end())};

  int team = 0;
  for (int c : partition.counts) team += c;
  std::vector<CoefficientVector> targets;
  for (std::size_t b = 0; b < partition.size(); ++b) {
    // Each type carries its band at team / count strength, so the
    // count-weighted mean of the unclipped targets is xi itself.
    const double gain = static_cast<double>(team) / partition.counts[b];
    CoefficientVector coeffs(basis.size(), 0.0);
    coeffs[0] = xi[0];
    for (std::size_t pos : partition.bands[b])
      if (pos != 0) coeffs[pos] = gain * xi[pos];
    GridMap banded = reconstruct_map(coeffs, basis, resolution, resolution);
    bool any_positive = false;
    for (double& v : banded.cells()) {
      if (v > 0.0)
        any_positive = true;
      else
        v = 0.0;
    }
    if (!any_positive)
      throw DegenerateError("spectral band " + std::to_string(b) + " reconstructs to no positive mass");
    targets.push_back(map_coefficients(normalize(banded), basis));
  }
  return targets;
}

}  // namespace ergodic

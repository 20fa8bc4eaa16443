/**
 * @file svg.hpp
 * @brief SVG rendering of an information map with start regions and planned
 *        trajectories.
 */
#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "ergodic/agents.hpp"
#include "ergodic/grid_map.hpp"
#include "ergodic/maps.hpp"
#include "ergodic/optimizer.hpp"

namespace ergodic {

/// Heatmap, dashed region outlines, one polyline per agent colored by type
/// and a marker at each start. `solution` may be null.
std::string render_svg_string(const GridMap& map, const StartRegionSet& regions,
                              std::span<const AgentSpec> agents, const Solution* solution);

void render_svg(const GridMap& map, const StartRegionSet& regions, std::span<const AgentSpec> agents,
                const Solution* solution, const std::filesystem::path& path);

}  // namespace ergodic

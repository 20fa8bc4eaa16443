#include "ergodic/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace ergodic {
namespace {

constexpr double kCanvas = 600.0;

struct Rgb {
  int r, g, b;
};

// Five-stop approximation of the viridis ramp.
Rgb ramp(double t) {
  static constexpr std::array<Rgb, 5> stops{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * (stops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
  const double f = t - static_cast<double>(i);
  auto mix = [f](int a, int b) { return static_cast<int>(std::lround(a + f * (b - a))); };
  return {mix(stops[i].r, stops[i + 1].r), mix(stops[i].g, stops[i + 1].g), mix(stops[i].b, stops[i + 1].b)};
}

const char* type_color(int type_id) {
  static constexpr std::array<const char*, 4> colors{"#ff6f00", "#00e5ff", "#ffffff", "#d500f9"};
  return colors[static_cast<std::size_t>(std::abs(type_id)) % colors.size()];
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string render_svg_string(const GridMap& map, const StartRegionSet& regions,
                              std::span<const AgentSpec> agents, const Solution* solution) {
  const Domain& d = map.domain();
  const double scale = kCanvas / std::max(d.width, d.height);
  const double w = d.width * scale;
  const double h = d.height * scale;
  auto sx = [&](double x) { return fmt(x * scale); };
  auto sy = [&](double y) { return fmt(h - y * scale); };

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) +
         "\" viewBox=\"0 0 " + fmt(w) + " " + fmt(h) + "\">\n";

  out += "<g id=\"heatmap\" shape-rendering=\"crispEdges\">\n";
  const double vmax = map.cells().empty() ? 0.0 : *std::max_element(map.cells().begin(), map.cells().end());
  const double cw = w / static_cast<double>(map.nx());
  const double ch = h / static_cast<double>(map.ny());
  for (std::size_t iy = 0; iy < map.ny(); ++iy) {
    for (std::size_t ix = 0; ix < map.nx(); ++ix) {
      const Rgb c = ramp(vmax > 0.0 ? map.at(ix, iy) / vmax : 0.0);
      char color[8];
      std::snprintf(color, sizeof(color), "#%02x%02x%02x", c.r, c.g, c.b);
      out += "<rect x=\"" + fmt(ix * cw) + "\" y=\"" + fmt(h - (iy + 1) * ch) + "\" width=\"" + fmt(cw + 0.5) +
             "\" height=\"" + fmt(ch + 0.5) + "\" fill=\"" + color + "\"/>\n";
    }
  }
  out += "</g>\n";

  out += "<g id=\"regions\" fill=\"none\" stroke-width=\"2\" stroke-dasharray=\"8 5\">\n";
  for (int t : regions.types()) {
    for (const auto& r : regions.rects(t)) {
      out += "<rect data-type=\"" + std::to_string(t) + "\" x=\"" + sx(r.xmin) + "\" y=\"" + sy(r.ymax) +
             "\" width=\"" + fmt((r.xmax - r.xmin) * scale) + "\" height=\"" + fmt((r.ymax - r.ymin) * scale) +
             "\" stroke=\"" + (t == 0 ? "#ff69b4" : type_color(t)) + "\"/>\n";
    }
  }
  out += "</g>\n";

  if (solution != nullptr) {
    out += "<g id=\"trajectories\" fill=\"none\" stroke-width=\"2\">\n";
    for (std::size_t i = 0; i < solution->trajectories.size(); ++i) {
      const int type = i < agents.size() ? agents[i].type_id : 0;
      out += "<polyline data-agent=\"" + std::to_string(i) + "\" stroke=\"" + type_color(type) + "\" points=\"";
      bool first = true;
      for (const auto& s : solution->trajectories[i].states) {
        if (!first) out += ' ';
        first = false;
        out += sx(s.position.x) + "," + sy(s.position.y);
      }
      out += "\"/>\n";
    }
    out += "</g>\n<g id=\"starts\" stroke=\"#000000\" stroke-width=\"1.5\">\n";
    for (std::size_t i = 0; i < solution->starts.size(); ++i) {
      const int type = i < agents.size() ? agents[i].type_id : 0;
      const Vec2& p = solution->starts[i].position;
      out += "<circle cx=\"" + sx(p.x) + "\" cy=\"" + sy(p.y) + "\" r=\"6\" fill=\"" + type_color(type) + "\"/>\n";
    }
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

void render_svg(const GridMap& map, const StartRegionSet& regions, std::span<const AgentSpec> agents,
                const Solution* solution, const std::filesystem::path& path) {
  const std::string svg = render_svg_string(map, regions, agents, solution);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot open file for writing");
  out << svg;
  if (!out) throw Error(path.string() + ": write failed");
}

}  // namespace ergodic

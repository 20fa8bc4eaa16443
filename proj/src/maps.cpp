#include "ergodic/maps.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

namespace ergodic {

double GaussianComponent::density(const Vec2& p) const {
  const double det = cov_xx * cov_yy - cov_xy * cov_xy;
  const double dx = p.x - mean.x;
  const double dy = p.y - mean.y;
  // Quadratic form with the inverse covariance.
  const double q = (cov_yy * dx * dx - 2.0 * cov_xy * dx * dy + cov_xx * dy * dy) / det;
  return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
}

GmmSpec random_gmm_spec(std::uint64_t seed, const Domain& domain) {
  Rng rng(seed);
  std::uniform_int_distribution<int> count_dist(2, 5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double side = std::min(domain.width, domain.height);
  std::uniform_real_distribution<double> sigma_dist(0.05 * side, 0.2 * side);
  std::uniform_real_distribution<double> weight_dist(0.5, 1.5);

  GmmSpec spec;
  spec.seed = seed;
  const int count = count_dist(rng);
  double total = 0.0;
  for (int i = 0; i < count; ++i) {
    GaussianComponent c;
    c.mean = {unit(rng) * domain.width, unit(rng) * domain.height};
    const double s = sigma_dist(rng);
    c.cov_xx = c.cov_yy = s * s;
    c.cov_xy = 0.0;
    c.weight = weight_dist(rng);
    total += c.weight;
    spec.components.push_back(c);
  }
  for (auto& c : spec.components) c.weight /= total;
  return spec;
}

GridMap generate_gmm_map(const GmmSpec& spec, std::size_t nx, std::size_t ny, const Domain& domain) {
  if (spec.components.empty()) throw PreconditionError("mixture needs at least one component");
  double wsum = 0.0;
  for (const auto& c : spec.components) {
    if (!(c.weight > 0.0)) throw PreconditionError("mixture weights must be positive");
    if (!domain.contains(c.mean)) throw PreconditionError("mixture mean lies outside the domain");
    if (!(c.cov_xx > 0.0) || !(c.cov_xx * c.cov_yy - c.cov_xy * c.cov_xy > 0.0))
      throw PreconditionError("mixture covariance is not positive definite");
    wsum += c.weight;
  }
  if (std::abs(wsum - 1.0) > 1e-12) throw PreconditionError("mixture weights must sum to 1");

  GridMap map(nx, ny, domain);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const Vec2 p = map.midpoint(ix, iy);
      double v = 0.0;
      for (const auto& c : spec.components) v += c.weight * c.density(p);
      map.at(ix, iy) = v;
    }
  }
  return normalize(map);
}

Vec2 Rect::clamp(const Vec2& p) const {
  return {std::clamp(p.x, xmin, xmax), std::clamp(p.y, ymin, ymax)};
}

void StartRegionSet::add(int type_id, const Rect& r) {
  if (!(r.xmax > r.xmin) || !(r.ymax > r.ymin))
    throw PreconditionError("start region must have positive area");
  if (r.xmin < 0.0 || r.ymin < 0.0 || r.xmax > domain_.width || r.ymax > domain_.height)
    throw PreconditionError("start region leaves the domain");
  regions_[type_id].push_back(r);
}

const std::vector<Rect>& StartRegionSet::rects(int type_id) const {
  const auto it = regions_.find(type_id);
  if (it == regions_.end())
    throw LookupError("no start regions for agent type " + std::to_string(type_id));
  return it->second;
}

std::vector<int> StartRegionSet::types() const {
  std::vector<int> out;
  for (const auto& [t, _] : regions_) out.push_back(t);
  return out;
}

bool StartRegionSet::contains(int type_id, const Vec2& p) const {
  const auto& rs = rects(type_id);
  return std::any_of(rs.begin(), rs.end(), [&](const Rect& r) { return r.contains(p); });
}

double StartRegionSet::area(int type_id) const {
  double a = 0.0;
  for (const auto& r : rects(type_id)) a += r.area();
  return a;
}

Vec2 sample_in_rects(std::span<const Rect> rs, Rng& rng) {
  if (rs.empty()) throw PreconditionError("cannot sample from an empty region list");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double total = 0.0;
  for (const auto& r : rs) total += r.area();
  double pick = unit(rng) * total;
  std::size_t chosen = rs.size() - 1;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (pick < rs[i].area()) {
      chosen = i;
      break;
    }
    pick -= rs[i].area();
  }
  const Rect& r = rs[chosen];
  const double ux = unit(rng);
  const double uy = unit(rng);
  return r.clamp({r.xmin + ux * (r.xmax - r.xmin), r.ymin + uy * (r.ymax - r.ymin)});
}

Vec2 sample_start(const StartRegionSet& regions, int type_id, Rng& rng) {
  return sample_in_rects(regions.rects(type_id), rng);
}

Vec2 project_to_regions(const Vec2& x, const StartRegionSet& regions, int type_id) {
  const auto& rs = regions.rects(type_id);
  Vec2 best = rs.front().clamp(x);
  double best_d2 = dot(best - x, best - x);
  for (std::size_t i = 1; i < rs.size(); ++i) {
    const Vec2 c = rs[i].clamp(x);
    const double d2 = dot(c - x, c - x);
    if (d2 < best_d2) {
      best = c;
      best_d2 = d2;
    }
  }
  return best;
}

std::vector<Rect> common_regions(const StartRegionSet& regions, const std::vector<int>& types) {
  if (types.empty()) return {};
  std::vector<Rect> acc = regions.rects(types.front());
  for (std::size_t t = 1; t < types.size(); ++t) {
    std::vector<Rect> next;
    for (const auto& a : acc) {
      for (const auto& b : regions.rects(types[t])) {
        const Rect r{std::max(a.xmin, b.xmin), std::max(a.ymin, b.ymin), std::min(a.xmax, b.xmax),
                     std::min(a.ymax, b.ymax)};
        if (r.xmax > r.xmin && r.ymax > r.ymin) next.push_back(r);
      }
    }
    acc = std::move(next);
  }
  return acc;
}

bool cyclic_project(const Vec2& x, const StartRegionSet& regions, const std::vector<int>& types,
                    Vec2* out, int rounds) {
  Vec2 p = x;
  for (int round = 0; round < rounds; ++round) {
    for (int t : types) p = project_to_regions(p, regions, t);
    const bool ok = std::all_of(types.begin(), types.end(),
                                [&](int t) { return regions.contains(t, p); });
    if (ok) {
      *out = p;
      return true;
    }
  }
  return false;
}

namespace {

Rect random_rect(Rng& rng, const Domain& domain, double area) {
  std::uniform_real_distribution<double> aspect(0.5, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double ratio = aspect(rng);
  const double w = std::min(std::sqrt(area * ratio), domain.width);
  const double h = std::min(area / w, domain.height);
  const double x0 = unit(rng) * (domain.width - w);
  const double y0 = unit(rng) * (domain.height - h);
  return {x0, y0, x0 + w, y0 + h};
}

}  // namespace

StartRegionSet random_start_regions(std::uint64_t seed, const Domain& domain, int type_count) {
  if (type_count < 1) throw ConfigError("need at least one agent type");
  Rng rng(seed);
  std::uniform_int_distribution<int> count_dist(2, 4);
  std::uniform_real_distribution<double> frac_dist(0.05, 0.15);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  StartRegionSet set(domain);
  const int count = count_dist(rng);
  const double per_rect = frac_dist(rng) * domain.area() / count;
  std::vector<Rect> base;
  for (int i = 0; i < count; ++i) {
    base.push_back(random_rect(rng, domain, per_rect));
    set.add(0, base.back());
  }
  for (int t = 1; t < type_count; ++t) {
    const std::size_t forced = std::uniform_int_distribution<std::size_t>(0, base.size() - 1)(rng);
    for (std::size_t i = 0; i < base.size(); ++i) {
      if (i != forced && unit(rng) < 0.5) continue;
      const Rect& b = base[i];
      const double w = 0.6 * (b.xmax - b.xmin);
      const double h = 0.6 * (b.ymax - b.ymin);
      const double x0 = b.xmin + unit(rng) * (b.xmax - b.xmin - w);
      const double y0 = b.ymin + unit(rng) * (b.ymax - b.ymin - h);
      set.add(t, {x0, y0, x0 + w, y0 + h});
    }
    set.add(t, random_rect(rng, domain, per_rect));
  }
  return set;
}

// ---------------------------------------------------------------------------
// Text I/O

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

class Tokenizer {
 public:
  Tokenizer(std::string text, std::string source) : text_(std::move(text)), source_(std::move(source)) {}

  bool next(std::string* tok) {
    skip_space();
    if (pos_ >= text_.size()) return false;
    tok_line_ = line_;
    tok_col_ = pos_ - line_start_ + 1;
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    *tok = text_.substr(start, pos_ - start);
    return true;
  }

  std::string expect(const char* what) {
    std::string tok;
    if (!next(&tok)) fail(std::string("unexpected end of file, expected ") + what, true);
    return tok;
  }

  double expect_double(const char* what) {
    const std::string tok = expect(what);
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(v))
      fail("invalid number '" + tok + "' for " + what);
    return v;
  }

  long long expect_int(const char* what) {
    const std::string tok = expect(what);
    long long v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      fail("invalid integer '" + tok + "' for " + what);
    return v;
  }

  /// Line the most recent token started on.
  std::size_t line() const { return tok_line_; }
  bool at_line_end() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r'))
      ++pos_;
    return pos_ >= text_.size() || text_[pos_] == '\n';
  }

  [[noreturn]] void fail(const std::string& msg, bool at_end = false) const {
    std::ostringstream os;
    if (at_end)
      os << source_ << ": line " << line_ << ": " << msg;
    else
      os << source_ << ": line " << tok_line_ << ", column " << tok_col_ << ": " << msg;
    throw ParseError(os.str());
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') {
        ++line_;
        line_start_ = pos_ + 1;
      }
      ++pos_;
    }
  }

  std::string text_;
  std::string source_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t line_start_ = 0;
  std::size_t tok_line_ = 1;
  std::size_t tok_col_ = 1;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot open file for writing");
  out << content;
  if (!out) throw Error(path.string() + ": write failed");
}

void expect_header(Tokenizer& tok, const char* magic) {
  const std::string m = tok.expect("file magic");
  if (m != magic) tok.fail(std::string("expected '") + magic + "' header, found '" + m + "'");
  const long long version = tok.expect_int("format version");
  if (version != 1) tok.fail("unsupported format version " + std::to_string(version));
}

}  // namespace

void save_map(const GridMap& map, const std::filesystem::path& path) {
  std::string out = "ERGMAP 1\n";
  out += std::to_string(map.nx()) + " " + std::to_string(map.ny()) + " " +
         format_double(map.domain().width) + " " + format_double(map.domain().height) + "\n";
  for (std::size_t iy = 0; iy < map.ny(); ++iy) {
    for (std::size_t ix = 0; ix < map.nx(); ++ix) {
      if (ix) out += ' ';
      out += format_double(map.at(ix, iy));
    }
    out += '\n';
  }
  write_file(path, out);
}

GridMap load_map(const std::filesystem::path& path) {
  Tokenizer tok(read_file(path), path.string());
  expect_header(tok, "ERGMAP");
  const long long nx = tok.expect_int("nx");
  const long long ny = tok.expect_int("ny");
  if (nx <= 0 || ny <= 0) tok.fail("grid dimensions must be positive");
  const double w = tok.expect_double("L1");
  const double h = tok.expect_double("L2");
  if (!(w > 0.0) || !(h > 0.0)) tok.fail("domain lengths must be positive");
  const std::size_t count = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  std::vector<double> cells;
  cells.reserve(count);
  std::string t;
  while (tok.next(&t)) {
    if (cells.size() == count)
      tok.fail("dimension mismatch: more than nx*ny = " + std::to_string(count) + " cell values");
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v))
      tok.fail("invalid cell value '" + t + "'");
    if (v < 0.0) tok.fail("negative cell value " + t);
    cells.push_back(v);
  }
  if (cells.size() != count)
    tok.fail("dimension mismatch: expected nx*ny = " + std::to_string(count) + " cell values, found " +
                 std::to_string(cells.size()),
             true);
  return GridMap(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny), Domain{w, h},
                 std::move(cells));
}

void save_regions(const StartRegionSet& regions, const std::filesystem::path& path) {
  std::string out = "ERGSTART 1\n";
  for (int t : regions.types()) {
    for (const auto& r : regions.rects(t)) {
      out += std::to_string(t) + " " + format_double(r.xmin) + " " + format_double(r.ymin) + " " +
             format_double(r.xmax) + " " + format_double(r.ymax) + "\n";
    }
  }
  write_file(path, out);
}

StartRegionSet load_regions(const std::filesystem::path& path, const Domain& domain) {
  Tokenizer tok(read_file(path), path.string());
  expect_header(tok, "ERGSTART");
  StartRegionSet set(domain);
  std::string t;
  while (tok.next(&t)) {
    long long type = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), type);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) tok.fail("invalid type id '" + t + "'");
    const std::size_t line = tok.line();
    Rect r;
    r.xmin = tok.expect_double("xmin");
    r.ymin = tok.expect_double("ymin");
    r.xmax = tok.expect_double("xmax");
    r.ymax = tok.expect_double("ymax");
    if (!tok.at_line_end()) tok.fail("trailing tokens after rectangle");
    try {
      set.add(static_cast<int>(type), r);
    } catch (const PreconditionError& e) {
      throw ParseError(path.string() + ": line " + std::to_string(line) + ": " + e.what());
    }
  }
  if (set.types().empty()) tok.fail("no start regions defined", true);
  return set;
}

}  // namespace ergodic

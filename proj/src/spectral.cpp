#include "ergodic/spectral.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace ergodic {
namespace {

constexpr double kPi = std::numbers::pi;

void check_in_domain(const Domain& d, const Vec2& x) {
  if (!d.contains(x))
    throw DomainError("point (" + std::to_string(x.x) + ", " + std::to_string(x.y) +
                      ") lies outside the search domain");
}

void check_index(const BasisSpec& basis, Index2 k) {
  const int kmax = basis.max_index();
  if (k.k1 < 0 || k.k2 < 0 || k.k1 > kmax || k.k2 > kmax)
    throw PreconditionError("basis index out of range");
}

void check_lengths(std::span<const double> a, const BasisSpec& basis, const char* what) {
  if (a.size() != basis.size())
    throw PreconditionError(std::string(what) + " length does not match the basis size");
}

// cos(k pi x / L) and sin(k pi x / L) for k = 0..K at one point.
struct AxisTable {
  std::vector<double> cx, sx, cy, sy;

  AxisTable(const BasisSpec& basis, const Vec2& p) {
    const int n = basis.max_index() + 1;
    cx.resize(n);
    sx.resize(n);
    cy.resize(n);
    sy.resize(n);
    const double ax = kPi * p.x / basis.domain().width;
    const double ay = kPi * p.y / basis.domain().height;
    for (int k = 0; k < n; ++k) {
      cx[k] = std::cos(k * ax);
      sx[k] = std::sin(k * ax);
      cy[k] = std::cos(k * ay);
      sy[k] = std::sin(k * ay);
    }
  }
};

void check_paths(std::span<const PointPath> paths, const BasisSpec& basis) {
  if (paths.empty()) throw PreconditionError("need at least one path");
  const std::size_t len = paths.front().size();
  if (len == 0) throw PreconditionError("paths need at least one sample");
  for (const auto& path : paths) {
    if (path.size() != len) throw PreconditionError("paths have mismatched sample counts");
    for (const auto& p : path) check_in_domain(basis.domain(), p);
  }
}

}  // namespace

BasisSpec::BasisSpec(Domain domain, int max_index) : domain_(domain), max_index_(max_index) {
  if (!(domain.width > 0.0) || !(domain.height > 0.0))
    throw PreconditionError("basis domain lengths must be positive");
  if (max_index < 0) throw PreconditionError("basis max_index must be nonnegative");
  const int n = max_index + 1;
  indices_.reserve(n * n);
  h_.reserve(n * n);
  alpha_.reserve(n * n);
  for (int k1 = 0; k1 < n; ++k1) {
    for (int k2 = 0; k2 < n; ++k2) {
      indices_.push_back({k1, k2});
      // integral of cos^2(k pi x / L) over [0, L] is L for k = 0 and L/2 otherwise
      const double ix = k1 == 0 ? domain.width : 0.5 * domain.width;
      const double iy = k2 == 0 ? domain.height : 0.5 * domain.height;
      h_.push_back(std::sqrt(ix * iy));
      alpha_.push_back(std::pow(1.0 + static_cast<double>(k1 * k1 + k2 * k2), -1.5));
    }
  }
}

std::size_t BasisSpec::position(Index2 k) const {
  if (k.k1 < 0 || k.k2 < 0 || k.k1 > max_index_ || k.k2 > max_index_)
    throw PreconditionError("basis index out of range");
  return static_cast<std::size_t>(k.k1) * (max_index_ + 1) + static_cast<std::size_t>(k.k2);
}

double basis_eval(const BasisSpec& basis, Index2 k, const Vec2& x) {
  check_index(basis, k);
  check_in_domain(basis.domain(), x);
  const double h = basis.normalization(basis.position(k));
  return std::cos(k.k1 * kPi * x.x / basis.domain().width) *
         std::cos(k.k2 * kPi * x.y / basis.domain().height) / h;
}

Vec2 basis_grad(const BasisSpec& basis, Index2 k, const Vec2& x) {
  check_index(basis, k);
  check_in_domain(basis.domain(), x);
  const double h = basis.normalization(basis.position(k));
  const double wx = k.k1 * kPi / basis.domain().width;
  const double wy = k.k2 * kPi / basis.domain().height;
  return {-wx * std::sin(wx * x.x) * std::cos(wy * x.y) / h,
          -wy * std::cos(wx * x.x) * std::sin(wy * x.y) / h};
}

CoefficientVector map_coefficients(const GridMap& map, const BasisSpec& basis) {
  if (!is_normalized(map))
    throw PreconditionError("map must be nonnegative and integrate to 1 before projection");
  if (!(map.domain() == basis.domain()))
    throw PreconditionError("map and basis cover different domains");

  const int n = basis.max_index() + 1;
  // Separable sum: first over x within each row, then over rows.
  std::vector<double> cos_x(map.nx() * n);
  for (std::size_t ix = 0; ix < map.nx(); ++ix) {
    const double x = map.midpoint(ix, 0).x;
    for (int k = 0; k < n; ++k) cos_x[ix * n + k] = std::cos(k * kPi * x / basis.domain().width);
  }
  std::vector<double> acc(basis.size(), 0.0);
  std::vector<double> row(n);
  for (std::size_t iy = 0; iy < map.ny(); ++iy) {
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t ix = 0; ix < map.nx(); ++ix) {
      const double v = map.at(ix, iy);
      for (int k = 0; k < n; ++k) row[k] += v * cos_x[ix * n + k];
    }
    const double y = map.midpoint(0, iy).y;
    for (int k2 = 0; k2 < n; ++k2) {
      const double cy = std::cos(k2 * kPi * y / basis.domain().height);
      for (int k1 = 0; k1 < n; ++k1) acc[k1 * n + k2] += row[k1] * cy;
    }
  }
  CoefficientVector xi(basis.size());
  for (std::size_t i = 0; i < xi.size(); ++i) xi[i] = acc[i] * map.cell_area() / basis.normalization(i);
  return xi;
}

CoefficientVector trajectory_coefficients(std::span<const PointPath> paths, const BasisSpec& basis) {
  check_paths(paths, basis);
  const int n = basis.max_index() + 1;
  CoefficientVector c(basis.size(), 0.0);
  for (const auto& path : paths) {
    for (const auto& p : path) {
      const AxisTable t(basis, p);
      for (int k1 = 0; k1 < n; ++k1)
        for (int k2 = 0; k2 < n; ++k2) c[k1 * n + k2] += t.cx[k1] * t.cy[k2];
    }
  }
  const double samples = static_cast<double>(paths.size() * paths.front().size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] /= samples * basis.normalization(i);
  return c;
}

double ergodic_metric(std::span<const double> c, std::span<const double> xi, const BasisSpec& basis) {
  check_lengths(c, basis, "trajectory coefficient vector");
  check_lengths(xi, basis, "target coefficient vector");
  double phi = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double d = c[i] - xi[i];
    phi += basis.weight(i) * d * d;
  }
  return phi;
}

double ergodic_metric_and_gradient(std::span<const PointPath> paths, std::span<const double> xi,
                                   const BasisSpec& basis, std::vector<PointPath>* gradients) {
  check_paths(paths, basis);
  check_lengths(xi, basis, "target coefficient vector");
  const int n = basis.max_index() + 1;

  std::vector<AxisTable> tables;
  tables.reserve(paths.size() * paths.front().size());
  for (const auto& path : paths)
    for (const auto& p : path) tables.emplace_back(basis, p);

  CoefficientVector c(basis.size(), 0.0);
  for (const auto& t : tables)
    for (int k1 = 0; k1 < n; ++k1)
      for (int k2 = 0; k2 < n; ++k2) c[k1 * n + k2] += t.cx[k1] * t.cy[k2];
  const double samples = static_cast<double>(tables.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] /= samples * basis.normalization(i);

  const double phi = ergodic_metric(c, xi, basis);
  if (gradients == nullptr) return phi;

  // W_k = alpha_k (c_k - xi_k) / h_k, the common factor of every point gradient.
  std::vector<double> w(basis.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = basis.weight(i) * (c[i] - xi[i]) / basis.normalization(i);

  const double scale = 2.0 / samples;
  const double fx = kPi / basis.domain().width;
  const double fy = kPi / basis.domain().height;
  std::vector<double> wc(n), ws(n);
  gradients->assign(paths.size(), {});
  std::size_t t_idx = 0;
  for (std::size_t a = 0; a < paths.size(); ++a) {
    auto& out = (*gradients)[a];
    out.resize(paths[a].size());
    for (std::size_t j = 0; j < paths[a].size(); ++j, ++t_idx) {
      const AxisTable& t = tables[t_idx];
      double gx = 0.0;
      double gy = 0.0;
      for (int k1 = 0; k1 < n; ++k1) {
        double sum_c = 0.0;
        double sum_s = 0.0;
        for (int k2 = 0; k2 < n; ++k2) {
          const double wk = w[k1 * n + k2];
          sum_c += wk * t.cy[k2];
          sum_s += wk * k2 * t.sy[k2];
        }
        gx -= k1 * t.sx[k1] * sum_c;
        gy -= t.cx[k1] * sum_s;
      }
      out[j] = {scale * fx * gx, scale * fy * gy};
    }
  }
  return phi;
}

std::vector<PointPath> ergodic_gradient_points(std::span<const PointPath> paths,
                                               std::span<const double> xi, const BasisSpec& basis) {
  std::vector<PointPath> grads;
  ergodic_metric_and_gradient(paths, xi, basis, &grads);
  return grads;
}

GridMap reconstruct_map(std::span<const double> coeffs, const BasisSpec& basis, std::size_t nx,
                        std::size_t ny) {
  check_lengths(coeffs, basis, "coefficient vector");
  if (nx < 2 || ny < 2) throw PreconditionError("reconstruction needs at least 2 cells per axis");
  GridMap out(nx, ny, basis.domain());
  const int n = basis.max_index() + 1;
  // Fold coefficients with the y-cosines per row, then with the x-cosines.
  std::vector<double> cos_x(nx * n);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    const double x = out.midpoint(ix, 0).x;
    for (int k = 0; k < n; ++k) cos_x[ix * n + k] = std::cos(k * kPi * x / basis.domain().width);
  }
  std::vector<double> row(n);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    const double y = out.midpoint(0, iy).y;
    std::fill(row.begin(), row.end(), 0.0);
    for (int k2 = 0; k2 < n; ++k2) {
      const double cy = std::cos(k2 * kPi * y / basis.domain().height);
      for (int k1 = 0; k1 < n; ++k1) {
        const std::size_t i = k1 * n + k2;
        row[k1] += coeffs[i] / basis.normalization(i) * cy;
      }
    }
    for (std::size_t ix = 0; ix < nx; ++ix) {
      double v = 0.0;
      for (int k1 = 0; k1 < n; ++k1) v += row[k1] * cos_x[ix * n + k1];
      out.at(ix, iy) = v;
    }
  }
  return out;
}

}  // namespace ergodic

#include "homlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "homlab/errors.hpp"

namespace homlab {

namespace {

double superellipse_max_radius(const ObstacleSpec& s, int dim) {
  // Boundary points x_a = s_a t_a^(1/p) with t on the unit simplex.
  const int m = dim == 2 ? 20000 : 600;
  const double p = s.exponent;
  double best = 0.0;
  if (dim == 2) {
    for (int i = 0; i <= m; ++i) {
      const double t = double(i) / m;
      const double x = s.semi_axes[0] * std::pow(t, 1.0 / p);
      const double y = s.semi_axes[1] * std::pow(1.0 - t, 1.0 / p);
      best = std::max(best, std::hypot(x, y));
    }
  } else {
    for (int i = 0; i <= m; ++i)
      for (int j = 0; i + j <= m; ++j) {
        const double t0 = double(i) / m, t1 = double(j) / m, t2 = std::max(0.0, 1.0 - t0 - t1);
        const double x = s.semi_axes[0] * std::pow(t0, 1.0 / p);
        const double y = s.semi_axes[1] * std::pow(t1, 1.0 / p);
        const double z = s.semi_axes[2] * std::pow(t2, 1.0 / p);
        best = std::max(best, std::sqrt(x * x + y * y + z * z));
      }
  }
  return best;
}

Mask reference_mask(const Obstacle& obs, const Lattice& lat) {
  Mask fluid(lat.cell_count(), 1);
  if (obs.empty()) return fluid;
  for (std::size_t c = 0; c < fluid.size(); ++c) fluid[c] = obs.contains(lat.cell_center(lat.cell_coords(c))) ? 0 : 1;
  return fluid;
}

}  // namespace

bool Obstacle::contains(const Vec3& y) const {
  switch (spec.shape) {
    case ObstacleShape::none:
      return false;
    case ObstacleShape::ball: {
      double r2 = 0.0;
      for (int a = 0; a < dim; ++a) r2 += y[a] * y[a];
      return r2 <= spec.radius * spec.radius;
    }
    case ObstacleShape::superellipse: {
      double s = 0.0;
      for (int a = 0; a < dim; ++a) s += std::pow(std::abs(y[a] / spec.semi_axes[a]), spec.exponent);
      return s <= 1.0;
    }
  }
  return false;
}

double Obstacle::volume() const {
  switch (spec.shape) {
    case ObstacleShape::none:
      return 0.0;
    case ObstacleShape::ball:
      return dim == 2 ? std::numbers::pi * spec.radius * spec.radius
                      : 4.0 / 3.0 * std::numbers::pi * std::pow(spec.radius, 3);
    case ObstacleShape::superellipse: {
      const double p = spec.exponent;
      double v = std::pow(2.0 * std::tgamma(1.0 + 1.0 / p), dim) / std::tgamma(1.0 + dim / p);
      for (int a = 0; a < dim; ++a) v *= spec.semi_axes[a];
      return v;
    }
  }
  return 0.0;
}

double Obstacle::porosity() const { return 1.0 - volume() / std::pow(2.0, dim); }

Obstacle make_obstacle(const ObstacleSpec& spec, int dim) {
  if (dim != 2 && dim != 3) throw ConfigError("dimension must be 2 or 3");
  Obstacle o;
  o.spec = spec;
  o.dim = dim;
  switch (spec.shape) {
    case ObstacleShape::none:
      o.clearance = 1.0;
      o.cell_distance = 1.0;
      break;
    case ObstacleShape::ball:
      if (!(spec.radius > 0.0)) throw ConfigError("obstacle radius must be positive");
      if (!(spec.radius < 1.0)) throw ConfigError("obstacle must lie strictly inside the unit ball (radius < 1)");
      o.clearance = 1.0 - spec.radius;
      o.cell_distance = 1.0 - spec.radius;
      break;
    case ObstacleShape::superellipse: {
      if (!(spec.exponent >= 1.0)) throw ConfigError("superellipse exponent must be >= 1");
      double smax = 0.0;
      for (int a = 0; a < dim; ++a) {
        if (!(spec.semi_axes[a] > 0.0)) throw ConfigError("superellipse semi-axes must be positive");
        smax = std::max(smax, spec.semi_axes[a]);
      }
      const double rmax = superellipse_max_radius(spec, dim);
      if (!(rmax < 1.0)) throw ConfigError("obstacle must lie strictly inside the unit ball");
      o.clearance = 1.0 - rmax;
      o.cell_distance = 1.0 - smax;
      break;
    }
  }
  return o;
}

bool fluid_connected(const Lattice& lat, const Mask& fluid) {
  std::size_t start = fluid.size();
  std::size_t total = 0;
  for (std::size_t c = 0; c < fluid.size(); ++c)
    if (fluid[c]) {
      ++total;
      if (start == fluid.size()) start = c;
    }
  if (total == 0) return false;
  std::vector<std::uint8_t> seen(fluid.size(), 0);
  std::vector<std::size_t> stack{start};
  seen[start] = 1;
  std::size_t reached = 0;
  while (!stack.empty()) {
    const std::size_t c = stack.back();
    stack.pop_back();
    ++reached;
    const Index3 cc = lat.cell_coords(c);
    for (int a = 0; a < lat.dim; ++a)
      for (int s = -1; s <= 1; s += 2) {
        Index3 nb = cc;
        nb[a] = lat.wrap(a, cc[a] + s);
        if (nb[a] < 0) continue;
        const std::size_t g = lat.cell_index(nb);
        if (fluid[g] && !seen[g]) {
          seen[g] = 1;
          stack.push_back(g);
        }
      }
  }
  return reached == total;
}

CellGrid build_reference_cell(const Obstacle& obstacle, int dim, int n) {
  if (n < 16) throw ConfigError("cell resolution must be at least 16");
  if (n % 2 != 0) throw ConfigError("cell resolution must be even");
  if (obstacle.dim != dim) throw ConfigError("obstacle dimension does not match cell dimension");
  CellGrid g;
  g.obstacle = obstacle;
  g.dim = dim;
  g.n = n;
  g.lattice = Lattice::make(dim, {n, n, n}, 2.0 / n, {-1.0, -1.0, -1.0}, true);
  g.fluid = reference_mask(obstacle, g.lattice);
  std::size_t count = 0;
  for (auto v : g.fluid) count += v;
  g.theta_h = double(count) / double(g.fluid.size());
  if (!fluid_connected(g.lattice, g.fluid))
    throw ConfigError("fluid part of the reference cell is disconnected at resolution n = " + std::to_string(n));
  return g;
}

DomainKind parse_domain_kind(const std::string& s) {
  if (s == "torus") return DomainKind::torus;
  if (s == "box") return DomainKind::box;
  throw ConfigError("domain kind must be 'torus' or 'box', got '" + s + "'");
}

std::string to_string(DomainKind k) { return k == DomainKind::torus ? "torus" : "box"; }

std::size_t PerforatedGrid::local_face(const Lattice& ref, int axis, const Index3& f) const {
  return ref.face_index(axis, f[0] % n_per_cell, f[1] % n_per_cell, f[2] % n_per_cell);
}

double PerforatedGrid::distance_to_boundary(const Vec3& x) const {
  if (kind == DomainKind::torus) return std::numeric_limits<double>::infinity();
  double d = std::numeric_limits<double>::infinity();
  for (int a = 0; a < lattice.dim; ++a) d = std::min({d, x[a], length[a] - x[a]});
  return std::max(d, 0.0);
}

PerforatedGrid build_perforated_grid(DomainKind kind, Vec3 length, double epsilon, const Obstacle& obstacle,
                                     int n_per_cell, bool with_holes) {
  const int dim = obstacle.dim;
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (n_per_cell < 4 || n_per_cell % 2 != 0) throw ConfigError("n_per_cell must be even and at least 4");
  PerforatedGrid g;
  g.kind = kind;
  g.epsilon = epsilon;
  g.n_per_cell = n_per_cell;
  g.length = length;
  const double h = 2.0 * epsilon / n_per_cell;
  Index3 n{1, 1, 1};
  for (int a = 0; a < dim; ++a) {
    if (!(length[a] > 0.0)) throw ConfigError("domain lengths must be positive");
    const double cells = length[a] / (2.0 * epsilon);
    const double rc = std::round(cells);
    if (kind == DomainKind::torus) {
      if (std::abs(cells - rc) > 1e-9 * std::max(1.0, cells) || rc < 1.0)
        throw ConfigError("torus requires L / (2 epsilon) to be a positive integer (got " + std::to_string(cells) + ")");
      g.cells_per_axis[a] = static_cast<int>(rc);
    } else {
      const int full = static_cast<int>(std::floor(cells + 1e-9));
      if (full < 1) throw ConfigError("epsilon too large: no cell of side 2 epsilon fits in the box");
      g.cells_per_axis[a] = full;
    }
    const double nn = length[a] / h;
    if (std::abs(nn - std::round(nn)) > 1e-9 * std::max(1.0, nn))
      throw ConfigError("domain length is not a multiple of the grid spacing 2 epsilon / n_per_cell");
    n[a] = static_cast<int>(std::round(nn));
  }
  g.lattice = Lattice::make(dim, n, h, {0.0, 0.0, 0.0}, kind == DomainKind::torus);

  const Lattice ref = Lattice::make(dim, {n_per_cell, n_per_cell, n_per_cell}, 2.0 / n_per_cell, {-1.0, -1.0, -1.0}, true);
  const Mask ref_fluid = reference_mask(obstacle, ref);

  const std::size_t nc = g.lattice.cell_count();
  g.fluid.assign(nc, 1);
  g.local_cell.assign(nc, 0);
  g.in_full_cell.assign(nc, 0);
  std::size_t fluid_count = 0;
  for (std::size_t c = 0; c < nc; ++c) {
    const Index3 cc = g.lattice.cell_coords(c);
    Index3 loc{0, 0, 0};
    bool full = true;
    for (int a = 0; a < dim; ++a) {
      loc[a] = cc[a] % n_per_cell;
      if (cc[a] / n_per_cell >= g.cells_per_axis[a]) full = false;
    }
    const std::size_t lc = ref.cell_index(loc);
    g.local_cell[c] = static_cast<std::int32_t>(lc);
    g.in_full_cell[c] = full ? 1 : 0;
    if (with_holes && full) g.fluid[c] = ref_fluid[lc];
    fluid_count += g.fluid[c];
  }
  g.fluid_fraction = double(fluid_count) / double(nc);

  for (int k = 0; k < (dim == 3 ? g.cells_per_axis[2] : 1); ++k)
    for (int j = 0; j < g.cells_per_axis[1]; ++j)
      for (int i = 0; i < g.cells_per_axis[0]; ++i) {
        Vec3 x{0.0, 0.0, 0.0};
        const int idx[3] = {i, j, k};
        for (int a = 0; a < dim; ++a) x[a] = epsilon * (2.0 * idx[a] + 1.0);
        g.cell_centers.push_back(x);
      }

  if (kind == DomainKind::box) {
    g.boundary_distance.resize(nc);
    for (std::size_t c = 0; c < nc; ++c)
      g.boundary_distance[c] = g.distance_to_boundary(g.lattice.cell_center(g.lattice.cell_coords(c)));
  }
  if (with_holes && !obstacle.empty() && !fluid_connected(g.lattice, g.fluid))
    throw ConfigError("perforated domain fluid region is disconnected");
  return g;
}

std::uint64_t mask_hash(const Mask& m) {
  std::uint64_t h = 1469598103934665603ull;
  for (auto v : m) {
    h ^= v;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace homlab

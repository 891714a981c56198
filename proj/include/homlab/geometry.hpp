#pragma once

#include <string>
#include <vector>

#include "homlab/lattice.hpp"
#include "homlab/staggered_mesh.hpp"

namespace homlab {

enum class ObstacleShape { none, ball, superellipse };

struct ObstacleSpec {
  ObstacleShape shape = ObstacleShape::ball;
  double radius = 0.5;                   // ball
  double exponent = 4.0;                 // superellipse: sum |x_a / s_a|^p <= 1
  Vec3 semi_axes{0.5, 0.5, 0.5};         // superellipse
};

/// Reference particle O inside the reference cell Q = (-1, 1)^d.
struct Obstacle {
  ObstacleSpec spec;
  int dim = 3;
  /// dist(O, boundary of the unit ball B_1).
  double clearance = 1.0;
  /// dist(O, boundary of Q); the cutoff width of the boundary corrector.
  double cell_distance = 1.0;

  bool empty() const { return spec.shape == ObstacleShape::none; }
  /// Closed set membership, y in cell coordinates.
  bool contains(const Vec3& y) const;
  /// |O| (exact for ball and superellipse).
  double volume() const;
  /// 1 - |O| / |Q|.
  double porosity() const;
};

Obstacle make_obstacle(const ObstacleSpec& spec, int dim);

/// Staircase discretisation of Q \ O: n cells per edge, spacing 2/n, periodic.
struct CellGrid {
  Obstacle obstacle;
  int dim = 3;
  int n = 0;
  Lattice lattice;
  Mask fluid;
  double theta_h = 1.0;

  StaggeredMesh mesh() const { return StaggeredMesh(lattice, fluid); }
};

CellGrid build_reference_cell(const Obstacle& obstacle, int dim, int n);

/// True when the fluid cells of `fluid` form one face-connected component.
bool fluid_connected(const Lattice& lat, const Mask& fluid);

enum class DomainKind { torus, box };

DomainKind parse_domain_kind(const std::string& s);
std::string to_string(DomainKind k);

/// Omega minus the epsilon-periodic holes. Omega = [0, L_0] x ... with its lower
/// corner at the origin; the mesh of cells of side 2 epsilon is anchored there.
struct PerforatedGrid {
  DomainKind kind = DomainKind::torus;
  double epsilon = 0.25;
  int n_per_cell = 16;
  Vec3 length{1.0, 1.0, 1.0};
  Lattice lattice;
  Mask fluid;
  /// Number of cells Q_i entirely inside Omega, per axis (these carry holes).
  Index3 cells_per_axis{1, 1, 1};
  std::vector<Vec3> cell_centers;
  /// Reference-cell index of each global lattice cell (x / epsilon lookup).
  std::vector<std::int32_t> local_cell;
  /// 1 where the global cell lies in a hole-carrying cell Q_i.
  Mask in_full_cell;
  /// dist(cell centre, boundary of Omega); empty on the torus.
  std::vector<double> boundary_distance;
  double fluid_fraction = 1.0;

  int dim() const { return lattice.dim; }
  std::size_t hole_count() const { return cell_centers.size(); }
  StaggeredMesh mesh() const { return StaggeredMesh(lattice, fluid); }
  /// Reference-cell face index (flattened per reference lattice) of global face gi on axis a.
  std::size_t local_face(const Lattice& ref, int axis, const Index3& f) const;
  /// Exact distance of x to the boundary of the box Omega (infinity on the torus).
  double distance_to_boundary(const Vec3& x) const;
};

PerforatedGrid build_perforated_grid(DomainKind kind, Vec3 length, double epsilon, const Obstacle& obstacle,
                                     int n_per_cell, bool with_holes = true);

/// FNV-1a hash of a mask, used in run manifests.
std::uint64_t mask_hash(const Mask& m);

}  // namespace homlab

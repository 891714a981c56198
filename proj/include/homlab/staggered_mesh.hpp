#pragma once

#include <span>

#include "homlab/lattice.hpp"

namespace homlab {

/// MAC (staggered) discretisation of a masked region of a Lattice.
///
/// Scalars live at cell centres, the a-th velocity component on a-faces. A face
/// carries an unknown ("open") only when both adjacent cells are fluid and it is
/// not a wall face of a bounded lattice; every other face holds the value 0, which
/// realises no-slip on obstacles by elimination. Tangential components next to an
/// outer wall see a mirrored ghost value so the wall sits exactly on the cell boundary.
class StaggeredMesh {
 public:
  static constexpr std::int32_t kWall = -1;

  StaggeredMesh(const Lattice& lat, Mask fluid);

  const Lattice& lattice() const { return lat_; }
  int dim() const { return lat_.dim; }
  const Mask& fluid() const { return fluid_; }
  const Mask& open() const { return open_; }
  const std::vector<std::int32_t>& open_faces() const { return open_list_; }
  std::size_t face_dofs() const { return open_.size(); }
  std::size_t cell_count() const { return fluid_.size(); }
  std::size_t fluid_cell_count() const { return fluid_count_; }
  const std::array<std::size_t, 4>& face_offsets() const { return offsets_; }

  std::size_t face(int axis, const Index3& f) const { return offsets_[axis] + lat_.face_index(axis, f[0], f[1], f[2]); }
  int face_axis(std::size_t gi) const;
  /// Cells below/above face gi along its axis; -1 where the face is a wall.
  std::int32_t face_lower_cell(std::size_t gi) const { return face_cells_[2 * gi]; }
  std::int32_t face_upper_cell(std::size_t gi) const { return face_cells_[2 * gi + 1]; }
  /// Lower / upper face of cell c along axis a.
  std::int32_t cell_face(std::size_t c, int axis, int side) const { return cell_faces_[c * 6 + 2 * axis + side]; }
  /// Neighbours of the k-th open face (2*dim entries: -b, +b for each axis b); kWall marks a mirrored ghost.
  std::span<const std::int32_t> neighbours(std::size_t k) const {
    return {nbr_.data() + k * 2 * lat_.dim, static_cast<std::size_t>(2 * lat_.dim)};
  }
  Vec3 face_position(std::size_t gi) const;

  FaceField zero_faces() const { return FaceField(face_dofs(), 0.0); }
  CellField zero_cells() const { return CellField(cell_count(), 0.0); }

  /// (div u)_c on every cell (closed faces contribute their stored value).
  void divergence(std::span<const double> u, std::span<double> div) const;
  /// (grad q)_f on open faces; closed faces are set to 0.
  void gradient(std::span<const double> q, std::span<double> g) const;
  /// Positive masked vector Laplacian (-Delta_h u) on open faces; closed faces are set to 0.
  void laplacian(std::span<const double> u, std::span<double> out) const;
  /// Discrete Dirichlet form sum grad u : grad v over the domain (integrated, i.e. times h^d).
  double dirichlet_form(std::span<const double> u, std::span<const double> v) const;
  /// max |difference quotient| over all adjacent face pairs touching an open face.
  double max_gradient(std::span<const double> u) const;
  /// sum over open faces of u v h^d.
  double face_inner(std::span<const double> u, std::span<const double> v) const;
  /// sum over fluid cells of f g h^d.
  double cell_inner(std::span<const double> f, std::span<const double> g) const;

 private:
  Lattice lat_;
  Mask fluid_;
  Mask open_;
  std::size_t fluid_count_ = 0;
  std::array<std::size_t, 4> offsets_{};
  std::vector<std::int32_t> open_list_;
  std::vector<std::int32_t> nbr_;
  std::vector<std::int32_t> face_cells_;
  std::vector<std::int32_t> cell_faces_;
};

}  // namespace homlab

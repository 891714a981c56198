#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace homlab {

using Vec3 = std::array<double, 3>;
using Index3 = std::array<int, 3>;

/// Uniform Cartesian cell lattice in 2 or 3 dimensions, periodic or bounded.
///
/// Storage is x-fastest. Unused axes have extent 1. For axis a, faces are the
/// lower faces of the cells: face (a, i, j, k) sits at x_a = origin_a + i_a h.
/// On a bounded lattice every axis carries one extra face layer (the upper wall).
struct Lattice {
  int dim = 2;
  Index3 n{1, 1, 1};
  double h = 1.0;
  Vec3 origin{0.0, 0.0, 0.0};
  bool periodic = true;

  static Lattice make(int dim, Index3 n, double h, Vec3 origin, bool periodic);

  std::size_t cell_count() const { return std::size_t(n[0]) * n[1] * n[2]; }
  std::size_t cell_index(int i, int j, int k) const { return (std::size_t(k) * n[1] + j) * n[0] + i; }
  std::size_t cell_index(const Index3& c) const { return cell_index(c[0], c[1], c[2]); }
  Index3 cell_coords(std::size_t idx) const;

  Index3 face_shape(int axis) const {
    Index3 s = n;
    if (!periodic) s[axis] += 1;
    return s;
  }
  std::size_t face_count(int axis) const {
    if (axis >= dim) return 0;
    const Index3 s = face_shape(axis);
    return std::size_t(s[0]) * s[1] * s[2];
  }
  std::size_t face_index(int axis, int i, int j, int k) const {
    const Index3 s = face_shape(axis);
    return (std::size_t(k) * s[1] + j) * s[0] + i;
  }
  Index3 face_coords(int axis, std::size_t idx) const;

  /// Offsets of each axis block inside a flattened face vector; offset[dim] is the total.
  std::array<std::size_t, 4> face_offsets() const;
  std::size_t face_dofs() const { return face_offsets()[dim]; }

  Vec3 cell_center(const Index3& c) const;
  Vec3 face_center(int axis, const Index3& f) const;
  /// Lower corner of cell c (node of the 2D lattice).
  Vec3 node(const Index3& c) const;

  double cell_volume() const;
  Vec3 extent() const;

  /// Wraps an index on a periodic axis; returns -1 when it leaves a bounded axis.
  int wrap(int axis, int i) const {
    if (periodic) {
      const int m = n[axis];
      i %= m;
      return i < 0 ? i + m : i;
    }
    return (i < 0 || i >= n[axis]) ? -1 : i;
  }
};

using CellField = std::vector<double>;
/// Face-centred vector field, all components flattened (see Lattice::face_offsets).
using FaceField = std::vector<double>;
using Mask = std::vector<std::uint8_t>;

}  // namespace homlab

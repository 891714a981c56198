#include "homlab/lattice.hpp"

#include "homlab/errors.hpp"

namespace homlab {

Lattice Lattice::make(int dim, Index3 n, double h, Vec3 origin, bool periodic) {
  if (dim != 2 && dim != 3) throw ConfigError("dimension must be 2 or 3");
  Lattice lat;
  lat.dim = dim;
  lat.n = n;
  if (dim == 2) lat.n[2] = 1;
  for (int a = 0; a < dim; ++a)
    if (lat.n[a] < 1) throw ConfigError("lattice extent must be positive");
  if (!(h > 0.0)) throw ConfigError("lattice spacing must be positive");
  lat.h = h;
  lat.origin = origin;
  lat.periodic = periodic;
  return lat;
}

Index3 Lattice::cell_coords(std::size_t idx) const {
  Index3 c{0, 0, 0};
  c[0] = static_cast<int>(idx % n[0]);
  idx /= n[0];
  c[1] = static_cast<int>(idx % n[1]);
  c[2] = static_cast<int>(idx / n[1]);
  return c;
}

Index3 Lattice::face_coords(int axis, std::size_t idx) const {
  const Index3 s = face_shape(axis);
  Index3 c{0, 0, 0};
  c[0] = static_cast<int>(idx % s[0]);
  idx /= s[0];
  c[1] = static_cast<int>(idx % s[1]);
  c[2] = static_cast<int>(idx / s[1]);
  return c;
}

std::array<std::size_t, 4> Lattice::face_offsets() const {
  std::array<std::size_t, 4> off{0, 0, 0, 0};
  for (int a = 0; a < 3; ++a) off[a + 1] = off[a] + face_count(a);
  return off;
}

Vec3 Lattice::cell_center(const Index3& c) const {
  Vec3 x{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) x[a] = origin[a] + (c[a] + 0.5) * h;
  return x;
}

Vec3 Lattice::face_center(int axis, const Index3& f) const {
  Vec3 x = cell_center(f);
  x[axis] -= 0.5 * h;
  return x;
}

Vec3 Lattice::node(const Index3& c) const {
  Vec3 x{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) x[a] = origin[a] + c[a] * h;
  return x;
}

double Lattice::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim; ++a) v *= h;
  return v;
}

Vec3 Lattice::extent() const {
  Vec3 e{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) e[a] = n[a] * h;
  return e;
}

}  // namespace homlab

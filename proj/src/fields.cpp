#include "homlab/fields.hpp"

#include <algorithm>
#include <cmath>

namespace homlab {

namespace {

// Data at positions origin + (i + shift_a) h, i = 0 .. shape_a - 1.
double interpolate(const Lattice& lat, std::span<const double> data, const Index3& shape, const Vec3& shift,
                   const Vec3& x) {
  int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
  double w[3] = {0.0, 0.0, 0.0};
  for (int a = 0; a < lat.dim; ++a) {
    double s = (x[a] - lat.origin[a]) / lat.h - shift[a];
    if (lat.periodic) {
      const double fl = std::floor(s);
      w[a] = s - fl;
      const int i = static_cast<int>(fl);
      lo[a] = ((i % shape[a]) + shape[a]) % shape[a];
      hi[a] = (lo[a] + 1) % shape[a];
    } else {
      s = std::clamp(s, 0.0, double(shape[a] - 1));
      const int i = std::min(static_cast<int>(std::floor(s)), shape[a] - 2 < 0 ? 0 : shape[a] - 2);
      w[a] = shape[a] > 1 ? s - i : 0.0;
      lo[a] = i;
      hi[a] = std::min(i + 1, shape[a] - 1);
    }
  }
  double sum = 0.0;
  const int nk = lat.dim == 3 ? 2 : 1;
  for (int ck = 0; ck < nk; ++ck)
    for (int cj = 0; cj < 2; ++cj)
      for (int ci = 0; ci < 2; ++ci) {
        const int i = ci ? hi[0] : lo[0], j = cj ? hi[1] : lo[1], k = ck ? hi[2] : lo[2];
        double wt = (ci ? w[0] : 1.0 - w[0]) * (cj ? w[1] : 1.0 - w[1]);
        if (lat.dim == 3) wt *= ck ? w[2] : 1.0 - w[2];
        if (wt == 0.0) continue;
        sum += wt * data[(std::size_t(k) * shape[1] + j) * shape[0] + i];
      }
  return sum;
}

}  // namespace

double interpolate_cells(const Lattice& lat, std::span<const double> field, const Vec3& x) {
  return interpolate(lat, field, lat.n, {0.5, 0.5, 0.5}, x);
}

double interpolate_faces(const Lattice& lat, std::span<const double> faces, int axis, const Vec3& x) {
  const auto off = lat.face_offsets();
  Vec3 shift{0.5, 0.5, 0.5};
  shift[axis] = 0.0;
  return interpolate(lat, faces.subspan(off[axis], off[axis + 1] - off[axis]), lat.face_shape(axis), shift, x);
}

CellField sample_cells(const Lattice& lat, const ScalarFn& g) {
  CellField out(lat.cell_count());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = g(lat.cell_center(lat.cell_coords(c)));
  return out;
}

FaceField sample_force(const Lattice& lat, const ForceFn& f, double t) {
  const auto off = lat.face_offsets();
  FaceField out(off[lat.dim], 0.0);
  if (!f) return out;
  for (int a = 0; a < lat.dim; ++a)
    for (std::size_t i = 0; i < off[a + 1] - off[a]; ++i)
      out[off[a] + i] = f(lat.face_center(a, lat.face_coords(a, i)), t)[a];
  return out;
}

}  // namespace homlab

#pragma once

#include <functional>
#include <span>

#include "homlab/lattice.hpp"

namespace homlab {

/// Body force f(x, t).
using ForceFn = std::function<Vec3(const Vec3& x, double t)>;
/// Scalar initial datum g(x).
using ScalarFn = std::function<double(const Vec3& x)>;

/// Multilinear interpolation of a cell-centred field at x. Periodic lattices wrap;
/// bounded lattices clamp to the outermost cell centres.
double interpolate_cells(const Lattice& lat, std::span<const double> field, const Vec3& x);
/// Same for component `axis` of a face field (the block at face_offsets()[axis]).
double interpolate_faces(const Lattice& lat, std::span<const double> faces, int axis, const Vec3& x);

CellField sample_cells(const Lattice& lat, const ScalarFn& g);
/// f_a evaluated at the a-faces.
FaceField sample_force(const Lattice& lat, const ForceFn& f, double t);

}  // namespace homlab

#include "homlab/staggered_mesh.hpp"

#include <cmath>

#include "homlab/errors.hpp"

namespace homlab {

StaggeredMesh::StaggeredMesh(const Lattice& lat, Mask fluid) : lat_(lat), fluid_(std::move(fluid)) {
  if (fluid_.size() != lat_.cell_count()) throw ConfigError("fluid mask does not match lattice");
  const int d = lat_.dim;
  offsets_ = lat_.face_offsets();
  const std::size_t nf = offsets_[d];
  for (auto v : fluid_) fluid_count_ += v ? 1 : 0;

  face_cells_.assign(2 * nf, -1);
  open_.assign(nf, 0);
  for (int a = 0; a < d; ++a) {
    const Index3 s = lat_.face_shape(a);
    for (int k = 0; k < s[2]; ++k)
      for (int j = 0; j < s[1]; ++j)
        for (int i = 0; i < s[0]; ++i) {
          const Index3 f{i, j, k};
          const std::size_t gi = face(a, f);
          Index3 lo = f;
          lo[a] = lat_.wrap(a, f[a] - 1);
          Index3 hi = f;
          hi[a] = lat_.wrap(a, f[a]);
          const std::int32_t cl = lo[a] < 0 ? -1 : static_cast<std::int32_t>(lat_.cell_index(lo));
          const std::int32_t ch = hi[a] < 0 ? -1 : static_cast<std::int32_t>(lat_.cell_index(hi));
          face_cells_[2 * gi] = cl;
          face_cells_[2 * gi + 1] = ch;
          if (cl >= 0 && ch >= 0 && fluid_[cl] && fluid_[ch]) open_[gi] = 1;
        }
  }

  cell_faces_.assign(6 * lat_.cell_count(), -1);
  for (std::size_t c = 0; c < lat_.cell_count(); ++c) {
    const Index3 cc = lat_.cell_coords(c);
    for (int a = 0; a < d; ++a) {
      Index3 up = cc;
      up[a] = lat_.periodic ? (cc[a] + 1) % lat_.n[a] : cc[a] + 1;
      cell_faces_[6 * c + 2 * a] = static_cast<std::int32_t>(face(a, cc));
      cell_faces_[6 * c + 2 * a + 1] = static_cast<std::int32_t>(face(a, up));
    }
  }

  for (std::size_t gi = 0; gi < nf; ++gi)
    if (open_[gi]) open_list_.push_back(static_cast<std::int32_t>(gi));

  nbr_.assign(open_list_.size() * 2 * d, kWall);
  for (std::size_t k = 0; k < open_list_.size(); ++k) {
    const std::size_t gi = open_list_[k];
    const int a = face_axis(gi);
    const Index3 s = lat_.face_shape(a);
    const Index3 f = lat_.face_coords(a, gi - offsets_[a]);
    for (int b = 0; b < d; ++b)
      for (int side = 0; side < 2; ++side) {
        Index3 g = f;
        g[b] += side == 0 ? -1 : 1;
        std::int32_t id = kWall;
        if (lat_.periodic) {
          g[b] = (g[b] % s[b] + s[b]) % s[b];
          id = static_cast<std::int32_t>(face(a, g));
        } else if (g[b] >= 0 && g[b] < s[b]) {
          id = static_cast<std::int32_t>(face(a, g));
        }
        nbr_[k * 2 * d + 2 * b + side] = id;
      }
  }
}

int StaggeredMesh::face_axis(std::size_t gi) const {
  for (int a = 0; a < lat_.dim; ++a)
    if (gi < offsets_[a + 1]) return a;
  throw DomainError("face index out of range");
}

Vec3 StaggeredMesh::face_position(std::size_t gi) const {
  const int a = face_axis(gi);
  return lat_.face_center(a, lat_.face_coords(a, gi - offsets_[a]));
}

void StaggeredMesh::divergence(std::span<const double> u, std::span<double> div) const {
  const int d = lat_.dim;
  const double inv_h = 1.0 / lat_.h;
  for (std::size_t c = 0; c < fluid_.size(); ++c) {
    const std::int32_t* cf = cell_faces_.data() + 6 * c;
    double s = 0.0;
    for (int a = 0; a < d; ++a) s += u[cf[2 * a + 1]] - u[cf[2 * a]];
    div[c] = s * inv_h;
  }
}

void StaggeredMesh::gradient(std::span<const double> q, std::span<double> g) const {
  const double inv_h = 1.0 / lat_.h;
  std::fill(g.begin(), g.end(), 0.0);
  for (const std::int32_t gi : open_list_) g[gi] = (q[face_cells_[2 * gi + 1]] - q[face_cells_[2 * gi]]) * inv_h;
}

void StaggeredMesh::laplacian(std::span<const double> u, std::span<double> out) const {
  const int nn = 2 * lat_.dim;
  const double inv_h2 = 1.0 / (lat_.h * lat_.h);
  std::fill(out.begin(), out.end(), 0.0);
  const std::int32_t* nb = nbr_.data();
  for (std::size_t k = 0; k < open_list_.size(); ++k, nb += nn) {
    const std::int32_t gi = open_list_[k];
    const double uf = u[gi];
    double s = 0.0;
    for (int m = 0; m < nn; ++m) s += nb[m] == kWall ? 2.0 * uf : uf - u[nb[m]];
    out[gi] = s * inv_h2;
  }
}

double StaggeredMesh::dirichlet_form(std::span<const double> u, std::span<const double> v) const {
  const int nn = 2 * lat_.dim;
  double sum = 0.0;
  const std::int32_t* nb = nbr_.data();
  for (std::size_t k = 0; k < open_list_.size(); ++k, nb += nn) {
    const std::int32_t gi = open_list_[k];
    for (int m = 0; m < nn; ++m) {
      if (nb[m] == kWall) {
        sum += 2.0 * u[gi] * v[gi];
      } else if (open_[nb[m]]) {
        sum += 0.5 * (u[gi] - u[nb[m]]) * (v[gi] - v[nb[m]]);
      } else {
        sum += (u[gi] - u[nb[m]]) * (v[gi] - v[nb[m]]);
      }
    }
  }
  return sum * std::pow(lat_.h, lat_.dim - 2);
}

double StaggeredMesh::max_gradient(std::span<const double> u) const {
  const int nn = 2 * lat_.dim;
  double m = 0.0;
  const std::int32_t* nb = nbr_.data();
  for (std::size_t k = 0; k < open_list_.size(); ++k, nb += nn) {
    const std::int32_t gi = open_list_[k];
    for (int j = 0; j < nn; ++j) {
      const double diff = nb[j] == kWall ? 2.0 * u[gi] : u[gi] - u[nb[j]];
      m = std::max(m, std::abs(diff));
    }
  }
  return m / lat_.h;
}

double StaggeredMesh::face_inner(std::span<const double> u, std::span<const double> v) const {
  double s = 0.0;
  for (const std::int32_t gi : open_list_) s += u[gi] * v[gi];
  return s * lat_.cell_volume();
}

double StaggeredMesh::cell_inner(std::span<const double> f, std::span<const double> g) const {
  double s = 0.0;
  for (std::size_t c = 0; c < fluid_.size(); ++c)
    if (fluid_[c]) s += f[c] * g[c];
  return s * lat_.cell_volume();
}

}  // namespace homlab

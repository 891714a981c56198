#include "homlab/correctors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "homlab/errors.hpp"

namespace homlab {

double cutoff(double t, double d) {
  const double s = std::clamp(t / d, 0.0, 1.0);
  return s * s * (3.0 - 2.0 * s);
}

namespace {

void check_compatible(const CellSolution& cell, const PerforatedGrid& grid) {
  if (cell.W.empty()) throw DomainError("correctors need a solved cell problem");
  if (grid.n_per_cell != cell.cell.n) throw ConfigError("grid resolution per cell must equal the cell-problem resolution");
  if (grid.dim() != cell.dim()) throw ConfigError("grid and cell problem dimensions differ");
}

// K^{-1} u(x) at every face position, d values per face.
std::vector<double> kinv_u_at_faces(const Eigen::MatrixXd& Kinv, const LimitTrajectory& limit, const Lattice& lat,
                                    double t, FaceField& u_normal) {
  const int d = lat.dim;
  const auto off = lat.face_offsets();
  std::vector<double> out(off[d] * d, 0.0);
  u_normal.assign(off[d], 0.0);
  for (int a = 0; a < d; ++a)
    for (std::size_t i = 0; i < off[a + 1] - off[a]; ++i) {
      const Vec3 u = limit.u(lat.face_center(a, lat.face_coords(a, i)), t);
      const std::size_t gi = off[a] + i;
      u_normal[gi] = u[a];
      for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += Kinv(j, k) * u[k];
        out[gi * d + j] = s;
      }
    }
  return out;
}

void boundary_corrector_impl(const CellSolution& cell, const PerforatedGrid& grid, const std::vector<double>& ku,
                             const FaceField& u_normal, CorrectorPair& pair) {
  const Lattice& lat = grid.lattice;
  const Lattice& ref = cell.cell.lattice;
  const int d = lat.dim;
  const int n = grid.n_per_cell;
  const std::size_t nref = ref.cell_count();
  const double eps = grid.epsilon;
  const double dcut = cell.cell.obstacle.cell_distance;
  const double ih_ref = 1.0 / ref.h;
  const auto off = lat.face_offsets();
  const StaggeredMesh mesh = grid.mesh();
  pair.eta.assign(off[d], 1.0);
  pair.w_tilde = pair.w;
  pair.psi.assign(off[d], 0.0);
  pair.zeroed_faces = 0;

  auto eta_at = [&](const Vec3& x) { return cutoff(grid.distance_to_boundary(x) / eps, dcut); };
  auto local = [&](Index3 I) {
    for (int a = 0; a < d; ++a) I[a] = ((I[a] % n) + n) % n;
    return ref.cell_index(I);
  };
  // eta * Phi_j at node I (2D) or at edge `comp` of node I (3D).
  auto eta_phi = [&](int j, int comp, Index3 I, double& eta_out) {
    Vec3 x = lat.node(I);
    if (d == 3) x[comp] += 0.5 * lat.h;
    eta_out = eta_at(x);
    const std::size_t li = local(I);
    return eta_out * (d == 2 ? cell.Phi[j][li] : cell.Phi[j][comp * nref + li]);
  };

  for (int a = 0; a < d; ++a)
    for (std::size_t i = 0; i < off[a + 1] - off[a]; ++i) {
      const std::size_t gi = off[a] + i;
      const Index3 I = lat.face_coords(a, i);
      const double eta_f = eta_at(lat.face_center(a, I));
      pair.eta[gi] = eta_f;
      bool all_one = eta_f == 1.0;
      double val = eta_f * u_normal[gi];
      for (int j = 0; j < d; ++j) {
        double curl, e1, e2, e3 = 1.0, e4 = 1.0;
        if (d == 2) {
          const int other = 1 - a;
          Index3 J = I;
          J[other] += 1;
          const double hi = eta_phi(j, 0, J, e1), lo = eta_phi(j, 0, I, e2);
          curl = (a == 0 ? 1.0 : -1.0) * (hi - lo) * ih_ref;
        } else {
          const int b = (a + 1) % 3, c = (a + 2) % 3;
          Index3 Ib = I, Ic = I;
          Ib[b] += 1;
          Ic[c] += 1;
          curl = (eta_phi(j, c, Ib, e1) - eta_phi(j, c, I, e2) - eta_phi(j, b, Ic, e3) + eta_phi(j, b, I, e4)) * ih_ref;
        }
        all_one = all_one && e1 == 1.0 && e2 == 1.0 && e3 == 1.0 && e4 == 1.0;
        val += curl * ku[gi * d + j];
      }
      if (!mesh.open()[gi]) {
        const bool wall = mesh.face_lower_cell(gi) < 0 || mesh.face_upper_cell(gi) < 0;
        if (!wall && std::abs(val) > 0.0 && !all_one) ++pair.zeroed_faces;
        val = 0.0;
      } else if (all_one) {
        val = pair.w[gi];
      }
      pair.w_tilde[gi] = val;
      pair.psi[gi] = val - pair.w[gi];
    }
}

}  // namespace

CorrectorPair build_correctors(const CellSolution& cell, const LimitTrajectory& limit, const PerforatedGrid& grid,
                               const PressureLaw& law, double t) {
  check_compatible(cell, grid);
  const Lattice& lat = grid.lattice;
  const Lattice& ref = cell.cell.lattice;
  const int d = lat.dim;
  const double eps = grid.epsilon;
  const Eigen::MatrixXd Kinv = cell.K.inverse();
  const auto off = lat.face_offsets();
  const auto roff = ref.face_offsets();

  CorrectorPair pair;
  pair.t = t;
  pair.epsilon = eps;
  const std::vector<double> ku = kinv_u_at_faces(Kinv, limit, lat, t, pair.u);

  pair.w.assign(off[d], 0.0);
  for (int a = 0; a < d; ++a)
    for (std::size_t i = 0; i < off[a + 1] - off[a]; ++i) {
      const std::size_t gi = off[a] + i;
      const std::size_t lf = roff[a] + grid.local_face(ref, a, lat.face_coords(a, i));
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += cell.W[j][lf] * ku[gi * d + j];
      pair.w[gi] = s;
    }

  const std::size_t nc = lat.cell_count();
  pair.rho.resize(nc);
  pair.r.resize(nc);
  pair.r_min = std::numeric_limits<double>::infinity();
  pair.r_max = 0.0;
  double worst_arg = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < nc; ++c) {
    const Vec3 x = lat.cell_center(lat.cell_coords(c));
    const double rho = limit.rho(x, t);
    pair.rho[c] = rho;
    const Vec3 u = limit.u(x, t);
    const std::size_t lc = grid.local_cell[c];
    double corr = 0.0;
    for (int i = 0; i < d; ++i) {
      double kui = 0.0;
      for (int k = 0; k < d; ++k) kui += Kinv(i, k) * u[k];
      corr += cell.q[i][lc] * kui;
    }
    corr *= eps;
    if (!grid.fluid[c] || corr == 0.0) {
      pair.r[c] = rho;
    } else {
      const double arg = pressure_eval(law, rho, 0) + corr;
      worst_arg = std::min(worst_arg, arg);
      if (!(arg > 0.0)) continue;
      pair.r[c] = pressure_inverse(law, arg);
    }
    if (grid.fluid[c]) {
      pair.r_min = std::min(pair.r_min, pair.r[c]);
      pair.r_max = std::max(pair.r_max, pair.r[c]);
    }
  }
  if (!(worst_arg > 0.0))
    throw DomainError("epsilon too large: p(rho) + eps^2 q^eps . u reaches " + std::to_string(worst_arg));

  if (grid.kind == DomainKind::box) {
    if (cell.Phi.empty()) throw ConfigError("box mode needs the vector potential of the cell solution");
    boundary_corrector_impl(cell, grid, ku, pair.u, pair);
  } else {
    pair.eta.assign(off[d], 1.0);
    pair.w_tilde = pair.w;
    pair.psi.assign(off[d], 0.0);
  }
  return pair;
}

void build_boundary_corrector(const CellSolution& cell, const LimitTrajectory& limit, const PerforatedGrid& grid,
                              CorrectorPair& pair) {
  check_compatible(cell, grid);
  if (grid.kind != DomainKind::box) {
    pair.psi.assign(pair.w.size(), 0.0);
    pair.w_tilde = pair.w;
    pair.eta.assign(pair.w.size(), 1.0);
    return;
  }
  if (cell.Phi.empty()) throw ConfigError("boundary corrector needs the vector potential of the cell solution");
  FaceField u_normal;
  const std::vector<double> ku = kinv_u_at_faces(cell.K.inverse(), limit, grid.lattice, pair.t, u_normal);
  boundary_corrector_impl(cell, grid, ku, u_normal, pair);
}

namespace {

// Gaussian bump test function g(x) = exp(-|x - centre|^2 / (2 width^2)) for entry (row, col).
struct TestField {
  Vec3 centre;
  double width;
  int row, col;
};

}  // namespace

CorrectorBoundsReport verify_corrector_bounds(const CellSolution& cell, const LimitTrajectory& limit,
                                              const PressureLaw& law, DomainKind kind, Vec3 length,
                                              const std::vector<double>& eps_sweep, double t, double ratio_window) {
  if (eps_sweep.size() < 3) throw ConfigError("corrector bounds need at least three epsilon values");
  const int d = cell.dim();
  const auto& states = limit.states();
  const double dt = states.size() >= 2 ? states[1].t - states[0].t : 0.0;
  const Eigen::MatrixXd Kinv = cell.K.inverse();

  // Bumps rather than Fourier modes: a pure mode sums to zero over the periodic array of
  // cells for every shift, which would make the duality defect vanish identically.
  std::vector<TestField> dict;
  for (const Vec3& c : {Vec3{0.3, 0.4, 0.5}, Vec3{0.55, 0.7, 0.35}})
    for (double width : {0.1, 0.2})
      for (int a = 0; a < d; ++a)
        for (int j = 0; j < d; ++j) dict.push_back({{c[0] * length[0], c[1] * length[1], c[2] * length[2]}, width, a, j});

  CorrectorBoundsReport rep;
  for (double eps : eps_sweep) {
    const PerforatedGrid grid = build_perforated_grid(kind, length, eps, cell.cell.obstacle, cell.cell.n);
    const CorrectorPair p0 = build_correctors(cell, limit, grid, law, t);
    CorrectorBoundsRow row;
    row.epsilon = eps;
    row.r_min = p0.r_min;
    row.r_max = p0.r_max;
    const StaggeredMesh mesh = grid.mesh();
    const Lattice& lat = grid.lattice;
    for (std::size_t c = 0; c < lat.cell_count(); ++c)
      if (grid.fluid[c]) row.r_minus_rho = std::max(row.r_minus_rho, std::abs(p0.r[c] - p0.rho[c]));
    row.r_minus_rho /= eps;
    if (dt > 0.0) {
      const CorrectorPair p1 = build_correctors(cell, limit, grid, law, t + dt);
      for (std::size_t c = 0; c < lat.cell_count(); ++c)
        if (grid.fluid[c])
          row.r_minus_rho_t = std::max(row.r_minus_rho_t, std::abs((p1.r[c] - p1.rho[c]) - (p0.r[c] - p0.rho[c])) / dt);
      row.r_minus_rho_t /= eps;
    }
    row.eps_grad_w = eps * mesh.max_gradient(p0.w);
    CellField div(lat.cell_count());
    mesh.divergence(p0.w, div);
    for (std::size_t c = 0; c < div.size(); ++c)
      if (grid.fluid[c]) row.div_w = std::max(row.div_w, std::abs(div[c]));

    // Duality defect with W^eps = W(x/eps) K^{-1} averaged to cell centres.
    const StaggeredMesh rmesh = cell.cell.mesh();
    const double vol = lat.cell_volume();
    const double theta = cell.theta();
    for (const TestField& tf : dict) {
      double integral = 0.0, norm = 0.0;
      for (std::size_t c = 0; c < lat.cell_count(); ++c) {
        const Vec3 x = lat.cell_center(lat.cell_coords(c));
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
          double dx = x[a] - tf.centre[a];
          if (kind == DomainKind::torus) dx -= length[a] * std::round(dx / length[a]);
          r2 += dx * dx;
        }
        const double g = std::exp(-0.5 * r2 / (tf.width * tf.width));
        norm += g * (1.0 + std::sqrt(r2) / (tf.width * tf.width)) * vol;
        if (!grid.fluid[c]) continue;
        const std::size_t lc = grid.local_cell[c];
        double wk = 0.0;
        for (int m = 0; m < d; ++m) {
          const double wm = 0.5 * (cell.W[m][rmesh.cell_face(lc, tf.row, 0)] + cell.W[m][rmesh.cell_face(lc, tf.row, 1)]);
          wk += wm * Kinv(m, tf.col);
        }
        const double ident = tf.row == tf.col ? 1.0 / theta : 0.0;
        integral += (ident - wk) * g * vol;
      }
      row.duality = std::max(row.duality, std::abs(integral) / (eps * norm));
    }
    rep.rows.push_back(row);
  }
  rep.worst_ratio = 1.0;
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    for (double CorrectorBoundsRow::*q : {&CorrectorBoundsRow::r_minus_rho, &CorrectorBoundsRow::eps_grad_w}) {
      const double a = rep.rows[i - 1].*q, b = rep.rows[i].*q;
      const double ratio = (a > 0.0 && b > 0.0) ? std::max(a / b, b / a) : (a == b ? 1.0 : std::numeric_limits<double>::infinity());
      rep.worst_ratio = std::max(rep.worst_ratio, ratio);
    }
  }
  rep.bounded = rep.worst_ratio <= ratio_window;
  return rep;
}

}  // namespace homlab

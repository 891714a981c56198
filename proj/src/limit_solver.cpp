#include "homlab/limit_solver.hpp"

#include <algorithm>
#include <cmath>

#include "homlab/errors.hpp"

namespace homlab {

namespace {

void check_problem(const LimitProblem& pb, const CellField& rho) {
  const int d = pb.lattice.dim;
  if (pb.K.rows() != d || pb.K.cols() != d) throw ConfigError("permeability tensor has wrong size");
  if (std::abs(pb.K.determinant()) < 1e-300) throw DomainError("permeability tensor is singular");
  if (!(pb.theta > 0.0 && pb.theta <= 1.0)) throw ConfigError("porosity must lie in (0, 1]");
  if (rho.size() != pb.lattice.cell_count()) throw DomainError("density field size mismatch");
}

// Neighbour cell index along axis a (side -1/+1); -1 beyond a wall.
long neighbour(const Lattice& lat, Index3 c, int a, int side) {
  c[a] = lat.wrap(a, c[a] + side);
  return c[a] < 0 ? -1 : static_cast<long>(lat.cell_index(c));
}

struct FaceFluxes {
  FaceField velocity;  // K (rho_f f - grad p)
  FaceField flux;      // rho u with upwinded advective part
};

FaceFluxes assemble(const LimitProblem& pb, const CellField& rho, double t) {
  const Lattice& lat = pb.lattice;
  const int d = lat.dim;
  const std::size_t nc = lat.cell_count();
  const double ih = 1.0 / lat.h;
  std::vector<double> p(nc);
  for (std::size_t c = 0; c < nc; ++c) p[c] = pressure_eval(pb.law, rho[c], 0);

  // Cell-centred centred gradients of p (one-sided at walls), for the off-diagonal K terms.
  std::vector<double> gp(3 * nc, 0.0);
  bool offdiag = false;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      if (a != b && pb.K(a, b) != 0.0) offdiag = true;
  if (offdiag)
    for (std::size_t c = 0; c < nc; ++c) {
      const Index3 cc = lat.cell_coords(c);
      for (int b = 0; b < d; ++b) {
        const long lo = neighbour(lat, cc, b, -1), hi = neighbour(lat, cc, b, +1);
        const double plo = lo < 0 ? p[c] : p[lo], phi = hi < 0 ? p[c] : p[hi];
        const double span = (lo < 0 || hi < 0) ? lat.h : 2.0 * lat.h;
        gp[b * nc + c] = (phi - plo) / span;
      }
    }

  const auto off = lat.face_offsets();
  FaceFluxes out{FaceField(off[d], 0.0), FaceField(off[d], 0.0)};
  for (int a = 0; a < d; ++a) {
    for (std::size_t i = 0; i < off[a + 1] - off[a]; ++i) {
      const Index3 f = lat.face_coords(a, i);
      Index3 cl = f, cr = f;
      cl[a] = lat.wrap(a, f[a] - 1);
      cr[a] = lat.wrap(a, f[a]);
      if (cl[a] < 0 || cr[a] < 0) continue;  // wall: zero normal flux
      const std::size_t L = lat.cell_index(cl), R = lat.cell_index(cr);
      const double rho_f = 0.5 * (rho[L] + rho[R]);
      Vec3 fx{0.0, 0.0, 0.0};
      if (pb.force) fx = pb.force(lat.face_center(a, f), t);
      double kgrad = 0.0, kf = 0.0;
      for (int b = 0; b < d; ++b) {
        const double g = b == a ? (p[R] - p[L]) * ih : 0.5 * (gp[b * nc + L] + gp[b * nc + R]);
        kgrad += pb.K(a, b) * g;
        kf += pb.K(a, b) * fx[b];
      }
      const std::size_t gi = off[a] + i;
      out.velocity[gi] = rho_f * kf - kgrad;
      const double rho_up = kf >= 0.0 ? rho[L] : rho[R];
      out.flux[gi] = rho_up * rho_up * kf - rho_f * kgrad;
    }
  }
  return out;
}

}  // namespace

FaceField darcy_velocity(const LimitProblem& pb, const CellField& rho, double t) {
  check_problem(pb, rho);
  for (double r : rho)
    if (!(r > 0.0)) throw DomainError("Darcy velocity requires a positive density");
  return assemble(pb, rho, t).velocity;
}

double limit_stable_dt(const LimitProblem& pb, const CellField& rho, double t) {
  const Lattice& lat = pb.lattice;
  const int d = lat.dim;
  double diff = 0.0, rho_max = 0.0;
  for (std::size_t c = 0; c < rho.size(); ++c) {
    diff = std::max(diff, rho[c] * pressure_eval(pb.law, std::max(rho[c], 0.0), 1));
    rho_max = std::max(rho_max, rho[c]);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (pb.K + pb.K.transpose()));
  const double knorm = es.eigenvalues().cwiseAbs().maxCoeff();
  double kf_max = 0.0;
  if (pb.force) {
    const FaceField f = sample_force(lat, pb.force, t);
    const auto off = lat.face_offsets();
    for (int a = 0; a < d; ++a)
      for (std::size_t i = off[a]; i < off[a + 1]; ++i) kf_max = std::max(kf_max, std::abs(f[i]));
    kf_max *= pb.K.cwiseAbs().rowwise().sum().maxCoeff();
  }
  // Monotone if the diffusive and advective Courant numbers sum to at most one.
  const double rate = 2.0 * d * diff * knorm / (pb.theta * lat.h * lat.h) + 2.0 * d * rho_max * kf_max / (pb.theta * lat.h);
  return rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
}

LimitState step_limit(const LimitProblem& pb, const LimitState& s, double dt) {
  check_problem(pb, s.rho);
  const double dt_stable = limit_stable_dt(pb, s.rho, s.t);
  if (dt > dt_stable * (1.0 + 1e-12)) throw StepRejected("limit step exceeds the stability restriction", dt_stable);
  const Lattice& lat = pb.lattice;
  const int d = lat.dim;
  const FaceFluxes fl = assemble(pb, s.rho, s.t);
  const auto off = lat.face_offsets();
  LimitState next;
  next.t = s.t + dt;
  next.rho = s.rho;
  const double coef = dt / (pb.theta * lat.h);
  for (int a = 0; a < d; ++a)
    for (std::size_t i = 0; i < off[a + 1] - off[a]; ++i) {
      const double F = fl.flux[off[a] + i];
      if (F == 0.0) continue;
      const Index3 f = lat.face_coords(a, i);
      Index3 cl = f, cr = f;
      cl[a] = lat.wrap(a, f[a] - 1);
      cr[a] = lat.wrap(a, f[a]);
      next.rho[lat.cell_index(cl)] -= coef * F;
      next.rho[lat.cell_index(cr)] += coef * F;
    }
  for (double r : next.rho)
    if (!(r >= 0.0)) throw StepRejected("limit step produced a negative density", 0.5 * dt);
  next.u = assemble(pb, next.rho, next.t).velocity;
  return next;
}

double limit_mass(const LimitProblem& pb, const CellField& rho) {
  double m = 0.0;
  for (double r : rho) m += r;
  return pb.theta * m * pb.lattice.cell_volume();
}

std::size_t LimitTrajectory::bracket(double t, double& w) const {
  if (states_.size() < 2) {
    w = 0.0;
    return 0;
  }
  const auto it = std::upper_bound(states_.begin(), states_.end(), t, [](double v, const LimitState& s) { return v < s.t; });
  std::size_t k = it == states_.begin() ? 0 : static_cast<std::size_t>(it - states_.begin()) - 1;
  k = std::min(k, states_.size() - 2);
  w = (t - states_[k].t) / (states_[k + 1].t - states_[k].t);
  w = std::clamp(w, 0.0, 1.0);
  return k;
}

double LimitTrajectory::rho(const Vec3& x, double t) const {
  double w;
  const std::size_t k = bracket(t, w);
  const double a = interpolate_cells(pb_.lattice, states_[k].rho, x);
  if (states_.size() < 2) return a;
  return (1.0 - w) * a + w * interpolate_cells(pb_.lattice, states_[k + 1].rho, x);
}

Vec3 LimitTrajectory::u(const Vec3& x, double t) const {
  double w;
  const std::size_t k = bracket(t, w);
  Vec3 out{0.0, 0.0, 0.0};
  for (int a = 0; a < pb_.lattice.dim; ++a) {
    out[a] = interpolate_faces(pb_.lattice, states_[k].u, a, x);
    if (states_.size() >= 2) out[a] = (1.0 - w) * out[a] + w * interpolate_faces(pb_.lattice, states_[k + 1].u, a, x);
  }
  return out;
}

double LimitTrajectory::rho_t(const Vec3& x, double t) const {
  if (states_.size() < 2) return 0.0;
  double w;
  const std::size_t k = bracket(t, w);
  const double dt = states_[k + 1].t - states_[k].t;
  return (interpolate_cells(pb_.lattice, states_[k + 1].rho, x) - interpolate_cells(pb_.lattice, states_[k].rho, x)) / dt;
}

Vec3 LimitTrajectory::u_t(const Vec3& x, double t) const {
  Vec3 out{0.0, 0.0, 0.0};
  if (states_.size() < 2) return out;
  double w;
  const std::size_t k = bracket(t, w);
  const double dt = states_[k + 1].t - states_[k].t;
  for (int a = 0; a < pb_.lattice.dim; ++a)
    out[a] = (interpolate_faces(pb_.lattice, states_[k + 1].u, a, x) - interpolate_faces(pb_.lattice, states_[k].u, a, x)) / dt;
  return out;
}

LimitTrajectory solve_limit(const LimitProblem& pb, const CellField& rho0, const std::vector<double>& output_times,
                            const LimitDtPolicy& policy) {
  check_problem(pb, rho0);
  if (output_times.empty()) throw ConfigError("solve_limit needs at least one output time");
  if (!std::is_sorted(output_times.begin(), output_times.end()) || output_times.front() < 0.0)
    throw ConfigError("output times must be sorted and non-negative");
  for (double r : rho0)
    if (!(r > 0.0)) throw DomainError("limit solve requires a strictly positive initial density");
  LimitState s;
  s.t = 0.0;
  s.rho = rho0;
  s.u = darcy_velocity(pb, rho0, 0.0);
  std::vector<LimitState> out;
  long steps = 0;
  for (double target : output_times) {
    while (s.t < target - 1e-14 * std::max(1.0, target)) {
      double dt = std::min(policy.cfl * limit_stable_dt(pb, s.rho, s.t), policy.dt_max);
      dt = std::min(dt, target - s.t);
      s = step_limit(pb, s, dt);
      ++steps;
    }
    s.t = target;
    out.push_back(s);
  }
  return LimitTrajectory(pb, std::move(out), steps);
}

}  // namespace homlab

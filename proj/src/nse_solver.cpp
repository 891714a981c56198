#include "homlab/nse_solver.hpp"

#include <algorithm>
#include <cmath>

#include "homlab/errors.hpp"
#include "homlab/krylov.hpp"

namespace homlab {

NseSolver::NseSolver(const PerforatedGrid& grid, NseParams params)
    : grid_(grid), mesh_(grid.mesh()), params_(std::move(params)) {
  params_.law.validate();
  if (!(params_.lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (params_.eta_bulk < 0.0) throw ConfigError("bulk viscosity must be non-negative");
}

FaceField NseSolver::face_density(const CellField& rho) const {
  FaceField rf(mesh_.face_dofs(), 0.0);
  for (const std::int32_t gi : mesh_.open_faces())
    rf[gi] = 0.5 * (rho[mesh_.face_lower_cell(gi)] + rho[mesh_.face_upper_cell(gi)]);
  return rf;
}

double NseSolver::viscous_form(std::span<const double> u, std::span<const double> v) const {
  CellField du(mesh_.cell_count()), dv(mesh_.cell_count());
  mesh_.divergence(u, du);
  mesh_.divergence(v, dv);
  double s = 0.0;
  for (std::size_t c = 0; c < du.size(); ++c) s += du[c] * dv[c];
  return mesh_.dirichlet_form(u, v) + (1.0 / 3.0 + params_.eta_bulk) * s * mesh_.lattice().cell_volume();
}

double NseSolver::kinetic_energy(const CellField& rho, const FaceField& u) const {
  const FaceField rf = face_density(rho);
  double s = 0.0;
  for (const std::int32_t gi : mesh_.open_faces()) s += rf[gi] * u[gi] * u[gi];
  return 0.5 * std::pow(grid_.epsilon, params_.lambda) * s * mesh_.lattice().cell_volume();
}

double NseSolver::internal_energy(const CellField& rho) const {
  double s = 0.0;
  const auto& fluid = mesh_.fluid();
  for (std::size_t c = 0; c < rho.size(); ++c)
    if (fluid[c]) s += potential_H(params_.law, rho[c], 0);
  return s * mesh_.lattice().cell_volume();
}

double NseSolver::mass(const CellField& rho) const {
  double s = 0.0;
  const auto& fluid = mesh_.fluid();
  for (std::size_t c = 0; c < rho.size(); ++c)
    if (fluid[c]) s += rho[c];
  return s * mesh_.lattice().cell_volume();
}

FlowState NseSolver::initialize(const CellField& rho0, const FaceField& m0) const {
  if (rho0.size() != mesh_.cell_count()) throw ConfigError("initial density does not match the grid");
  if (m0.size() != mesh_.face_dofs()) throw ConfigError("initial momentum does not match the grid");
  FlowState s;
  s.rho.assign(rho0.size(), 0.0);
  const auto& fluid = mesh_.fluid();
  for (std::size_t c = 0; c < rho0.size(); ++c) {
    if (!fluid[c]) continue;
    if (!(rho0[c] >= 0.0)) throw ConfigError("initial density must be non-negative");
    s.rho[c] = rho0[c];
  }
  s.u.assign(mesh_.face_dofs(), 0.0);
  const FaceField rf = face_density(s.rho);
  for (const std::int32_t gi : mesh_.open_faces()) {
    if (rf[gi] > 0.0) {
      s.u[gi] = m0[gi] / rf[gi];
    } else if (m0[gi] != 0.0) {
      throw ConfigError("compatibility violated: nonzero momentum on a vacuum cell");
    }
  }
  s.diag.kinetic = kinetic_energy(s.rho, s.u);
  s.diag.internal = internal_energy(s.rho);
  s.diag.mass = mass(s.rho);
  return s;
}

double NseSolver::stable_dt(const FlowState& s) const {
  double cmax = 0.0, umax = 0.0;
  const auto& fluid = mesh_.fluid();
  for (std::size_t c = 0; c < s.rho.size(); ++c)
    if (fluid[c] && s.rho[c] > 0.0) cmax = std::max(cmax, std::sqrt(pressure_eval(params_.law, s.rho[c], 1)));
  for (const std::int32_t gi : mesh_.open_faces()) umax = std::max(umax, std::abs(s.u[gi]));
  const double h = mesh_.lattice().h;
  const double mach = std::pow(grid_.epsilon, 0.5 * params_.lambda);
  double dt = cmax > 0.0 ? 0.5 * h * mach / cmax : std::numeric_limits<double>::infinity();
  if (umax > 0.0) dt = std::min(dt, 0.5 * h / (mesh_.dim() * umax));
  return dt;
}

FlowState NseSolver::step(const FlowState& s, double dt) const {
  const Lattice& lat = mesh_.lattice();
  const int d = lat.dim;
  const double h = lat.h, ih = 1.0 / h;
  const double eps_l = std::pow(grid_.epsilon, params_.lambda);
  const double eps2 = grid_.epsilon * grid_.epsilon;
  const double bulk = 1.0 / 3.0 + params_.eta_bulk;
  const std::size_t nf = mesh_.face_dofs(), nc = mesh_.cell_count();
  const auto& open = mesh_.open_faces();
  const auto& fluid = mesh_.fluid();

  // Primal upwind mass fluxes.
  FaceField F(nf, 0.0);
  for (const std::int32_t gi : open) {
    const double u = s.u[gi];
    F[gi] = u * (u >= 0.0 ? s.rho[mesh_.face_lower_cell(gi)] : s.rho[mesh_.face_upper_cell(gi)]);
  }
  FlowState next;
  next.t = s.t + dt;
  next.rho = s.rho;
  for (std::size_t c = 0; c < nc; ++c) {
    if (!fluid[c]) continue;
    double div = 0.0;
    for (int a = 0; a < d; ++a) div += F[mesh_.cell_face(c, a, 1)] - F[mesh_.cell_face(c, a, 0)];
    next.rho[c] = s.rho[c] - dt * ih * div;
    if (next.rho[c] < 0.0) throw StepRejected("NSE step produced a negative density", 0.5 * dt);
  }

  const FaceField rf0 = face_density(s.rho);
  const FaceField rf1 = face_density(next.rho);
  FaceField fext(nf, 0.0);
  if (params_.force) fext = sample_force(lat, params_.force, next.t);

  // Explicit right-hand side: inertia, upwind convection on dual cells, pressure, force.
  FaceField rhs(nf, 0.0), diag(nf, 0.0);
  std::vector<double> pn(nc, 0.0);
  for (std::size_t c = 0; c < nc; ++c)
    if (fluid[c]) pn[c] = pressure_eval(params_.law, next.rho[c], 0);
  for (std::size_t k = 0; k < open.size(); ++k) {
    const std::int32_t gi = open[k];
    const int a = mesh_.face_axis(gi);
    const std::int32_t L = mesh_.face_lower_cell(gi), R = mesh_.face_upper_cell(gi);
    const auto nb = mesh_.neighbours(k);
    const double uf = s.u[gi];
    double conv = 0.0;
    for (int b = 0; b < d; ++b)
      for (int side = 0; side < 2; ++side) {
        double phi;
        if (b == a) {
          phi = side ? 0.5 * (F[gi] + F[mesh_.cell_face(R, a, 1)]) : -0.5 * (F[mesh_.cell_face(L, a, 0)] + F[gi]);
        } else {
          const double fl = F[mesh_.cell_face(L, b, side)], fr = F[mesh_.cell_face(R, b, side)];
          phi = side ? 0.5 * (fl + fr) : -0.5 * (fl + fr);
        }
        const std::int32_t m = nb[2 * b + side];
        const double un = m == StaggeredMesh::kWall ? -uf : s.u[m];
        conv += phi * (phi > 0.0 ? uf : un);
      }
    conv *= ih;
    rhs[gi] = eps_l * (rf0[gi] * uf / dt - conv) - (pn[R] - pn[L]) * ih + rf1[gi] * fext[gi];
    diag[gi] = eps_l * rf1[gi] / dt + eps2 * (2.0 * d + 2.0 * bulk) * ih * ih;
  }

  FaceField lap(nf), grad(nf);
  CellField div(nc);
  auto apply = [&](std::span<const double> x, std::span<double> y) {
    mesh_.laplacian(x, lap);
    mesh_.divergence(x, div);
    mesh_.gradient(div, grad);
    for (std::size_t i = 0; i < nf; ++i) y[i] = eps_l * rf1[i] / dt * x[i] + eps2 * (lap[i] - bulk * grad[i]);
    for (std::size_t i = 0; i < nf; ++i)
      if (!mesh_.open()[i]) y[i] = 0.0;
  };
  auto precond = [&](std::span<const double> r, std::span<double> z) {
    for (std::size_t i = 0; i < nf; ++i) z[i] = diag[i] > 0.0 ? r[i] / diag[i] : 0.0;
  };
  next.u = s.u;
  const KrylovResult kr = conjugate_gradient(apply, precond, rhs, next.u, params_.solver_tol, params_.solver_max_iter);
  if (!kr.converged) throw SolverError("implicit viscous solve did not converge", kr.residual);

  next.diag = s.diag;
  next.diag.last_iterations = kr.iterations;
  next.diag.kinetic = kinetic_energy(next.rho, next.u);
  next.diag.internal = internal_energy(next.rho);
  next.diag.mass = mass(next.rho);
  next.diag.dissipation += dt * eps2 * viscous_form(next.u, next.u);
  double work = 0.0;
  for (const std::int32_t gi : open) work += rf1[gi] * fext[gi] * next.u[gi];
  next.diag.force_work += dt * work * lat.cell_volume();
  return next;
}

FlowState initialize_flow(const NseSolver& solver, const CellField& rho0, const FaceField& m0) {
  return solver.initialize(rho0, m0);
}

FlowState step_nse(const NseSolver& solver, const FlowState& s, double dt) { return solver.step(s, dt); }

BoundsRow bounds_row(const NseSolver& solver, const FlowState& s, double energy0) {
  const StaggeredMesh& mesh = solver.mesh();
  const double eps = solver.epsilon();
  BoundsRow r;
  r.t = s.t;
  r.kinetic_l1 = 2.0 * s.diag.kinetic;
  r.u_l2_sq = mesh.face_inner(s.u, s.u);
  const double grad_sq = mesh.dirichlet_form(s.u, s.u);
  r.grad_l2_sq = eps * eps * grad_sq;
  double rg = 0.0;
  for (std::size_t c = 0; c < s.rho.size(); ++c)
    if (mesh.fluid()[c]) rg += std::pow(s.rho[c], solver.params().law.gamma);
  r.rho_gamma = rg * mesh.lattice().cell_volume();
  r.poincare_ratio = grad_sq > 0.0 ? std::sqrt(r.u_l2_sq) / (eps * std::sqrt(grad_sq)) : 0.0;
  r.energy = s.diag.kinetic + s.diag.internal;
  r.energy_defect = r.energy + s.diag.dissipation - energy0 - s.diag.force_work;
  r.mass = s.diag.mass;
  return r;
}

NseRun solve_nse(const NseSolver& solver, const FlowState& initial, double T, const NseDtPolicy& policy,
                 const NseObserver& observer) {
  if (!(T > 0.0)) throw ConfigError("final time must be positive");
  NseRun run;
  const double energy0 = initial.diag.kinetic + initial.diag.internal;
  FlowState s = initial;
  s.diag.dissipation = 0.0;
  s.diag.force_work = 0.0;
  run.samples.push_back(s);
  run.monitor.push_back(bounds_row(solver, s, energy0));
  double next_out = policy.output_interval > 0.0 ? policy.output_interval : T;
  while (s.t < T - 1e-12 * T) {
    const double stable = solver.stable_dt(s);
    double dt;
    if (policy.fixed_dt) {
      dt = *policy.fixed_dt;
      if (dt > stable * (1.0 + 1e-12)) throw StepRejected("fixed NSE time step exceeds the stability restriction", stable);
    } else {
      dt = policy.cfl * stable;
    }
    dt = std::min(dt, T - s.t);
    FlowState nx = solver.step(s, dt);
    if (observer) observer(s, nx, dt);
    s = std::move(nx);
    ++run.steps;
    run.max_dt = std::max(run.max_dt, dt);
    run.monitor.push_back(bounds_row(solver, s, energy0));
    run.max_energy_defect = std::max(run.max_energy_defect, run.monitor.back().energy_defect);
    if (s.t >= next_out - 1e-12 * T || s.t >= T - 1e-12 * T) {
      run.samples.push_back(s);
      next_out += policy.output_interval > 0.0 ? policy.output_interval : T;
    }
  }
  if (run.samples.back().t != s.t) run.samples.push_back(s);
  return run;
}

}  // namespace homlab

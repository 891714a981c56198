#include "homlab/cell_problem.hpp"

#include <cmath>
#include <numbers>
#include <thread>

#include "homlab/errors.hpp"
#include "homlab/krylov.hpp"
#include "homlab/spectral.hpp"

namespace homlab {

namespace {

struct Direction {
  FaceField w;
  CellField q;
  int iterations = 0;
  double div_res = 0.0;
  double mom_res = 0.0;
};

Direction solve_direction(const StaggeredMesh& mesh, int axis, const CellSolveOptions& opt) {
  const Lattice& lat = mesh.lattice();
  const std::size_t nf = mesh.face_dofs(), nc = mesh.cell_count();
  const auto& off = mesh.face_offsets();
  const auto& open = mesh.open();
  const auto& fluid = mesh.fluid();
  const int d = lat.dim;
  PeriodicPoisson poisson(lat, opt.shift);

  std::vector<double> b(nf + nc, 0.0);
  for (std::size_t gi = off[axis]; gi < off[axis + 1]; ++gi)
    if (open[gi]) b[gi] = 1.0;

  std::vector<double> grad(nf), div(nc);
  auto apply = [&](std::span<const double> x, std::span<double> y) {
    mesh.laplacian(x.first(nf), y.first(nf));
    mesh.gradient(x.subspan(nf), grad);
    for (std::size_t i = 0; i < nf; ++i) y[i] += grad[i];
    mesh.divergence(x.first(nf), div);
    for (std::size_t c = 0; c < nc; ++c) y[nf + c] = fluid[c] ? -div[c] : 0.0;
  };
  auto precond = [&](std::span<const double> r, std::span<double> z) {
    for (int a = 0; a < d; ++a) {
      const std::size_t n = off[a + 1] - off[a];
      poisson.solve(r.subspan(off[a], n), z.subspan(off[a], n));
    }
    for (std::size_t i = 0; i < nf; ++i)
      if (!open[i]) z[i] = 0.0;
    for (std::size_t c = 0; c < nc; ++c) z[nf + c] = fluid[c] ? r[nf + c] : 0.0;
  };

  std::vector<double> ax(nf + nc);
  Direction out;
  auto residuals = [&](std::span<const double> x) {
    apply(x, ax);
    double mom = 0.0, dv = 0.0;
    for (std::size_t i = 0; i < nf; ++i)
      if (open[i]) mom = std::max(mom, std::abs(b[i] - ax[i]));
    for (std::size_t c = 0; c < nc; ++c) dv = std::max(dv, std::abs(ax[nf + c]));
    out.mom_res = mom;
    out.div_res = dv;
    return mom <= opt.momentum_tol && dv <= opt.div_tol;
  };

  std::vector<double> x(nf + nc, 0.0);
  const KrylovResult kr = minres(apply, precond, b, x, 1e-15, opt.max_iter, residuals, 25);
  residuals(x);
  out.iterations = kr.iterations;
  if (out.mom_res > opt.momentum_tol || out.div_res > opt.div_tol)
    throw SolverError("cell Stokes solve did not converge (momentum residual " + std::to_string(out.mom_res) +
                          ", divergence residual " + std::to_string(out.div_res) + ")",
                      std::max(out.mom_res, out.div_res));

  out.w.assign(x.begin(), x.begin() + nf);
  out.q.assign(x.begin() + nf, x.end());
  double mean = 0.0;
  for (std::size_t c = 0; c < nc; ++c)
    if (fluid[c]) mean += out.q[c];
  mean /= static_cast<double>(mesh.fluid_cell_count());
  for (std::size_t c = 0; c < nc; ++c) out.q[c] = fluid[c] ? out.q[c] - mean : 0.0;
  return out;
}

std::size_t wrap_index(const Lattice& lat, int i, int j, int k) {
  return lat.cell_index(lat.wrap(0, i), lat.wrap(1, j), lat.wrap(2, k));
}

}  // namespace

CellSolution solve_cell(const CellGrid& cell, const CellSolveOptions& opt) {
  const StaggeredMesh mesh = cell.mesh();
  if (cell.obstacle.empty() || mesh.fluid_cell_count() == mesh.cell_count())
    throw SolverError("periodic Stokes cell problem without obstacle has no solution: mean forcing cannot be balanced");
  const int d = cell.dim;
  std::vector<Direction> dirs(d);
  if (opt.jobs > 1) {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(d);
    for (int i = 0; i < d; ++i)
      pool.emplace_back([&, i] {
        try {
          dirs[i] = solve_direction(mesh, i, opt);
        } catch (...) {
          errs[i] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  } else {
    for (int i = 0; i < d; ++i) dirs[i] = solve_direction(mesh, i, opt);
  }

  CellSolution sol;
  sol.cell = cell;
  const auto& off = mesh.face_offsets();
  const double ncell = static_cast<double>(mesh.cell_count());
  const double vol_q = std::pow(2.0, d);
  sol.K = Eigen::MatrixXd::Zero(d, d);
  sol.K_energy = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    sol.W.push_back(std::move(dirs[j].w));
    sol.q.push_back(std::move(dirs[j].q));
    sol.iterations.push_back(dirs[j].iterations);
    sol.max_div_residual = std::max(sol.max_div_residual, dirs[j].div_res);
    sol.max_momentum_residual = std::max(sol.max_momentum_residual, dirs[j].mom_res);
  }
  for (int j = 0; j < d; ++j)
    for (int a = 0; a < d; ++a) {
      double s = 0.0;
      for (std::size_t gi = off[a]; gi < off[a + 1]; ++gi) s += sol.W[j][gi];
      sol.K(a, j) = s / ncell;
    }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) sol.K_energy(i, j) = mesh.dirichlet_form(sol.W[i], sol.W[j]) / vol_q;
  return sol;
}

PermeabilityReport permeability(const CellSolution& sol) {
  if (sol.W.empty()) throw DomainError("permeability: cell problem not solved");
  PermeabilityReport r;
  const int d = sol.dim();
  r.K = sol.K;
  r.K_energy = sol.K_energy;
  const double kn = r.K.norm();
  r.symmetry_defect = (r.K - r.K.transpose()).norm() / kn;
  r.energy_symmetry_defect = (r.K_energy - r.K_energy.transpose()).norm() / r.K_energy.norm();
  r.energy_discrepancy = (r.K - r.K_energy).norm() / kn;
  const double k_iso = r.K.trace() / d;
  r.isotropy_defect = (r.K - k_iso * Eigen::MatrixXd::Identity(d, d)).norm() / k_iso;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (r.K + r.K.transpose()));
  r.eigenvalues = es.eigenvalues();
  return r;
}

AverageIdentityReport check_cell_average_identity(const CellSolution& sol) {
  const int d = sol.dim();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(sol.K);
  if (!lu.isInvertible() || std::abs(sol.K.determinant()) < 1e-300) throw DomainError("permeability tensor is singular");
  const StaggeredMesh mesh = sol.cell.mesh();
  const Lattice& lat = sol.cell.lattice;
  Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t c = 0; c < lat.cell_count(); ++c) {
    if (!sol.cell.fluid[c]) continue;
    for (int j = 0; j < d; ++j)
      for (int a = 0; a < d; ++a)
        avg(a, j) += 0.5 * (sol.W[j][mesh.cell_face(c, a, 0)] + sol.W[j][mesh.cell_face(c, a, 1)]);
  }
  const double n_total = static_cast<double>(lat.cell_count());
  const Eigen::MatrixXd WKinv = avg * sol.K.inverse() / (sol.theta() * n_total);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  AverageIdentityReport r;
  r.discrete_defect = (WKinv - I / sol.theta()).norm();
  r.analytic_defect = (WKinv - I / sol.cell.obstacle.porosity()).norm();
  return r;
}

std::vector<double> curl_to_faces(const Lattice& lat, const std::vector<double>& phi) {
  const std::size_t nc = lat.cell_count();
  const double ih = 1.0 / lat.h;
  std::vector<double> u(lat.dim * nc, 0.0);
  for (std::size_t c = 0; c < nc; ++c) {
    const Index3 I = lat.cell_coords(c);
    const int i = I[0], j = I[1], k = I[2];
    if (lat.dim == 2) {
      u[c] = (phi[wrap_index(lat, i, j + 1, k)] - phi[c]) * ih;
      u[nc + c] = -(phi[wrap_index(lat, i + 1, j, k)] - phi[c]) * ih;
    } else {
      for (int a = 0; a < 3; ++a) {
        const int b = (a + 1) % 3, cc = (a + 2) % 3;
        Index3 Ib = I, Ic = I;
        Ib[b] += 1;
        Ic[cc] += 1;
        const double dphic = phi[cc * nc + wrap_index(lat, Ib[0], Ib[1], Ib[2])] - phi[cc * nc + c];
        const double dphib = phi[b * nc + wrap_index(lat, Ic[0], Ic[1], Ic[2])] - phi[b * nc + c];
        u[a * nc + c] = (dphic - dphib) * ih;
      }
    }
  }
  return u;
}

std::vector<double> curl_from_faces(const Lattice& lat, const std::vector<double>& u) {
  const std::size_t nc = lat.cell_count();
  const double ih = 1.0 / lat.h;
  std::vector<double> out(lat.dim == 2 ? nc : 3 * nc, 0.0);
  for (std::size_t c = 0; c < nc; ++c) {
    const Index3 I = lat.cell_coords(c);
    const int i = I[0], j = I[1], k = I[2];
    if (lat.dim == 2) {
      out[c] = (u[nc + c] - u[nc + wrap_index(lat, i - 1, j, k)]) * ih - (u[c] - u[wrap_index(lat, i, j - 1, k)]) * ih;
    } else {
      for (int cc = 0; cc < 3; ++cc) {
        const int a = (cc + 1) % 3, b = (cc + 2) % 3;
        Index3 Ia = I, Ib = I;
        Ia[a] -= 1;
        Ib[b] -= 1;
        const double dab = u[b * nc + c] - u[b * nc + wrap_index(lat, Ia[0], Ia[1], Ia[2])];
        const double dba = u[a * nc + c] - u[a * nc + wrap_index(lat, Ib[0], Ib[1], Ib[2])];
        out[cc * nc + c] = (dab - dba) * ih;
      }
    }
  }
  return out;
}

double solve_vector_potential(CellSolution& sol) {
  if (sol.W.empty()) throw DomainError("vector potential: cell problem not solved");
  const int d = sol.dim();
  const Lattice& lat = sol.cell.lattice;
  const std::size_t nc = lat.cell_count();
  PeriodicPoisson poisson(lat, 0.0);
  sol.Phi.assign(d, {});
  double worst = 0.0;
  for (int j = 0; j < d; ++j) {
    std::vector<double> v(sol.W[j]);
    for (int a = 0; a < d; ++a) {
      double mean = 0.0;
      for (std::size_t c = 0; c < nc; ++c) {
        v[a * nc + c] -= sol.K(a, j);
        mean += v[a * nc + c];
      }
      mean /= static_cast<double>(nc);
      if (std::abs(mean) > 1e-10) throw SolverError("W - K has nonzero mean; permeability inconsistent", mean);
    }
    std::vector<double> phi;
    if (d == 2) {
      const std::vector<double> omega = curl_from_faces(lat, v);
      phi.assign(nc, 0.0);
      poisson.solve(omega, phi);
    } else {
      std::vector<double> F(3 * nc);
      for (int a = 0; a < 3; ++a) poisson.solve(std::span<const double>(v).subspan(a * nc, nc), std::span<double>(F).subspan(a * nc, nc));
      phi = curl_from_faces(lat, F);
    }
    const std::vector<double> back = curl_to_faces(lat, phi);
    for (std::size_t i = 0; i < back.size(); ++i) worst = std::max(worst, std::abs(back[i] - v[i]));
    sol.Phi[j] = std::move(phi);
  }
  return worst;
}

double dilute_permeability(double radius) {
  const double c = (4.0 / 3.0) * std::numbers::pi * std::pow(radius, 3) / 8.0;
  return 8.0 / (6.0 * std::numbers::pi * radius) * (1.0 - 1.7601 * std::cbrt(c));
}

}  // namespace homlab

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "homlab/errors.hpp"
#include "support.hpp"

using namespace homlab;
using testing_support::pi;

namespace {

NseSolver make_solver(double eps, ForceFn f = {}, double lambda = 2.5, int n = 16) {
  auto g = build_perforated_grid(DomainKind::torus, {1, 1, 1}, eps, testing_support::disk(), n);
  NseParams prm;
  prm.lambda = lambda;
  prm.law = PressureLaw{2.0, 1.0};
  prm.force = std::move(f);
  return NseSolver(g, prm);
}

FlowState rest(const NseSolver& s, double rho = 1.0) {
  return s.initialize(CellField(s.mesh().cell_count(), rho), s.mesh().zero_faces());
}

FlowState bumpy(const NseSolver& s) {
  auto rho = sample_cells(s.grid().lattice, [](const Vec3& x) { return 1.0 + 0.2 * std::cos(2 * pi * x[0]) * std::sin(2 * pi * x[1]); });
  return s.initialize(rho, s.mesh().zero_faces());
}

}  // namespace

TEST_CASE("rest state is an exact fixed point") {
  auto solver = make_solver(0.25);
  auto s0 = rest(solver);
  CHECK(s0.diag.kinetic == 0.0);
  CHECK(s0.diag.internal == 0.0);  // H(1) = 0
  auto s = s0;
  for (int i = 0; i < 5; ++i) s = solver.step(s, 0.5 * solver.stable_dt(s));
  CHECK(s.rho == s0.rho);
  for (double v : s.u) CHECK(v == 0.0);
}

TEST_CASE("compatibility of the initial momentum") {
  auto solver = make_solver(0.25);
  const auto& mesh = solver.mesh();
  CellField rho(mesh.cell_count(), 1.0);
  FaceField m = mesh.zero_faces();
  const std::int32_t f = mesh.open_faces().front();
  // a face is vacuum when both neighbouring cells are
  rho[mesh.face_lower_cell(f)] = 0.0;
  rho[mesh.face_upper_cell(f)] = 0.0;
  m[f] = 1.0;
  CHECK_THROWS_AS(solver.initialize(rho, m), ConfigError);
  rho.assign(mesh.cell_count(), -1.0);
  CHECK_THROWS_AS(solver.initialize(rho, mesh.zero_faces()), ConfigError);
}

TEST_CASE("no-slip, mass and energy along a run") {
  auto solver = make_solver(0.125);
  NseDtPolicy pol;
  auto run = solve_nse(solver, bumpy(solver), 0.01, pol);
  const auto& mesh = solver.mesh();
  const double m0 = run.samples.front().diag.mass;
  for (const auto& s : run.samples) {
    for (std::size_t f = 0; f < mesh.face_dofs(); ++f)
      if (!mesh.open()[f]) CHECK(s.u[f] == 0.0);
    CHECK(*std::min_element(s.rho.begin(), s.rho.end()) >= 0.0);
  }
  for (const auto& row : run.monitor) CHECK(std::abs(row.mass - m0) / m0 <= 1e-10);
  CHECK(run.steps > 10);
  MESSAGE("energy defect constant " << run.max_energy_defect / run.max_dt);
  CHECK(run.max_energy_defect <= 1.0 * run.max_dt);
}

TEST_CASE("energy defect constant is stable under dt halving") {
  auto solver = make_solver(0.25);
  std::vector<double> C;
  for (double cfl : {0.5, 0.25}) {
    NseDtPolicy pol;
    pol.cfl = cfl;
    auto run = solve_nse(solver, bumpy(solver), 0.01, pol);
    C.push_back(run.max_energy_defect / run.max_dt);
  }
  CHECK(C[1] <= 1.5 * C[0] + 1e-12);
}

TEST_CASE("energy bookkeeping matches direct evaluation") {
  auto solver = make_solver(0.25, [](const Vec3&, double) { return Vec3{1.0, 0.0, 0.0}; });
  auto s = bumpy(solver);
  for (int i = 0; i < 3; ++i) s = solver.step(s, 0.5 * solver.stable_dt(s));
  CHECK(s.diag.kinetic == doctest::Approx(solver.kinetic_energy(s.rho, s.u)).epsilon(1e-13));
  CHECK(s.diag.internal == doctest::Approx(solver.internal_energy(s.rho)).epsilon(1e-13));
  CHECK(solver.viscous_form(s.u, s.u) >= 0.0);
}

TEST_CASE("a priori bounds are uniform in eps") {
  // constant force from rest: u relaxes towards the O(1) Darcy pattern at every eps
  ForceFn f = [](const Vec3&, double) { return Vec3{1.0, 0.0, 0.0}; };
  std::vector<BoundsRow> peak;
  for (double eps : {0.25, 0.125}) {
    auto solver = make_solver(eps, f);
    NseDtPolicy pol;
    auto run = solve_nse(solver, rest(solver), 0.01, pol);
    BoundsRow m;
    double pr = 0.0;
    for (const auto& r : run.monitor) {
      m.kinetic_l1 = std::max(m.kinetic_l1, r.kinetic_l1);
      m.u_l2_sq = std::max(m.u_l2_sq, r.u_l2_sq);
      m.grad_l2_sq = std::max(m.grad_l2_sq, r.grad_l2_sq);
      m.rho_gamma = std::max(m.rho_gamma, r.rho_gamma);
      pr = std::max(pr, r.poincare_ratio);
    }
    m.poincare_ratio = pr;
    peak.push_back(m);
  }
  auto within = [](double a, double b) { return b <= 4.0 * a && a <= 4.0 * b; };
  CHECK(peak[1].kinetic_l1 <= 4.0 * peak[0].kinetic_l1);
  CHECK(within(peak[0].u_l2_sq, peak[1].u_l2_sq));
  CHECK(within(peak[0].grad_l2_sq, peak[1].grad_l2_sq));
  CHECK(within(peak[0].rho_gamma, peak[1].rho_gamma));
  CHECK(peak[1].poincare_ratio == doctest::Approx(peak[0].poincare_ratio).epsilon(0.2));
}

TEST_CASE("single-cell forced flow approaches the cell solution") {
  // one cell of the unit torus (eps = 1/2): -eps^2 Delta u + grad p = f gives u = W(x/eps) f
  const double f1 = 0.05;
  auto solver = make_solver(0.5, [=](const Vec3&, double) { return Vec3{f1, 0.0, 0.0}; }, 4.0);
  NseDtPolicy pol;
  auto run = solve_nse(solver, rest(solver), 1.5, pol);
  const auto& cell = testing_support::disk_cell(16);
  const auto& u = run.samples.back().u;
  double err = 0.0, norm = 0.0;
  for (std::size_t f = 0; f < u.size(); ++f) {
    const double ref = f1 * cell.W[0][f];  // same lattice layout: one reference cell
    err += (u[f] - ref) * (u[f] - ref);
    norm += ref * ref;
  }
  MESSAGE("relative L2 distance to W f: " << std::sqrt(err / norm));
  CHECK(std::sqrt(err / norm) <= 0.01);
}

TEST_CASE("oversized fixed step is rejected") {
  auto solver = make_solver(0.25);
  NseDtPolicy pol;
  pol.fixed_dt = 10.0 * solver.stable_dt(bumpy(solver));
  CHECK_THROWS_AS(solve_nse(solver, bumpy(solver), 0.01, pol), StepRejected);
}

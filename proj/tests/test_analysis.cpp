#include <cmath>
#include <random>

#include "doctest.h"
#include "homlab/errors.hpp"
#include "homlab/spectral.hpp"
#include "support.hpp"

using namespace homlab;
using testing_support::pi;

namespace {

NseSolver solver_at(double eps, ForceFn f = {}, DomainKind kind = DomainKind::torus) {
  auto g = build_perforated_grid(kind, {1, 1, 1}, eps, testing_support::disk(), 16);
  NseParams prm;
  prm.lambda = 2.5;
  prm.law = PressureLaw{2.0, 1.0};
  prm.force = std::move(f);
  return NseSolver(g, prm);
}

// comparison pair with w = 0 and constant r
CorrectorPair frozen_pair(const NseSolver& s, double r, double t = 0.0) {
  CorrectorPair p;
  p.t = t;
  p.epsilon = s.epsilon();
  p.rho.assign(s.mesh().cell_count(), r);
  p.r = p.rho;
  p.u = s.mesh().zero_faces();
  p.w = p.u;
  p.psi = p.u;
  p.w_tilde = p.u;
  p.eta.assign(p.u.size(), 1.0);
  p.r_min = p.r_max = r;
  return p;
}

FlowState bumpy(const NseSolver& s) {
  auto rho = sample_cells(s.grid().lattice, [](const Vec3& x) { return 1.0 + 0.2 * std::cos(2 * pi * x[0]) * std::sin(2 * pi * x[1]); });
  return s.initialize(rho, s.mesh().zero_faces());
}

const LimitTrajectory& bump_limit() {
  static LimitTrajectory t = testing_support::unit_limit(
      testing_support::disk_cell(16),
      [](const Vec3& x) { return 1.0 + 0.2 * std::cos(2 * pi * x[0]) * std::cos(2 * pi * x[1]); }, {0.0, 0.001, 0.002});
  return t;
}

double fluid_volume(const NseSolver& s) {
  return double(s.mesh().fluid_cell_count()) * s.mesh().lattice().cell_volume();
}

}  // namespace

TEST_CASE("relative energy vanishes on the pair itself") {
  auto solver = solver_at(0.125);
  auto p = build_correctors(testing_support::disk_cell(16), bump_limit(), solver.grid(), PressureLaw{2.0, 1.0}, 0.0);
  FlowState s;
  s.rho = p.r;
  s.u = p.w_tilde;
  CHECK(relative_energy(solver, s, p) == 0.0);
}

TEST_CASE("relative energy of a constant density offset") {
  auto solver = solver_at(0.125);
  auto p = build_correctors(testing_support::disk_cell(16), bump_limit(), solver.grid(), PressureLaw{2.0, 1.0}, 0.0);
  const double delta = 0.03;
  FlowState s;
  s.rho = p.r;
  for (auto& v : s.rho) v += delta;
  s.u = p.w_tilde;
  // gamma = 2: h(s|r) = (s - r)^2
  CHECK(relative_energy(solver, s, p) == doctest::Approx(delta * delta * fluid_volume(solver)).epsilon(1e-12));
}

TEST_CASE("relative energy of a velocity offset is kinetic") {
  auto solver = solver_at(0.125);
  const double r = 1.3;
  auto p = frozen_pair(solver, r);
  FlowState s;
  s.rho = p.r;
  s.u = solver.mesh().zero_faces();
  for (auto f : solver.mesh().open_faces()) s.u[f] = 0.5;
  const double open = double(solver.mesh().open_faces().size());
  const double expected = 0.5 * std::pow(0.125, 2.5) * r * 0.25 * open * solver.mesh().lattice().cell_volume();
  CHECK(relative_energy(solver, s, p) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("remainder collapses for w = 0 and constant r") {
  const Vec3 f{1.0, 0.5, 0.0};
  auto solver = solver_at(0.125, [=](const Vec3&, double) { return f; });
  auto s = bumpy(solver);
  for (int i = 0; i < 3; ++i) s = solver.step(s, 0.5 * solver.stable_dt(s));
  auto p = frozen_pair(solver, 1.0, s.t);
  auto R = remainder(solver, s, p, zero_rate(p));
  CHECK(R[0] == 0.0);
  CHECK(R[1] == 0.0);
  CHECK(R[3] == 0.0);
  CHECK(R[4] == 0.0);
  // R3 = int rho f . u with face densities
  const auto& mesh = solver.mesh();
  double work = 0.0;
  for (auto gi : mesh.open_faces()) {
    const double rf = 0.5 * (s.rho[mesh.face_lower_cell(gi)] + s.rho[mesh.face_upper_cell(gi)]);
    work += rf * f[mesh.face_axis(gi)] * s.u[gi];
  }
  CHECK(R[2] == doctest::Approx(work * mesh.lattice().cell_volume()).epsilon(1e-12));
}

TEST_CASE("remainder rejects an inadmissible comparison velocity") {
  auto solver = solver_at(0.25);
  auto p = frozen_pair(solver, 1.0);
  const auto& mesh = solver.mesh();
  for (std::size_t f = 0; f < mesh.face_dofs(); ++f)
    if (!mesh.open()[f]) {
      p.w_tilde[f] = 1e-3;
      break;
    }
  CHECK_THROWS_AS(remainder(solver, bumpy(solver), p, zero_rate(p)), DomainError);
}

TEST_CASE("dissipation is nonnegative") {
  auto solver = solver_at(0.25);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N;
  auto p = frozen_pair(solver, 1.0);
  for (int k = 0; k < 5; ++k) {
    FlowState s = bumpy(solver);
    for (auto f : solver.mesh().open_faces()) s.u[f] = N(rng);
    CHECK(relative_dissipation_rate(solver, s, p) >= 0.0);
  }
}

TEST_CASE("relative energy with w = 0 and r = mean reduces to the energy inequality") {
  auto solver = solver_at(0.125);
  auto s0 = bumpy(solver);
  const double rbar = solver.mass(s0.rho) / fluid_volume(solver);
  auto p = frozen_pair(solver, rbar);
  RelativeEnergyMonitor mon(solver);
  mon.start(s0, p);
  std::vector<double> nse_defect;
  const double E0 = s0.diag.kinetic + s0.diag.internal;
  NseDtPolicy pol;
  solve_nse(solver, s0, 0.005, pol, [&](const FlowState& a, const FlowState& b, double dt) {
    mon.advance(a, p, b, p, dt);
    nse_defect.push_back(bounds_row(solver, b, E0).energy_defect);
  });
  auto rep = mon.finish();
  REQUIRE(rep.defect.size() == nse_defect.size() + 1);
  double worst = 0.0;
  for (std::size_t i = 0; i < nse_defect.size(); ++i) worst = std::max(worst, std::abs(rep.defect[i + 1] - nse_defect[i]));
  CHECK(worst <= 1e-12 * E0);
}

TEST_CASE("well-prepared run satisfies the relative-energy inequality") {
  const auto& cell = testing_support::disk_cell(16);
  auto solver = solver_at(0.25);
  auto p0 = build_correctors(cell, bump_limit(), solver.grid(), PressureLaw{2.0, 1.0}, 0.0);
  FaceField m0 = solver.face_density(p0.r);
  for (std::size_t i = 0; i < m0.size(); ++i) m0[i] *= p0.w_tilde[i];
  auto s0 = solver.initialize(p0.r, m0);
  CHECK(relative_energy(solver, s0, p0) <= 1e-6);
  NseDtPolicy pol;
  auto rep = run_relen_check(solver, s0, 0.002, pol, cell, bump_limit());
  MESSAGE("relen constant " << rep.constant);
  CHECK(rep.pass);
  for (double E : rep.E) CHECK(E >= 0.0);
  for (double D : rep.dissipation) CHECK(D >= 0.0);
}

TEST_CASE("negative Sobolev norm") {
  auto lat = Lattice::make(2, {64, 64, 1}, 1.0 / 64, {0, 0, 0}, true);
  auto g = sample_cells(lat, [](const Vec3& x) { return std::sin(2 * pi * x[0]); });
  CHECK(norm_neg_sobolev_cells(lat, g) == doctest::Approx(std::sqrt(0.5) / std::sqrt(1.0 + 4.0 * pi * pi)).epsilon(1e-10));
  CHECK(norm_neg_sobolev_cells(lat, CellField(lat.cell_count(), -2.5)) == doctest::Approx(2.5).epsilon(1e-14));

  std::mt19937_64 rng(5);
  std::normal_distribution<double> N;
  for (int k = 0; k < 5; ++k) {
    CellField r(lat.cell_count());
    for (auto& v : r) v = N(rng);
    CHECK(norm_neg_sobolev_cells(lat, r) <= lattice_l2_norm(lat, r) * (1.0 + 1e-12));
  }

  // face fields: one block per component
  FaceField ff(lat.face_dofs(), 0.0);
  const auto off = lat.face_offsets();
  for (std::size_t i = 0; i < off[1]; ++i) ff[i] = 3.0;
  auto res = norm_neg_sobolev(lat, ff);
  CHECK_FALSE(res.approximate);
  CHECK(res.value == doctest::Approx(3.0));

  auto box = Lattice::make(2, {32, 32, 1}, 1.0 / 32, {0, 0, 0}, false);
  FaceField bf(box.face_dofs(), 1.0);
  auto rb = norm_neg_sobolev(box, bf);
  CHECK(rb.approximate);
  CHECK(rb.value == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(norm_neg_sobolev_cells(box, CellField(box.cell_count(), 1.0)), DomainError);
}

TEST_CASE("Poincare constant scales with eps") {
  auto ob = testing_support::disk();
  auto c4 = poincare_constant(build_perforated_grid(DomainKind::torus, {1, 1, 1}, 0.25, ob, 16));
  auto c8 = poincare_constant(build_perforated_grid(DomainKind::torus, {1, 1, 1}, 0.125, ob, 16));
  CHECK(c8.constant / c4.constant == doctest::Approx(0.5).epsilon(0.2));
  // one-cell torus against the annulus estimate: same order
  auto c2 = poincare_constant(build_perforated_grid(DomainKind::torus, {1, 1, 1}, 0.5, ob, 16));
  const double ann = annulus_poincare_estimate(0.5, 0.5);
  CHECK(c2.constant / ann >= 0.5);
  CHECK(c2.constant / ann <= 2.0);

  CHECK_THROWS_AS(poincare_constant(build_perforated_grid(DomainKind::torus, {1, 1, 1}, 0.25, ob, 16, false)), DomainError);
  auto nohole = poincare_constant(build_perforated_grid(DomainKind::box, {1, 1, 1}, 0.125, ob, 16, false));
  CHECK_FALSE(nohole.warning.empty());
  // first Dirichlet eigenvalue of the unit square is 2 pi^2
  CHECK(nohole.constant == doctest::Approx(1.0 / (pi * std::sqrt(2.0))).epsilon(0.01));
}

TEST_CASE("thickened trace constant") {
  auto g = build_perforated_grid(DomainKind::box, {1, 1, 1}, 0.125, testing_support::disk(), 16);
  auto rep = thickened_trace_constant(g, {0.125, 0.0625, 0.03125});
  CHECK(rep.bounded);
  // phi = 1 gives |collar| / delta, which tends to the perimeter 4
  for (const auto& r : rep.rows) CHECK(r.ratio >= 0.99 * (4.0 - 4.0 * r.delta));
  CHECK(rep.constant <= 4.0 + 1e-9);
  auto t = build_perforated_grid(DomainKind::torus, {1, 1, 1}, 0.125, testing_support::disk(), 16);
  CHECK_THROWS_AS(thickened_trace_constant(t, {0.1}), DomainError);
}

TEST_CASE("error functional") {
  auto solver = solver_at(0.25);
  std::vector<FlowState> traj;
  std::vector<CorrectorPair> pairs;
  for (int k = 0; k < 3; ++k) {
    FlowState s = bumpy(solver);
    s.t = 0.01 * k;
    for (auto f : solver.mesh().open_faces()) s.u[f] = 0.1 * k;
    CorrectorPair p = frozen_pair(solver, 1.0, s.t);
    p.rho = s.rho;
    p.u = s.u;
    p.w_tilde = s.u;
    traj.push_back(s);
    pairs.push_back(p);
  }
  auto zero = error_functional(solver, traj, pairs);
  CHECK(zero.density_error == 0.0);
  CHECK(zero.velocity_error == 0.0);
  CHECK(zero.corrector_velocity_error == 0.0);

  const double c = 0.1;
  for (auto& p : pairs)
    for (auto& v : p.rho) v -= c;
  auto off = error_functional(solver, traj, pairs);
  CHECK(off.density_error == doctest::Approx(c * c * fluid_volume(solver)).epsilon(1e-12));

  pairs[1].t += 1e-3;
  CHECK_THROWS_AS(error_functional(solver, traj, pairs), ConfigError);
}

TEST_CASE("theoretical rates") {
  auto a = theoretical_rate(3.0, 2.0, DomainKind::torus);
  CHECK(a.lambda0 == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(a.beta == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(a.boundary);
  CHECK_FALSE(a.within_hypotheses);

  auto b = theoretical_rate(2.0, 2.5, DomainKind::torus);
  CHECK(b.lambda0 == doctest::Approx(13.0 / 6.0).epsilon(1e-15));
  CHECK(b.beta == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(b.within_hypotheses);
  CHECK(b.extra_initial_condition);

  auto c = theoretical_rate(2.0, 2.0, DomainKind::box);
  CHECK(c.lambda0 == doctest::Approx(13.0 / 6.0).epsilon(1e-15));
  CHECK(c.beta == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_FALSE(c.within_hypotheses);

  // both branches give lambda0 = 2 at gamma = 3
  CHECK(theoretical_rate(3.0 - 1e-12, 3.0, DomainKind::torus).lambda0 == doctest::Approx(2.0).epsilon(1e-10));
  CHECK_FALSE(theoretical_rate(1.4, 4.0, DomainKind::torus).within_hypotheses);
}

TEST_CASE("rate fit") {
  std::vector<std::pair<double, double>> syn;
  for (double e : {0.25, 0.125, 0.0625}) syn.push_back({e, 3.0 * std::pow(e, 0.7)});
  auto rep = fit_rate(syn, 2.0, 2.5, DomainKind::torus);
  CHECK(std::abs(rep.beta_emp - 0.7) <= 1e-10);
  CHECK(rep.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-10));
  CHECK(rep.r_squared == doctest::Approx(1.0));
  CHECK(rep.monotone);
  CHECK(rep.theory.beta == 1.0);

  syn[2].second = 10.0;
  CHECK_FALSE(fit_rate(syn).monotone);
  CHECK_THROWS_AS(fit_rate({{0.25, 1.0}, {0.125, 0.5}}), ConfigError);
  CHECK_THROWS_AS(fit_rate({{0.25, 1.0}, {0.125, 0.0}, {0.1, 1.0}}), ConfigError);
}

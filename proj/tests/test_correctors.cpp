#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "homlab/errors.hpp"
#include "support.hpp"

using namespace homlab;
using testing_support::pi;

namespace {

const CellSolution& cell() { return testing_support::disk_cell(16); }

PerforatedGrid grid(DomainKind kind, double eps) {
  return build_perforated_grid(kind, {1, 1, 1}, eps, testing_support::disk(), 16);
}

// rho = 1 and a uniform force: the limit stays at rho = 1 with u = K f
const LimitTrajectory& uniform_flow() {
  static LimitTrajectory t = testing_support::unit_limit(
      cell(), [](const Vec3&) { return 1.0; }, {0.0, 0.001}, true,
      [](const Vec3&, double) { return Vec3{1.0, 0.5, 0.0}; });
  return t;
}

const LimitTrajectory& bump(bool periodic) {
  static LimitTrajectory tp = testing_support::unit_limit(
      cell(), [](const Vec3& x) { return 1.0 + 0.2 * std::cos(2 * pi * x[0]) * std::cos(2 * pi * x[1]); },
      {0.0, 0.001, 0.002}, true);
  static LimitTrajectory tb = testing_support::unit_limit(
      cell(), [](const Vec3& x) { return 1.0 + 0.2 * std::cos(2 * pi * x[0]) * std::cos(2 * pi * x[1]); },
      {0.0, 0.001, 0.002}, false);
  return periodic ? tp : tb;
}

}  // namespace

TEST_CASE("cutoff") {
  CHECK(cutoff(0.0, 0.3) == 0.0);
  CHECK(cutoff(0.3, 0.3) == 1.0);
  CHECK(cutoff(5.0, 0.3) == 1.0);
  CHECK(cutoff(0.15, 0.3) == doctest::Approx(0.5));
}

TEST_CASE("zero limit velocity collapses the correctors") {
  auto lim = testing_support::unit_limit(cell(), [](const Vec3&) { return 1.25; }, {0.0, 0.001});
  for (auto kind : {DomainKind::torus, DomainKind::box}) {
    auto g = grid(kind, 0.125);
    auto p = build_correctors(cell(), lim, g, PressureLaw{2.0, 1.0}, 0.0);
    for (std::size_t c = 0; c < p.r.size(); ++c) CHECK(p.r[c] == p.rho[c]);
    for (double v : p.w) CHECK(v == 0.0);
    for (double v : p.w_tilde) CHECK(v == 0.0);
  }
}

TEST_CASE("density corrector for rho = 1 and gamma = 2") {
  const auto& c = cell();
  const Eigen::Vector2d ku = c.K.inverse() * (c.K * Eigen::Vector2d(1.0, 0.5));  // K^{-1} u with u = K f
  std::vector<double> ratio;
  for (double eps : {0.25, 0.125, 0.0625}) {
    auto g = grid(DomainKind::torus, eps);
    auto p = build_correctors(c, uniform_flow(), g, PressureLaw{2.0, 1.0}, 0.0);
    double worst = 0.0, dev = 0.0;
    for (std::size_t k = 0; k < p.r.size(); ++k) {
      if (!g.fluid[k]) continue;
      const std::size_t lc = g.local_cell[k];
      const double exact = std::sqrt(1.0 + eps * (c.q[0][lc] * ku[0] + c.q[1][lc] * ku[1]));
      worst = std::max(worst, std::abs(p.r[k] - exact));
      dev = std::max(dev, std::abs(p.r[k] - 1.0));
    }
    CHECK(worst <= 1e-10);
    ratio.push_back(dev / eps);
  }
  // ||r - 1||_inf <= C eps with a stable constant
  CHECK(ratio[1] / ratio[0] == doctest::Approx(1.0).epsilon(0.5));
  CHECK(ratio[2] / ratio[1] == doctest::Approx(1.0).epsilon(0.5));
}

TEST_CASE("velocity corrector is W K^{-1} u with cell means equal to u") {
  const auto& c = cell();
  auto g = grid(DomainKind::torus, 0.125);
  auto p = build_correctors(c, uniform_flow(), g, PressureLaw{2.0, 1.0}, 0.0);
  const auto mesh = g.mesh();
  for (std::size_t f = 0; f < mesh.face_dofs(); ++f)
    if (!mesh.open()[f]) CHECK(p.w[f] == 0.0);
  // torus: no boundary corrector
  CHECK(p.w_tilde == p.w);
  for (double v : p.psi) CHECK(v == 0.0);

  // the mean of W K^{-1} over each eps-cell is the identity, so the block means of w reproduce u = K f
  const Eigen::Vector2d u = c.K * Eigen::Vector2d(1.0, 0.5);
  const auto& lat = g.lattice;
  const auto off = lat.face_offsets();
  for (int a = 0; a < 2; ++a) {
    std::vector<double> sum(g.hole_count(), 0.0);
    for (std::size_t i = 0; i < off[a + 1] - off[a]; ++i) {
      const Index3 I = lat.face_coords(a, i);
      sum[(I[1] / 16) * g.cells_per_axis[0] + I[0] / 16] += p.w[off[a] + i];
    }
    for (double s : sum) CHECK(s / 256.0 == doctest::Approx(u[a]).epsilon(1e-11));
  }
}

TEST_CASE("epsilon too large is reported") {
  // a strong force makes p(rho) + eps q . K^{-1} u negative at eps = 1/2
  auto lim = testing_support::unit_limit(cell(), [](const Vec3&) { return 0.2; }, {0.0, 1e-5}, true,
                                         [](const Vec3&, double) { return Vec3{400.0, 0.0, 0.0}; });
  CHECK_THROWS_AS(build_correctors(cell(), lim, grid(DomainKind::torus, 0.5), PressureLaw{2.0, 1.0}, 0.0), DomainError);
}

TEST_CASE("boundary corrector") {
  const auto& c = cell();
  const double dcut = c.cell.obstacle.cell_distance;
  std::vector<double> l2, divmax;
  for (double eps : {0.25, 0.125, 0.0625}) {
    auto g = grid(DomainKind::box, eps);
    auto p = build_correctors(c, bump(false), g, PressureLaw{2.0, 1.0}, 0.0);
    const auto mesh = g.mesh();
    for (std::size_t f = 0; f < mesh.face_dofs(); ++f) {
      const bool wall = mesh.face_lower_cell(f) < 0 || mesh.face_upper_cell(f) < 0;
      if (wall || !mesh.open()[f]) CHECK(p.w_tilde[f] == 0.0);
      // outside the collar the corrector vanishes bit-exactly
      if (g.distance_to_boundary(mesh.face_position(f)) >= eps * dcut + 2 * g.lattice.h && mesh.open()[f])
        CHECK(p.psi[f] == 0.0);
    }
    l2.push_back(std::sqrt(mesh.face_inner(p.psi, p.psi)));
    CellField dv(mesh.cell_count());
    mesh.divergence(p.psi, dv);
    double m = 0.0;
    for (std::size_t k = 0; k < dv.size(); ++k)
      if (g.fluid[k]) m = std::max(m, std::abs(dv[k]));
    divmax.push_back(m);
  }
  MESSAGE("psi L2: " << l2[0] << " " << l2[1] << " " << l2[2]);
  for (int i = 0; i < 2; ++i) {
    CHECK(l2[i + 1] / l2[i] == doctest::Approx(std::sqrt(0.5)).epsilon(0.25));
    CHECK(divmax[i + 1] / divmax[i] <= 2.0);
  }
}

TEST_CASE("boundary corrector rebuild is idempotent") {
  auto g = grid(DomainKind::box, 0.125);
  auto p = build_correctors(cell(), bump(false), g, PressureLaw{2.0, 1.0}, 0.0);
  auto q = p;
  build_boundary_corrector(cell(), bump(false), g, q);
  CHECK(q.w_tilde == p.w_tilde);
  CHECK(q.psi == p.psi);
}

TEST_CASE("corrector bounds across an eps sweep") {
  for (auto kind : {DomainKind::torus, DomainKind::box}) {
    auto rep = verify_corrector_bounds(cell(), bump(kind == DomainKind::torus), PressureLaw{2.0, 1.0}, kind, {1, 1, 1},
                                       {0.25, 0.125, 0.0625}, 0.0);
    CHECK(rep.rows.size() == 3);
    CHECK(rep.bounded);
    CHECK(rep.worst_ratio <= 2.0);
    for (const auto& r : rep.rows) {
      CHECK(r.r_min > 0.0);
      CHECK(r.duality > 0.0);
    }
  }
  CHECK_THROWS_AS(verify_corrector_bounds(cell(), bump(true), PressureLaw{}, DomainKind::torus, {1, 1, 1}, {0.25, 0.125}, 0.0),
                  ConfigError);
}

TEST_CASE("zero limit velocity gives zero corrector defects") {
  auto lim = testing_support::unit_limit(cell(), [](const Vec3&) { return 1.0; }, {0.0, 0.001});
  auto rep = verify_corrector_bounds(cell(), lim, PressureLaw{2.0, 1.0}, DomainKind::torus, {1, 1, 1},
                                     {0.25, 0.125, 0.0625}, 0.0);
  for (const auto& r : rep.rows) {
    CHECK(r.r_minus_rho == 0.0);
    CHECK(r.eps_grad_w == 0.0);
    CHECK(r.div_w == 0.0);
  }
}

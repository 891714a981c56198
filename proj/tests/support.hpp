#pragma once

#include <cmath>
#include <map>
#include <numbers>

#include "homlab/analysis.hpp"

namespace testing_support {

using namespace homlab;

constexpr double pi = std::numbers::pi;

/// Periodic 2D cell solution for the disk r0 = 0.5, with its vector potential, cached per resolution.
inline const CellSolution& disk_cell(int n) {
  static std::map<int, CellSolution> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    auto ob = make_obstacle({ObstacleShape::ball, 0.5}, 2);
    CellSolution sol = solve_cell(build_reference_cell(ob, 2, n));
    solve_vector_potential(sol);
    it = cache.emplace(n, std::move(sol)).first;
  }
  return it->second;
}

inline Obstacle disk() { return make_obstacle({ObstacleShape::ball, 0.5}, 2); }

/// Limit trajectory on the unit square with the cell's K and theta.
inline LimitTrajectory unit_limit(const CellSolution& cell, const ScalarFn& rho0, const std::vector<double>& times,
                                  bool periodic = true, ForceFn force = {}, int n = 64) {
  LimitProblem pb{Lattice::make(2, {n, n, 1}, 1.0 / n, {0, 0, 0}, periodic), cell.K, cell.theta(),
                  PressureLaw{2.0, 1.0}, std::move(force)};
  return solve_limit(pb, sample_cells(pb.lattice, rho0), times);
}

/// Barenblatt profile of rho_t = D Delta rho^3 in 2D: tau = D t,
/// B = tau^{-1/3} (C - |x|^2 tau^{-1/3} / 18)_+^{1/2}.
inline double barenblatt(double tau, double C, const Vec3& x) {
  const double r2 = x[0] * x[0] + x[1] * x[1];
  const double s = std::cbrt(tau);
  const double inner = C - r2 / (18.0 * s);
  return inner > 0.0 ? std::sqrt(inner) / s : 0.0;
}

struct BarenblattResult {
  double l1_error = 0.0;  // relative to ||B||_1
  double mass_drift = 0.0;
  long steps = 0;
};

/// Limit solve with gamma = 2, K = k Id, f = 0 from B(tau0) + floor on the bounded
/// square [-1, 1]^2 with n^2 cells; compares rho - floor with B at tau1.
inline BarenblattResult barenblatt_run(int n, double floor = 1e-4) {
  const double k = 1.0, theta = 0.8, C = 0.01, tau0 = 1.0, tau1 = 4.0;
  const double D = 2.0 * k / (3.0 * theta);
  LimitProblem pb{Lattice::make(2, {n, n, 1}, 2.0 / n, {-1, -1, 0}, false), Eigen::MatrixXd::Identity(2, 2) * k,
                  theta, PressureLaw{2.0, 1.0}, {}};
  auto rho0 = sample_cells(pb.lattice, [&](const Vec3& x) { return barenblatt(tau0, C, x) + floor; });
  const double T = (tau1 - tau0) / D;
  auto traj = solve_limit(pb, rho0, {0.0, T});
  const auto& rho = traj.states().back().rho;
  double err = 0.0, norm = 0.0;
  for (std::size_t c = 0; c < rho.size(); ++c) {
    const double b = barenblatt(tau1, C, pb.lattice.cell_center(pb.lattice.cell_coords(c)));
    err += std::abs(rho[c] - floor - b);
    norm += b;
  }
  BarenblattResult r;
  r.l1_error = err / norm;
  r.mass_drift = std::abs(limit_mass(pb, rho) - limit_mass(pb, rho0)) / limit_mass(pb, rho0);
  r.steps = traj.steps();
  return r;
}

}  // namespace testing_support

#pragma once

#include <vector>

#include "homlab/cell_problem.hpp"
#include "homlab/limit_solver.hpp"

namespace homlab {

/// Comparison pair built from a limit solution and the cell solution on a perforated grid.
struct CorrectorPair {
  double t = 0.0;
  double epsilon = 0.0;
  CellField rho;      // limit density at cell centres
  FaceField u;        // limit velocity at faces
  CellField r;        // p^{-1}(p(rho) + eps q(x/eps) . K^{-1} u)
  FaceField w;        // W(x/eps) K^{-1} u
  FaceField psi;      // w_tilde - w (zero on the torus)
  FaceField w_tilde;  // boundary-corrected velocity, zero on every closed face
  FaceField eta;      // cutoff at faces (1 on the torus)
  double r_min = 0.0, r_max = 0.0;
  std::size_t zeroed_faces = 0;  // closed faces inside the collar forced to zero
};

/// Smoothstep cutoff: 3 s^2 - 2 s^3 with s = t / d clamped to [0, 1].
double cutoff(double t, double d);

/// Builds (r_eps, w_eps) at time t, and the boundary corrector when the grid is a box.
/// The grid resolution per cell must equal the cell-problem resolution.
CorrectorPair build_correctors(const CellSolution& cell, const LimitTrajectory& limit, const PerforatedGrid& grid,
                               const PressureLaw& law, double t);

/// Recomputes psi, w_tilde and eta of `pair`:
/// w_tilde = eps curl(eta_eps Phi(x/eps)) K^{-1} u + eta_eps u with eta_eps = cutoff(dist(x, boundary)/eps, d).
/// Requires solve_vector_potential. On the torus psi = 0.
void build_boundary_corrector(const CellSolution& cell, const LimitTrajectory& limit, const PerforatedGrid& grid,
                              CorrectorPair& pair);

struct CorrectorBoundsRow {
  double epsilon = 0.0;
  double r_minus_rho = 0.0;     // ||r - rho||_inf / eps
  double r_minus_rho_t = 0.0;   // ||d_t (r - rho)||_inf / eps
  double eps_grad_w = 0.0;      // eps ||grad w||_inf
  double div_w = 0.0;           // ||div w||_inf over fluid cells
  double duality = 0.0;         // max over the dictionary of |int (I/theta - W^eps) : Psi| / (eps ||Psi||_{W^{1,1}})
  double r_min = 0.0;
  double r_max = 0.0;
};

struct CorrectorBoundsReport {
  std::vector<CorrectorBoundsRow> rows;
  /// Largest ratio between consecutive rows of each bounded quantity (max over quantities of max(q1/q2, q2/q1)).
  double worst_ratio = 0.0;
  bool bounded = false;
};

/// Lemma-4.1 style constants across an epsilon sweep (same n_per_cell, torus or box of the limit lattice size).
CorrectorBoundsReport verify_corrector_bounds(const CellSolution& cell, const LimitTrajectory& limit,
                                              const PressureLaw& law, DomainKind kind, Vec3 length,
                                              const std::vector<double>& eps_sweep, double t,
                                              double ratio_window = 2.0);

}  // namespace homlab

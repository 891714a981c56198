#pragma once

#include <Eigen/Dense>
#include <vector>

#include "homlab/geometry.hpp"

namespace homlab {

struct CellSolveOptions {
  double div_tol = 1e-11;       // max |div w_i| over fluid cells
  double momentum_tol = 1e-9;   // max momentum residual over open faces
  int max_iter = 40000;
  double shift = 1.0;           // shift of the FFT preconditioner (-Delta_h + shift)^{-1}
  int jobs = 1;                 // forcing directions solved concurrently
};

/// Periodic Stokes cell problem on Q \ O: -Delta w_i + grad q_i = e_i, div w_i = 0,
/// w_i = 0 on the obstacle. Velocities live on the faces of the reference lattice.
struct CellSolution {
  CellGrid cell;
  std::vector<FaceField> W;  // W[i] = w_i
  std::vector<CellField> q;  // zero mean over fluid cells
  Eigen::MatrixXd K;         // K_ij = mean over Q of (w_j)_i
  Eigen::MatrixXd K_energy;  // (1/|Q|) a(w_i, w_j)
  /// Vector potential of W - K, empty until solve_vector_potential. 2D: Phi[j] is a
  /// node field (stream function); 3D: Phi[j] holds three edge-component blocks.
  std::vector<std::vector<double>> Phi;
  std::vector<int> iterations;
  double max_div_residual = 0.0;
  double max_momentum_residual = 0.0;

  int dim() const { return cell.dim; }
  double theta() const { return cell.theta_h; }
};

CellSolution solve_cell(const CellGrid& cell, const CellSolveOptions& opt = {});

struct PermeabilityReport {
  Eigen::MatrixXd K;
  Eigen::MatrixXd K_energy;
  double symmetry_defect = 0.0;       // ||K - K^T|| / ||K||
  double energy_symmetry_defect = 0.0;
  double energy_discrepancy = 0.0;    // ||K - K_energy|| / ||K||
  double isotropy_defect = 0.0;       // ||K - (tr K / d) Id|| / (tr K / d)
  Eigen::VectorXd eigenvalues;
};

PermeabilityReport permeability(const CellSolution& sol);

struct AverageIdentityReport {
  /// || (1/(theta_h n^d)) sum_fluid W K^{-1} - theta_h^{-1} Id ||, W averaged to cell centres.
  double discrete_defect = 0.0;
  /// Same average compared with the exact porosity: || ... - theta^{-1} Id ||.
  double analytic_defect = 0.0;
};

AverageIdentityReport check_cell_average_identity(const CellSolution& sol);

/// Computes Phi with curl_h Phi_j = w_j - K e_j via periodic FFT Poisson solves and
/// returns max |curl_h Phi_j - (w_j - K e_j)| over all faces.
double solve_vector_potential(CellSolution& sol);

/// Discrete curl on a periodic lattice. 2D: node scalar -> faces (u_x = d_y phi, u_y = -d_x phi).
/// 3D: edge field (three blocks, edge c at node + h/2 e_c) -> face field.
std::vector<double> curl_to_faces(const Lattice& lat, const std::vector<double>& phi);
/// Adjoint direction. 2D: faces -> node vorticity d_x u_y - d_y u_x. 3D: faces -> edges.
std::vector<double> curl_from_faces(const Lattice& lat, const std::vector<double>& u);

/// Dilute-limit drag prediction |Q| / (6 pi r0) (1 - 1.7601 c^{1/3}) for a ball in 3D.
double dilute_permeability(double radius);

}  // namespace homlab

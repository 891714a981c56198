#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "homlab/fields.hpp"
#include "homlab/geometry.hpp"
#include "homlab/pressure_law.hpp"
#include "homlab/staggered_mesh.hpp"

namespace homlab {

struct NseParams {
  double lambda = 2.5;
  double eta_bulk = 0.0;  // bulk viscosity; shear viscosity mu = 1
  PressureLaw law;
  ForceFn force;          // empty means f = 0
  double solver_tol = 1e-11;
  int solver_max_iter = 5000;
};

/// Accumulated energy bookkeeping along a run.
struct FlowDiagnostics {
  double kinetic = 0.0;      // eps^lambda/2 sum rho_f |u|^2
  double internal = 0.0;     // sum H(rho)
  double dissipation = 0.0;  // int_0^t eps^2 a(u, u)
  double force_work = 0.0;   // int_0^t sum rho f . u
  double mass = 0.0;
  int last_iterations = 0;
};

struct FlowState {
  double t = 0.0;
  CellField rho;  // 0 on solid cells
  FaceField u;    // 0 on closed faces
  FlowDiagnostics diag;
};

/// Scaled compressible Navier-Stokes on a perforated grid:
/// d_t rho + div(rho u) = 0,
/// eps^lambda (d_t(rho u) + div(rho u x u)) - eps^2 div S(grad u) + grad p(rho) = rho f.
/// Mass uses upwind fluxes; momentum lives on dual cells around faces with face
/// densities (rho_L + rho_R)/2 and dual fluxes averaged from the primal ones, so the
/// dual mass balance holds exactly. Viscosity is implicit, convection and pressure explicit.
class NseSolver {
 public:
  NseSolver(const PerforatedGrid& grid, NseParams params);

  const PerforatedGrid& grid() const { return grid_; }
  const StaggeredMesh& mesh() const { return mesh_; }
  const NseParams& params() const { return params_; }
  double epsilon() const { return grid_.epsilon; }

  /// State from a density and a face momentum; momentum on closed faces is dropped (no-slip).
  FlowState initialize(const CellField& rho0, const FaceField& m0) const;

  /// Acoustic restriction 0.5 h eps^{lambda/2} / max sqrt(p'(rho)) combined with 0.5 h / max|u|.
  double stable_dt(const FlowState& s) const;

  /// One step; throws StepRejected on negative density, SolverError when the viscous solve fails.
  FlowState step(const FlowState& s, double dt) const;

  /// a(u, v) = sum grad u : grad v + (1/3 + eta) sum div u div v (integrated).
  double viscous_form(std::span<const double> u, std::span<const double> v) const;
  double kinetic_energy(const CellField& rho, const FaceField& u) const;
  double internal_energy(const CellField& rho) const;
  double mass(const CellField& rho) const;
  /// Face densities (rho_L + rho_R)/2 on open faces, 0 elsewhere.
  FaceField face_density(const CellField& rho) const;

 private:
  PerforatedGrid grid_;
  StaggeredMesh mesh_;
  NseParams params_;
};

FlowState initialize_flow(const NseSolver& solver, const CellField& rho0, const FaceField& m0);
FlowState step_nse(const NseSolver& solver, const FlowState& s, double dt);

/// One row of the a priori bound monitor.
struct BoundsRow {
  double t = 0.0;
  double kinetic_l1 = 0.0;  // eps^lambda || rho |u|^2 ||_1
  double u_l2_sq = 0.0;     // ||u||_2^2
  double grad_l2_sq = 0.0;  // eps^2 ||grad u||_2^2
  double rho_gamma = 0.0;   // ||rho||_gamma^gamma
  double poincare_ratio = 0.0;  // ||u||_2 / (eps ||grad u||_2)
  double energy = 0.0;
  double energy_defect = 0.0;   // E(t) + dissipation - E(0) - force work
  double mass = 0.0;
};

struct NseDtPolicy {
  double cfl = 0.5;                  // fraction of stable_dt, re-evaluated every step
  std::optional<double> fixed_dt;    // constant step (rejected if unstable)
  double output_interval = 0.0;      // sampling interval for returned states (0: only final)
};

struct NseRun {
  std::vector<FlowState> samples;  // initial state, every output_interval, final state
  std::vector<BoundsRow> monitor;  // one row per step
  long steps = 0;
  double max_energy_defect = 0.0;
  double max_dt = 0.0;
};

/// Per-step hook (previous state, new state, dt).
using NseObserver = std::function<void(const FlowState&, const FlowState&, double)>;

NseRun solve_nse(const NseSolver& solver, const FlowState& initial, double T, const NseDtPolicy& policy,
                 const NseObserver& observer = {});

BoundsRow bounds_row(const NseSolver& solver, const FlowState& s, double energy0);

}  // namespace homlab

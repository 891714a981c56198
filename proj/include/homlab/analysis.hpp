#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "homlab/correctors.hpp"
#include "homlab/nse_solver.hpp"

namespace homlab {

/// Relative energy E(rho_eps, u_eps | r, w) of a flow state against the comparison pair.
/// The comparison velocity is pair.w_tilde (equal to w on the torus). The kinetic part
/// uses face densities, matching the kinetic energy of the NSE scheme.
double relative_energy(const NseSolver& solver, const FlowState& s, const CorrectorPair& pair);

/// Time derivatives of the comparison pair over one interval.
struct PairRate {
  FaceField w_t;   // d_t w_tilde
  CellField Hr_t;  // d_t H'(r)
};

PairRate pair_rate(const PressureLaw& law, const CorrectorPair& p0, const CorrectorPair& p1, double dt);
/// Zero rates (a frozen comparison pair).
PairRate zero_rate(const CorrectorPair& p);

/// R^1 .. R^5 of the relative-energy remainder, in order:
/// inertia, viscous cross term, force, pressure-potential transport, div w (p(rho) - p(r)).
using RemainderTerms = std::array<double, 5>;

/// Midpoint quadrature of the five remainder integrals at the time of `s`. The force is
/// taken from the solver parameters. Throws DomainError when w_tilde is not zero on
/// every closed face (the comparison velocity must satisfy no-slip).
RemainderTerms remainder(const NseSolver& solver, const FlowState& s, const CorrectorPair& pair,
                         const PairRate& rate);

/// eps^2 a(u - w, u - w): integrand of the dissipation in the relative-energy inequality.
double relative_dissipation_rate(const NseSolver& solver, const FlowState& s, const CorrectorPair& pair);

struct EnergyReport {
  std::vector<double> times;
  std::vector<double> E;
  std::vector<double> dissipation;        // int_0^t eps^2 a(u - w, u - w)
  std::vector<RemainderTerms> remainder;  // int_0^t R^i, per term
  std::vector<double> defect;             // E(t) + dissipation - E(0) - int_0^t R
  double h = 0.0;
  double max_dt = 0.0;
  double max_defect = 0.0;      // max over t of defect (positive part)
  double max_abs_defect = 0.0;
  double constant = 0.0;        // max_defect / (h + max_dt)
  double tolerance_constant = 1.0;
  bool pass = false;
};

/// Streaming evaluation of the relative-energy inequality along a run: call start()
/// with the initial state and pair, then advance() after every step.
class RelativeEnergyMonitor {
 public:
  RelativeEnergyMonitor(const NseSolver& solver, double tolerance_constant = 1.0);
  void start(const FlowState& s, const CorrectorPair& pair);
  void advance(const FlowState& prev, const CorrectorPair& prev_pair, const FlowState& next,
               const CorrectorPair& next_pair, double dt);
  const EnergyReport& report() const { return rep_; }
  EnergyReport finish();

 private:
  const NseSolver* solver_;
  EnergyReport rep_;
  double E0_ = 0.0;
  double diss_ = 0.0;
  RemainderTerms rint_{};
};

/// Defect series of the inequality for a stored trajectory with one pair per state.
EnergyReport check_relen_inequality(const NseSolver& solver, const std::vector<FlowState>& traj,
                                    const std::vector<CorrectorPair>& pairs, double tolerance_constant = 1.0);

/// Runs the NSE from `initial` to T and checks the inequality against the correctors of
/// `limit` rebuilt at every step.
EnergyReport run_relen_check(const NseSolver& solver, const FlowState& initial, double T, const NseDtPolicy& policy,
                             const CellSolution& cell, const LimitTrajectory& limit,
                             double tolerance_constant = 1.0);

struct NegSobolevResult {
  double value = 0.0;
  bool approximate = false;  // box mode: even reflection of the field
};

/// ||(1 - Delta)^{-1/2} g||_{L^2} of a face vector field, summed over components.
/// Torus: exact multiplier norm of each face block. Box: face values averaged to cell
/// centres, evenly reflected into a periodic lattice of twice the size, flagged approximate.
NegSobolevResult norm_neg_sobolev(const Lattice& lat, const FaceField& g);
/// Scalar cell field on a periodic lattice; throws DomainError on a bounded lattice.
double norm_neg_sobolev_cells(const Lattice& lat, const CellField& g);

struct PoincareReport {
  double lambda_min = 0.0;
  double constant = 0.0;  // 1 / sqrt(lambda_min)
  int iterations = 0;
  bool has_holes = true;
  std::string warning;
};

/// Smallest eigenvalue of the masked vector Laplacian of the MAC mesh (zero on closed
/// faces) by inverse power iteration to `tol` relative change of the Rayleigh quotient.
PoincareReport poincare_constant(const PerforatedGrid& grid, double tol = 1e-8, int max_iter = 500);

/// 1 / k for the first eigenvalue k^2 of -Delta on the annulus a < |x| < b with u(a) = 0,
/// du/dr(b) = 0, where pi b^2 equals the cell area (2 eps)^2 and a = eps r0 (2D).
double annulus_poincare_estimate(double epsilon, double r0);

struct TraceRow {
  double delta = 0.0;
  double ratio = 0.0;  // max over the dictionary of ||phi||_{L^1(collar)} / (delta ||phi||_{W^{1,1}})
};

struct TraceReport {
  std::vector<TraceRow> rows;
  double constant = 0.0;  // max ratio over the sweep
  bool bounded = false;   // consecutive ratios within [0.5, 2]
};

/// Thickened-trace constant on the box of the grid over collars of width delta, with
/// midpoint quadrature on the grid lattice. Throws DomainError on the torus.
TraceReport thickened_trace_constant(const PerforatedGrid& grid, const std::vector<double>& delta_sweep);

struct ErrorFunctional {
  double density_error = 0.0;             // max_t ||rho_eps - rho||^2_{L^2(Omega_eps)}
  double velocity_error = 0.0;            // int ||u_eps - u||^2_{W^{-1,2}} dt
  double corrector_velocity_error = 0.0;  // int ||u_eps - w_eps||^2_{L^2(Omega_eps)} dt
  bool approximate = false;
  double total() const { return density_error + velocity_error; }
};

/// Error norms of the convergence estimate; time integrals by the trapezoidal rule over
/// the samples. Throws ConfigError when the sample times of traj and pairs differ.
ErrorFunctional error_functional(const NseSolver& solver, const std::vector<FlowState>& traj,
                                 const std::vector<CorrectorPair>& pairs);

struct TheoreticalRate {
  double lambda0 = 0.0;
  double beta = 0.0;
  bool within_hypotheses = false;  // gamma >= 2 and lambda > lambda0
  bool boundary = false;           // lambda == lambda0
  bool extra_initial_condition = false;  // 2 <= gamma < 3 needs the additional smallness of the initial data
};

TheoreticalRate theoretical_rate(double gamma, double lambda, DomainKind kind);

struct RateReport {
  std::vector<std::pair<double, double>> pairs;
  double beta_emp = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  TheoreticalRate theory;
  bool monotone = false;  // error decreases with epsilon
};

/// Least-squares slope of log(error) against log(eps). Needs three distinct eps and positive errors.
RateReport fit_rate(std::vector<std::pair<double, double>> pairs);
RateReport fit_rate(std::vector<std::pair<double, double>> pairs, double gamma, double lambda, DomainKind kind);

}  // namespace homlab

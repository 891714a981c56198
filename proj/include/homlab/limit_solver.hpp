#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "homlab/fields.hpp"
#include "homlab/pressure_law.hpp"

namespace homlab {

/// Darcy / porous-medium limit system on a periodic or bounded lattice:
/// theta d_t rho + div(rho u) = 0, u = K (rho f - grad p(rho)).
struct LimitProblem {
  Lattice lattice;
  Eigen::MatrixXd K;
  double theta = 1.0;
  PressureLaw law;
  ForceFn force;  // empty means f = 0
};

struct LimitState {
  double t = 0.0;
  CellField rho;
  FaceField u;
};

/// Face Darcy velocity u = K (rho f - grad p(rho)); wall faces of a bounded lattice are 0.
FaceField darcy_velocity(const LimitProblem& pb, const CellField& rho, double t);

/// Largest explicit step for which the update is monotone (diffusive and upwind parts combined).
double limit_stable_dt(const LimitProblem& pb, const CellField& rho, double t);

/// One explicit finite-volume step; throws StepRejected when dt exceeds limit_stable_dt
/// or the density would become negative.
LimitState step_limit(const LimitProblem& pb, const LimitState& s, double dt);

double limit_mass(const LimitProblem& pb, const CellField& rho);

struct LimitDtPolicy {
  double cfl = 0.9;  // fraction of limit_stable_dt
  double dt_max = std::numeric_limits<double>::infinity();
};

/// Snapshots of a limit solve at the requested output times, with space-time sampling.
class LimitTrajectory {
 public:
  LimitTrajectory() = default;
  LimitTrajectory(LimitProblem pb, std::vector<LimitState> states, long steps)
      : pb_(std::move(pb)), states_(std::move(states)), steps_(steps) {}

  const LimitProblem& problem() const { return pb_; }
  const std::vector<LimitState>& states() const { return states_; }
  long steps() const { return steps_; }
  double final_time() const { return states_.back().t; }

  double rho(const Vec3& x, double t) const;
  Vec3 u(const Vec3& x, double t) const;
  /// Time derivatives by differencing the two snapshots enclosing t.
  double rho_t(const Vec3& x, double t) const;
  Vec3 u_t(const Vec3& x, double t) const;

 private:
  std::size_t bracket(double t, double& w) const;
  LimitProblem pb_;
  std::vector<LimitState> states_;
  long steps_ = 0;
};

/// Integrates from rho0 to the last entry of output_times (sorted, >= 0); one snapshot per entry.
LimitTrajectory solve_limit(const LimitProblem& pb, const CellField& rho0, const std::vector<double>& output_times,
                            const LimitDtPolicy& policy = {});

}  // namespace homlab

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "homlab/geometry.hpp"
#include "homlab/pressure_law.hpp"

namespace homlab {

enum class ExperimentKind { cell, limit, nse, rate, check };

ExperimentKind parse_experiment_kind(const std::string& s);
std::string to_string(ExperimentKind k);

struct GeometryConfig {
  DomainKind domain = DomainKind::torus;
  int dimension = 3;
  ObstacleSpec obstacle;
  Vec3 length{1.0, 1.0, 1.0};
  std::vector<double> epsilon;  // strictly decreasing
  int n_per_cell = 64;          // cell-problem resolution, also used per epsilon-cell
  int limit_resolution = 64;    // limit lattice cells per unit length
};

/// Which initial data the NSE starts from.
enum class InitialData {
  corrector,  // rho = r_eps(0), u = w_eps(0)
  limit,      // rho = rho_0, u = w_eps(0)
};

struct PhysicsConfig {
  PressureLaw law;
  double lambda = 2.5;
  double eta_bulk = 0.0;
  std::vector<std::string> force;  // one expression per component
  std::string initial_density = "1 + 0.2*cos(2*pi*x)*cos(2*pi*y)";
  InitialData initial_data = InitialData::corrector;
};

struct TimeConfig {
  double T = 0.05;
  double cfl = 0.5;                 // NSE fraction of the stable step
  std::optional<double> dt;         // fixed NSE step
  double output_interval = 0.005;   // NSE samples and limit snapshots
  double limit_cfl = 0.9;
};

struct SolverConfig {
  double div_tol = 1e-11;
  double momentum_tol = 1e-9;
  int max_iter = 40000;
  double nse_tol = 1e-11;
  double relen_tolerance_constant = 1.0;
};

struct IoConfig {
  std::string output_dir = "out";
  bool dump_fields = false;
  bool energy_csv = true;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::cell;
  GeometryConfig geometry;
  PhysicsConfig physics;
  TimeConfig time;
  SolverConfig solver;
  IoConfig io;
  std::uint64_t seed = 0;
  /// Hypothesis violations that do not stop the run.
  std::vector<std::string> warnings;
  /// True when the physics lies outside the convergence theorem (gamma < 2 or lambda <= lambda0).
  bool outside_theorem = false;
  /// Echo of the parsed document.
  std::string source;
};

/// Strict parse: unknown keys and every invalid value are collected and reported together
/// in one ConfigError. Hypothesis violations become warnings.
ExperimentConfig parse_config_text(const std::string& yaml);
ExperimentConfig parse_config(const std::string& path);

}  // namespace homlab

#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "homlab/analysis.hpp"
#include "homlab/config.hpp"

namespace homlab {

/// Shared pipeline pieces of the experiment kinds.
CellSolution solve_configured_cell(const ExperimentConfig& cfg, int jobs);
LimitProblem configured_limit_problem(const ExperimentConfig& cfg, const CellSolution& cell);
LimitTrajectory solve_configured_limit(const ExperimentConfig& cfg, const CellSolution& cell);
NseParams configured_nse_params(const ExperimentConfig& cfg);
/// Well-prepared NSE initial state for the grid (see InitialData).
FlowState prepared_initial_state(const NseSolver& solver, const CorrectorPair& pair0, InitialData kind);

struct CheckRow {
  std::string module;
  std::string check;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

/// Invariant suites of every module at small sizes. Deterministic for a given seed.
std::vector<CheckRow> run_invariant_checks(std::uint64_t seed, std::ostream& log);

/// Per-epsilon outcome of a rate sweep.
struct SweepMember {
  double epsilon = 0.0;
  ErrorFunctional errors;
  NseRun run;
};

/// NSE solve plus error functional at one epsilon; writes energy.csv into `dir` when requested.
SweepMember run_sweep_member(const ExperimentConfig& cfg, const CellSolution& cell, const LimitTrajectory& limit,
                             double epsilon, const std::filesystem::path& dir);

/// Runs the configured experiment, writing artifacts and manifest.json into `out`.
/// Returns 0 on success and 2 when a verification fails; module errors propagate as exceptions.
int run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out, int jobs, std::ostream& log);

/// Machine-readable error record written by the command-line front end.
void write_error_record(const std::filesystem::path& out, const std::string& type, const std::string& message,
                        int exit_code);

}  // namespace homlab

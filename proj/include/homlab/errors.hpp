#pragma once

#include <stdexcept>
#include <string>

namespace homlab {

/// Argument outside the mathematical domain of an operation (negative density, empty interval, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid experiment or grid configuration. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative solve failed, step rejected, or a verification could not be carried out. Exit code 2.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual = 0.0)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Explicit step exceeded its stability restriction; carries a dt that would have been admissible.
class StepRejected : public SolverError {
 public:
  StepRejected(const std::string& what, double suggested_dt)
      : SolverError(what), suggested_dt_(suggested_dt) {}
  double suggested_dt() const { return suggested_dt_; }

 private:
  double suggested_dt_;
};

}  // namespace homlab

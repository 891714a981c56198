#pragma once

#include <utility>

namespace homlab {

/// Barotropic gamma-law p(s) = a s^gamma together with its pressure potential
/// H(s) = a (s^gamma - s) / (gamma - 1), the unique solution of s H' - H = p with H(1) = 0.
struct PressureLaw {
  double gamma = 2.0;
  double a = 1.0;

  /// Throws DomainError unless a > 0 and gamma > 1. gamma < 2 is representable
  /// (config exploration) but lies outside the convergence theorem.
  void validate() const;
  bool within_theorem() const { return gamma >= 2.0; }

  /// Limit constant of p'(s)/s^(gamma-1); equals a*gamma for the gamma-law.
  double p_infinity() const { return a * gamma; }
};

/// p(s), p'(s) or p''(s) for order 0, 1, 2.
double pressure_eval(const PressureLaw& law, double s, int order = 0);

/// Inverse of p on [0, inf).
double pressure_inverse(const PressureLaw& law, double y);

/// H(s), H'(s) or H''(s) for order 0, 1, 2.
double potential_H(const PressureLaw& law, double s, int order = 0);

/// Relative entropy h(s|r) = H(s) - H'(r)(s - r) - H(r).
double entropy_h(const PressureLaw& law, double s, double r);

/// Largest c with h(s|r) >= c ((r - s)^2 + p(s) 1{s >= 2r}) on a uniform grid over
/// [r_lo, r_hi] x [0, s_max] with `samples` points in total (split evenly between the axes).
double check_entropy_lower_bound(const PressureLaw& law, std::pair<double, double> r_interval,
                                 double s_max, int samples);

}  // namespace homlab

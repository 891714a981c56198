#include "homlab/pressure_law.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "homlab/errors.hpp"

namespace homlab {

void PressureLaw::validate() const {
  if (!(a > 0.0)) throw DomainError("pressure coefficient a must be positive");
  if (!(gamma > 1.0)) throw DomainError("adiabatic exponent must exceed 1");
}

double pressure_eval(const PressureLaw& law, double s, int order) {
  if (s < 0.0) throw DomainError("pressure_eval: negative density");
  switch (order) {
    case 0:
      return law.a * std::pow(s, law.gamma);
    case 1:
      if (s == 0.0 && law.gamma < 2.0) throw DomainError("pressure_eval: p' singular at 0");
      return law.a * law.gamma * std::pow(s, law.gamma - 1.0);
    case 2:
      if (s == 0.0 && law.gamma < 2.0) throw DomainError("pressure_eval: p'' singular at 0");
      return law.a * law.gamma * (law.gamma - 1.0) * std::pow(s, law.gamma - 2.0);
    default:
      throw DomainError("pressure_eval: order must be 0, 1 or 2");
  }
}

double pressure_inverse(const PressureLaw& law, double y) {
  if (y < 0.0) throw DomainError("pressure_inverse: negative pressure");
  return std::pow(y / law.a, 1.0 / law.gamma);
}

double potential_H(const PressureLaw& law, double s, int order) {
  if (s < 0.0) throw DomainError("potential_H: negative density");
  const double g = law.gamma;
  const double c = law.a / (g - 1.0);
  switch (order) {
    case 0:
      return c * (std::pow(s, g) - s);
    case 1:
      if (s == 0.0 && g < 1.0) throw DomainError("potential_H: H' singular at 0");
      return c * (g * std::pow(s, g - 1.0) - 1.0);
    case 2:
      if (s == 0.0 && g < 2.0) throw DomainError("potential_H: H'' singular at 0");
      return law.a * g * std::pow(s, g - 2.0);
    default:
      throw DomainError("potential_H: order must be 0, 1 or 2");
  }
}

double entropy_h(const PressureLaw& law, double s, double r) {
  if (s < 0.0) throw DomainError("entropy_h: negative density");
  if (!(r > 0.0)) throw DomainError("entropy_h: reference density must be positive");
  // h(s|r) = a/(g-1) r^g phi(x) with x = (s - r)/r and phi(x) = (1+x)^g - 1 - g x.
  // Near the diagonal phi is summed as its binomial series so the result keeps full
  // relative precision instead of cancelling.
  const double g = law.gamma;
  const double x = (s - r) / r;
  double phi = 0.0;
  if (std::abs(x) < 0.5) {
    double coeff = g * (g - 1.0) / 2.0;
    double power = x * x;
    for (int k = 2; k < 200; ++k) {
      const double term = coeff * power;
      phi += term;
      if (std::abs(term) <= 1e-18 * std::abs(phi)) break;
      coeff *= (g - k) / (k + 1);
      power *= x;
    }
  } else {
    phi = std::pow(1.0 + x, g) - 1.0 - g * x;
  }
  return std::max(0.0, law.a / (g - 1.0) * std::pow(r, g) * phi);
}

double check_entropy_lower_bound(const PressureLaw& law, std::pair<double, double> r_interval,
                                 double s_max, int samples) {
  const auto [r_lo, r_hi] = r_interval;
  if (!(r_lo > 0.0) || r_hi < r_lo) throw DomainError("check_entropy_lower_bound: empty r interval");
  if (!(s_max > 2.0 * r_hi)) throw DomainError("check_entropy_lower_bound: s_max must exceed 2 r_hi");
  if (samples < 100) throw DomainError("check_entropy_lower_bound: need at least 100 samples");

  const int n_r = r_hi > r_lo ? std::max(2, static_cast<int>(std::sqrt(static_cast<double>(samples)))) : 1;
  const int n_s = std::max(2, samples / n_r);
  double c = std::numeric_limits<double>::infinity();
  for (int ir = 0; ir < n_r; ++ir) {
    const double r = n_r == 1 ? r_lo : r_lo + (r_hi - r_lo) * ir / (n_r - 1);
    for (int is = 0; is < n_s; ++is) {
      const double s = s_max * is / (n_s - 1);
      const double bound = (r - s) * (r - s) + (s >= 2.0 * r ? pressure_eval(law, s) : 0.0);
      if (bound <= 0.0) continue;  // s == r
      c = std::min(c, entropy_h(law, s, r) / bound);
    }
  }
  return c;
}

}  // namespace homlab

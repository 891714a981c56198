#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace homlab {

struct KrylovResult {
  int iterations = 0;
  double residual = 0.0;  // final relative residual in the solver's own norm
  bool converged = false;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Preconditioned conjugate gradients for SPD A. `apply(x, y)` sets y = A x,
/// `precond(r, z)` sets z = M^{-1} r. x holds the initial guess on entry.
template <class Apply, class Precond>
KrylovResult conjugate_gradient(Apply&& apply, Precond&& precond, std::span<const double> b, std::span<double> x,
                                double rel_tol, int max_iter) {
  const std::size_t n = b.size();
  std::vector<double> r(n), z(n), p(n), ap(n);
  apply(std::span<const double>(x.data(), n), std::span<double>(ap));
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  const double bnorm = std::sqrt(dot(b, b));
  KrylovResult res;
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    res.converged = true;
    return res;
  }
  precond(std::span<const double>(r), std::span<double>(z));
  p = z;
  double rz = dot(r, z);
  for (int it = 0; it < max_iter; ++it) {
    res.residual = std::sqrt(dot(r, r)) / bnorm;
    if (res.residual <= rel_tol) {
      res.converged = true;
      res.iterations = it;
      return res;
    }
    apply(std::span<const double>(p), std::span<double>(ap));
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) break;
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    precond(std::span<const double>(r), std::span<double>(z));
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    res.iterations = it + 1;
  }
  res.residual = std::sqrt(dot(r, r)) / bnorm;
  res.converged = res.residual <= rel_tol;
  return res;
}

/// Preconditioned MINRES for symmetric (possibly indefinite, possibly singular but
/// consistent) systems; M must be SPD. Stops when the preconditioned residual
/// estimate drops below rel_tol times its initial value, or when `monitor(x)`
/// (called every `check_every` iterations) returns true.
template <class Apply, class Precond, class Monitor>
KrylovResult minres(Apply&& apply, Precond&& precond, std::span<const double> b, std::span<double> x, double rel_tol,
                    int max_iter, Monitor&& monitor, int check_every = 25) {
  const std::size_t n = b.size();
  std::vector<double> r1(n), r2(n), y(n), v(n), w(n), w1(n), w2(n), ax(n);
  apply(std::span<const double>(x.data(), n), std::span<double>(ax));
  for (std::size_t i = 0; i < n; ++i) r1[i] = b[i] - ax[i];
  precond(std::span<const double>(r1), std::span<double>(y));
  double beta1 = dot(r1, y);
  KrylovResult res;
  if (!(beta1 > 0.0)) {
    res.converged = true;
    return res;
  }
  beta1 = std::sqrt(beta1);
  r2 = r1;
  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    const double s = 1.0 / beta;
    for (std::size_t i = 0; i < n; ++i) v[i] = s * y[i];
    apply(std::span<const double>(v), std::span<double>(y));
    if (it >= 2)
      for (std::size_t i = 0; i < n; ++i) y[i] -= (beta / oldb) * r1[i];
    const double alfa = dot(v, y);
    for (std::size_t i = 0; i < n; ++i) y[i] -= (alfa / beta) * r2[i];
    r1.swap(r2);
    r2 = y;
    precond(std::span<const double>(r2), std::span<double>(y));
    oldb = beta;
    beta = dot(r2, y);
    if (beta < 0.0) break;
    beta = std::sqrt(beta);

    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    const double gamma = std::max(std::hypot(gbar, beta), 1e-300);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    const double denom = 1.0 / gamma;
    w1.swap(w2);
    w2.swap(w);
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
      x[i] += phi * w[i];
    }
    res.iterations = it;
    res.residual = phibar / beta1;
    if (res.residual <= rel_tol) {
      res.converged = true;
      return res;
    }
    if (it % check_every == 0 && monitor(std::span<const double>(x.data(), n))) {
      res.converged = true;
      return res;
    }
    if (beta == 0.0) break;
  }
  res.converged = monitor(std::span<const double>(x.data(), n));
  return res;
}

}  // namespace homlab

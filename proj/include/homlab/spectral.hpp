#pragma once

#include <complex>
#include <memory>
#include <span>

#include "homlab/lattice.hpp"

namespace homlab {

/// Real-to-complex FFT on a periodic lattice (FFTW, estimate-mode plans so results are
/// reproducible run to run). One instance must not be used from two threads at once.
class PeriodicFft {
 public:
  PeriodicFft(int dim, Index3 n);
  ~PeriodicFft();
  PeriodicFft(const PeriodicFft&) = delete;
  PeriodicFft& operator=(const PeriodicFft&) = delete;

  std::size_t real_size() const { return real_size_; }
  std::size_t spectral_size() const { return spectral_size_; }
  const Index3& shape() const { return n_; }

  /// Unnormalised forward transform into the internal spectral buffer.
  void forward(std::span<const double> in);
  /// Inverse transform of the internal spectral buffer, divided by real_size().
  void inverse(std::span<double> out);
  std::complex<double>* spectrum();

  /// Signed integer wavenumbers of spectral entry s (axis 0 is the halved axis).
  Index3 wavenumber(std::size_t s) const;
  /// Weight of entry s in Parseval sums (2 for interior half-spectrum entries, 1 otherwise).
  double parseval_weight(std::size_t s) const;

 private:
  struct Plans;
  int dim_;
  Index3 n_;
  std::size_t real_size_;
  std::size_t spectral_size_;
  std::unique_ptr<Plans> plans_;
};

/// Solves (-Delta_h + shift) u = f on a periodic lattice with the exact symbol of the
/// standard second-difference Laplacian. With shift == 0 the mean of u is set to zero
/// and the mean of f is ignored.
class PeriodicPoisson {
 public:
  PeriodicPoisson(const Lattice& lat, double shift = 0.0);
  void solve(std::span<const double> rhs, std::span<double> out);

 private:
  PeriodicFft fft_;
  std::vector<double> inv_symbol_;
};

/// ||(1 - Delta)^{-1/2} g||_{L^2} of a periodic lattice function, multiplier
/// (1 + |2 pi k / L|^2)^{-1/2} applied to its discrete Fourier modes.
double negative_sobolev_norm(const Lattice& lat, std::span<const double> g);

/// L^2 norm with the same quadrature (Parseval partner of negative_sobolev_norm).
double lattice_l2_norm(const Lattice& lat, std::span<const double> g);

}  // namespace homlab

#include "homlab/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "homlab/errors.hpp"

namespace homlab {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct PeriodicFft::Plans {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

PeriodicFft::PeriodicFft(int dim, Index3 n) : dim_(dim), n_(n), plans_(std::make_unique<Plans>()) {
  if (dim == 2) n_[2] = 1;
  real_size_ = std::size_t(n_[0]) * n_[1] * n_[2];
  spectral_size_ = std::size_t(n_[0] / 2 + 1) * n_[1] * n_[2];
  plans_->real = fftw_alloc_real(real_size_);
  plans_->spec = fftw_alloc_complex(spectral_size_);
  int dims[3];
  if (dim == 2) {
    dims[0] = n_[1];
    dims[1] = n_[0];
  } else {
    dims[0] = n_[2];
    dims[1] = n_[1];
    dims[2] = n_[0];
  }
  std::lock_guard lock(planner_mutex());
  plans_->fwd = fftw_plan_dft_r2c(dim, dims, plans_->real, plans_->spec, FFTW_ESTIMATE);
  plans_->bwd = fftw_plan_dft_c2r(dim, dims, plans_->spec, plans_->real, FFTW_ESTIMATE);
  if (!plans_->fwd || !plans_->bwd) throw SolverError("FFTW planning failed");
}

PeriodicFft::~PeriodicFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plans_->fwd);
  fftw_destroy_plan(plans_->bwd);
  fftw_free(plans_->real);
  fftw_free(plans_->spec);
}

void PeriodicFft::forward(std::span<const double> in) {
  std::copy(in.begin(), in.begin() + real_size_, plans_->real);
  fftw_execute(plans_->fwd);
}

void PeriodicFft::inverse(std::span<double> out) {
  fftw_execute(plans_->bwd);
  const double scale = 1.0 / static_cast<double>(real_size_);
  for (std::size_t i = 0; i < real_size_; ++i) out[i] = plans_->real[i] * scale;
}

std::complex<double>* PeriodicFft::spectrum() { return reinterpret_cast<std::complex<double>*>(plans_->spec); }

Index3 PeriodicFft::wavenumber(std::size_t s) const {
  const int nh = n_[0] / 2 + 1;
  Index3 k{0, 0, 0};
  k[0] = static_cast<int>(s % nh);
  s /= nh;
  k[1] = static_cast<int>(s % n_[1]);
  k[2] = static_cast<int>(s / n_[1]);
  for (int a = 1; a < 3; ++a)
    if (k[a] > n_[a] / 2) k[a] -= n_[a];
  return k;
}

double PeriodicFft::parseval_weight(std::size_t s) const {
  const int k0 = static_cast<int>(s % (n_[0] / 2 + 1));
  if (k0 == 0) return 1.0;
  if (n_[0] % 2 == 0 && k0 == n_[0] / 2) return 1.0;
  return 2.0;
}

PeriodicPoisson::PeriodicPoisson(const Lattice& lat, double shift) : fft_(lat.dim, lat.n) {
  if (!lat.periodic) throw ConfigError("PeriodicPoisson needs a periodic lattice");
  inv_symbol_.resize(fft_.spectral_size());
  const double inv_h2 = 1.0 / (lat.h * lat.h);
  for (std::size_t s = 0; s < inv_symbol_.size(); ++s) {
    const Index3 k = fft_.wavenumber(s);
    double sym = shift;
    for (int a = 0; a < lat.dim; ++a)
      sym += (2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * k[a] / lat.n[a])) * inv_h2;
    inv_symbol_[s] = sym > 0.0 ? 1.0 / sym : 0.0;
  }
}

void PeriodicPoisson::solve(std::span<const double> rhs, std::span<double> out) {
  fft_.forward(rhs);
  std::complex<double>* c = fft_.spectrum();
  for (std::size_t s = 0; s < inv_symbol_.size(); ++s) c[s] *= inv_symbol_[s];
  fft_.inverse(out);
}

namespace {
double weighted_norm(const Lattice& lat, std::span<const double> g, bool sobolev) {
  if (!lat.periodic) throw DomainError("spectral norm requires a periodic lattice");
  if (g.size() < lat.cell_count()) throw DomainError("spectral norm: field size mismatch");
  PeriodicFft fft(lat.dim, lat.n);
  fft.forward(g);
  const std::complex<double>* c = fft.spectrum();
  const double n_total = static_cast<double>(fft.real_size());
  const Vec3 len = lat.extent();
  double volume = 1.0;
  for (int a = 0; a < lat.dim; ++a) volume *= len[a];
  double sum = 0.0;
  for (std::size_t s = 0; s < fft.spectral_size(); ++s) {
    double m = 1.0;
    if (sobolev) {
      const Index3 k = fft.wavenumber(s);
      double k2 = 0.0;
      for (int a = 0; a < lat.dim; ++a) {
        const double kk = 2.0 * std::numbers::pi * k[a] / len[a];
        k2 += kk * kk;
      }
      m = 1.0 / (1.0 + k2);
    }
    sum += fft.parseval_weight(s) * m * std::norm(c[s] / n_total);
  }
  return std::sqrt(volume * sum);
}
}  // namespace

double negative_sobolev_norm(const Lattice& lat, std::span<const double> g) { return weighted_norm(lat, g, true); }

double lattice_l2_norm(const Lattice& lat, std::span<const double> g) { return weighted_norm(lat, g, false); }

}  // namespace homlab

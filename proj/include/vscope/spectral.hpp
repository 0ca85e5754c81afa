#pragma once

#include <array>
#include <complex>
#include <vector>

#include "vscope/grid.hpp"

namespace vscope {

using Complex = std::complex<double>;

/// Half-spectrum of a real field in FFTW r2c layout: kx in [0, n/2],
/// ky, kz in [0, n). Coefficients are normalized so that the zero mode is
/// the field mean (forward transform divides by n^3).
class Spectrum {
 public:
  explicit Spectrum(const Grid& grid);

  const Grid& grid() const { return grid_; }
  int nx_half() const { return grid_.n() / 2 + 1; }
  std::size_t size() const { return coeffs_.size(); }
  std::size_t index(int ix, int iy, int iz) const {
    return static_cast<std::size_t>(ix) + static_cast<std::size_t>(nx_half()) * (static_cast<std::size_t>(iy) + static_cast<std::size_t>(grid_.n()) * iz);
  }
  /// Signed integer wavenumber for storage index along y or z.
  int signed_index(int i) const { return i <= grid_.n() / 2 ? i : i - grid_.n(); }

  Complex& operator[](std::size_t i) { return coeffs_[i]; }
  const Complex& operator[](std::size_t i) const { return coeffs_[i]; }
  std::vector<Complex>& data() { return coeffs_; }
  const std::vector<Complex>& data() const { return coeffs_; }

  /// Sum of |c|^2 over the full (Hermitian-completed) spectrum.
  double power() const;

 private:
  Grid grid_;
  std::vector<Complex> coeffs_;
};

using VectorSpectrum = std::array<Spectrum, 3>;

/// Integer wave vector of a half-spectrum entry, plus whether any component
/// sits on the Nyquist plane.
struct Mode {
  std::size_t idx;
  int kx, ky, kz;
  bool nyquist;
};

/// Calls fn(const Mode&) for every entry of the half spectrum.
template <class Fn>
void for_each_mode(const Grid& grid, Fn&& fn) {
  const int n = grid.n();
  const int nh = n / 2 + 1;
  std::size_t idx = 0;
  for (int iz = 0; iz < n; ++iz) {
    const int kz = iz <= n / 2 ? iz : iz - n;
    for (int iy = 0; iy < n; ++iy) {
      const int ky = iy <= n / 2 ? iy : iy - n;
      for (int ix = 0; ix < nh; ++ix, ++idx) {
        const bool nyq = ix == n / 2 || iy == n / 2 || iz == n / 2;
        fn(Mode{idx, ix, ky, kz, nyq});
      }
    }
  }
}

Spectrum to_spectral(const ScalarField& f);
ScalarField to_physical(const Spectrum& s, double time = 0.0);
VectorSpectrum to_spectral(const VectorField& v);
VectorField to_physical(const VectorSpectrum& s, double time = 0.0);
/// Into existing storage; `out` is resized when its grid differs.
void to_spectral(const VectorField& v, VectorSpectrum& out);
void to_physical(const VectorSpectrum& s, VectorField& out);

/// Spectral derivative d/dx_axis. Nyquist modes are dropped.
Spectrum derivative(const Spectrum& s, int axis);

VectorField curl(const VectorField& u);
VectorSpectrum curl(const VectorSpectrum& u);
void curl(const VectorSpectrum& u, VectorSpectrum& out);

/// Fourier interpolation onto an n_fine^3 grid of the same box (n_fine >= n).
/// Nyquist modes of the source are dropped.
VectorField spectral_resample(const VectorField& u, int n_fine);
ScalarField divergence(const VectorField& u);
VectorField gradient(const ScalarField& f);
StrainTensor strain(const VectorField& u);
VelocityGradient velocity_gradient(const VectorField& u);

/// Pointwise S w . w.
ScalarField vst_density(const StrainTensor& s, const VectorField& omega);
/// Pointwise (w . grad) u . w from the full velocity gradient.
ScalarField stretching_density(const VelocityGradient& grad_u, const VectorField& omega);
/// Pointwise sum_ij (d_j v_i)^2.
ScalarField gradient_norm_squared(const VectorField& v);

/// Leray projection onto divergence-free modes (zero mode untouched).
void project_solenoidal(VectorSpectrum& s);

/// sqrt(sum |div u|^2) / sqrt(sum |grad u|^2), or 0 for a constant field.
double relative_divergence(const VectorField& u);

/// Threads used by FFTs and pointwise kernels. 0 leaves the current setting.
void set_thread_count(int threads);
int thread_count();

}  // namespace vscope

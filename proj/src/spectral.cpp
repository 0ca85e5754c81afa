#include "vscope/spectral.hpp"

#include <fftw3.h>
#include <omp.h>

#include <algorithm>
#include <map>
#include <new>
#include <memory>
#include <mutex>

namespace vscope {
namespace {

// FFTW plans are created once per grid size; execution through the new-array
// interface is thread-safe, planning is not.
struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

// SIMD-aligned scratch so plans can use vector kernels.
template <class T>
class AlignedBuffer {
 public:
  explicit AlignedBuffer(std::size_t n) : p_(static_cast<T*>(fftw_malloc(n * sizeof(T)))) {
    if (!p_) throw std::bad_alloc();
  }
  ~AlignedBuffer() { fftw_free(p_); }
  AlignedBuffer(const AlignedBuffer&) = delete;
  AlignedBuffer& operator=(const AlignedBuffer&) = delete;
  T* get() const { return p_; }

 private:
  T* p_;
};

// Per-thread transform buffers, reused across calls of the same size.
struct Scratch {
  std::size_t real_size = 0, cplx_size = 0;
  std::unique_ptr<AlignedBuffer<double>> real;
  std::unique_ptr<AlignedBuffer<fftw_complex>> cplx;
};

Scratch& scratch_for(const Grid& g) {
  thread_local Scratch s;
  const std::size_t real_size = g.size();
  const std::size_t cplx_size = static_cast<std::size_t>(g.n()) * g.n() * (g.n() / 2 + 1);
  if (s.real_size != real_size) {
    s.real = std::make_unique<AlignedBuffer<double>>(real_size);
    s.cplx = std::make_unique<AlignedBuffer<fftw_complex>>(cplx_size);
    s.real_size = real_size;
    s.cplx_size = cplx_size;
  }
  return s;
}

std::mutex plan_mutex;
int fft_threads = 1;

const Plans& plans_for(int n) {
  static std::map<std::pair<int, int>, Plans> cache;
  static bool threads_ready = false;
  std::lock_guard<std::mutex> lock(plan_mutex);
  if (!threads_ready) {
    fftw_init_threads();
    threads_ready = true;
  }
  auto key = std::make_pair(n, fft_threads);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const std::size_t real_size = static_cast<std::size_t>(n) * n * n;
  const std::size_t cplx_size = static_cast<std::size_t>(n) * n * (n / 2 + 1);
  AlignedBuffer<double> r(real_size);
  AlignedBuffer<fftw_complex> c(cplx_size);
  fftw_plan_with_nthreads(fft_threads);
  // ESTIMATE keeps the plan (and so the round-off) independent of timing.
  const unsigned flags = FFTW_ESTIMATE;
  Plans p;
  p.forward = fftw_plan_dft_r2c_3d(n, n, n, r.get(), c.get(), flags);
  p.backward = fftw_plan_dft_c2r_3d(n, n, n, c.get(), r.get(), flags | FFTW_DESTROY_INPUT);
  return cache.emplace(key, p).first->second;
}

}  // namespace

void set_thread_count(int threads) {
  if (threads <= 0) return;
  std::lock_guard<std::mutex> lock(plan_mutex);
  fft_threads = threads;
  omp_set_num_threads(threads);
}

int thread_count() { return fft_threads; }

Spectrum::Spectrum(const Grid& grid)
    : grid_(grid), coeffs_(static_cast<std::size_t>(grid.n()) * grid.n() * (grid.n() / 2 + 1)) {}

double Spectrum::power() const {
  const int n = grid_.n();
  double s = 0.0;
  for_each_mode(grid_, [&](const Mode& m) {
    const double w = (m.kx == 0 || m.kx == n / 2) ? 1.0 : 2.0;
    s += w * std::norm(coeffs_[m.idx]);
  });
  return s;
}

Spectrum to_spectral(const ScalarField& f) {
  f.require_finite();
  const Grid& g = f.grid();
  Spectrum s(g);
  const Plans& p = plans_for(g.n());
  Scratch& w = scratch_for(g);
  double* in = w.real->get();
  const fftw_complex* out = w.cplx->get();
  std::copy(f.values().begin(), f.values().end(), in);
  fftw_execute_dft_r2c(p.forward, in, w.cplx->get());
  const double scale = 1.0 / static_cast<double>(g.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = Complex(out[i][0] * scale, out[i][1] * scale);
  return s;
}

ScalarField to_physical(const Spectrum& s, double time) {
  const Grid& g = s.grid();
  const Plans& p = plans_for(g.n());
  Scratch& w = scratch_for(g);
  std::copy(s.data().begin(), s.data().end(), reinterpret_cast<Complex*>(w.cplx->get()));
  fftw_execute_dft_c2r(p.backward, w.cplx->get(), w.real->get());
  return ScalarField(g, std::vector<double>(w.real->get(), w.real->get() + g.size()), time);
}

void to_spectral(const VectorField& v, VectorSpectrum& out) {
  const Grid& g = v.grid();
  const Plans& p = plans_for(g.n());
  Scratch& w = scratch_for(g);
  const double scale = 1.0 / static_cast<double>(g.size());
  v.require_finite();
  for (int a = 0; a < 3; ++a) {
    if (!(out[a].grid() == g)) out[a] = Spectrum(g);
    const auto c = v.component(a);
    std::copy(c.begin(), c.end(), w.real->get());
    fftw_execute_dft_r2c(p.forward, w.real->get(), w.cplx->get());
    const fftw_complex* z = w.cplx->get();
    Spectrum& s = out[a];
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = Complex(z[i][0] * scale, z[i][1] * scale);
  }
}

VectorSpectrum to_spectral(const VectorField& v) {
  const Grid& g = v.grid();
  VectorSpectrum out{Spectrum(g), Spectrum(g), Spectrum(g)};
  to_spectral(v, out);
  return out;
}

void to_physical(const VectorSpectrum& s, VectorField& out) {
  const Grid& g = s[0].grid();
  const Plans& p = plans_for(g.n());
  Scratch& w = scratch_for(g);
  if (!(out.grid() == g)) out = VectorField(g);
  for (int a = 0; a < 3; ++a) {
    std::copy(s[a].data().begin(), s[a].data().end(), reinterpret_cast<Complex*>(w.cplx->get()));
    fftw_execute_dft_c2r(p.backward, w.cplx->get(), w.real->get());
    std::copy(w.real->get(), w.real->get() + g.size(), out.component(a).begin());
  }
}

VectorField to_physical(const VectorSpectrum& s, double time) {
  VectorField out(s[0].grid(), time);
  to_physical(s, out);
  return out;
}

namespace {

// i k c without the generic complex multiply.
inline Complex times_ik(double k, const Complex& c) { return {-k * c.imag(), k * c.real()}; }

}  // namespace

Spectrum derivative(const Spectrum& s, int axis) {
  const Grid& g = s.grid();
  const int n = g.n();
  const double ku = g.k_unit();
  Spectrum out(g);
  for_each_mode(g, [&](const Mode& m) {
    const int k = axis == 0 ? m.kx : (axis == 1 ? m.ky : m.kz);
    if (std::abs(k) == n / 2) return;
    out[m.idx] = times_ik(ku * k, s[m.idx]);
  });
  return out;
}

void curl(const VectorSpectrum& u, VectorSpectrum& w) {
  // w = (d_y u_z - d_z u_y, d_z u_x - d_x u_z, d_x u_y - d_y u_x); Nyquist derivatives dropped
  const Grid& g = u[0].grid();
  const int n = g.n();
  const double ku = g.k_unit();
  for (auto& c : w)
    if (!(c.grid() == g)) c = Spectrum(g);
  for_each_mode(g, [&](const Mode& m) {
    const double kx = m.kx == n / 2 ? 0.0 : ku * m.kx;
    const double ky = std::abs(m.ky) == n / 2 ? 0.0 : ku * m.ky;
    const double kz = std::abs(m.kz) == n / 2 ? 0.0 : ku * m.kz;
    const std::size_t i = m.idx;
    const Complex ux = u[0][i], uy = u[1][i], uz = u[2][i];
    w[0][i] = times_ik(ky, uz) - times_ik(kz, uy);
    w[1][i] = times_ik(kz, ux) - times_ik(kx, uz);
    w[2][i] = times_ik(kx, uy) - times_ik(ky, ux);
  });
}

VectorSpectrum curl(const VectorSpectrum& u) {
  const Grid& g = u[0].grid();
  VectorSpectrum w{Spectrum(g), Spectrum(g), Spectrum(g)};
  curl(u, w);
  return w;
}

VectorField spectral_resample(const VectorField& u, int n_fine) {
  const Grid& g = u.grid();
  if (n_fine == g.n()) return u;
  if (n_fine < g.n()) throw ValidationError("spectral_resample: target grid is coarser than the source");
  const Grid fine(n_fine, g.length());
  const VectorSpectrum s = to_spectral(u);
  VectorSpectrum f{Spectrum(fine), Spectrum(fine), Spectrum(fine)};
  const std::size_t nh = static_cast<std::size_t>(n_fine / 2 + 1);
  for_each_mode(g, [&](const Mode& m) {
    if (m.nyquist) return;
    const std::size_t iy = m.ky >= 0 ? m.ky : m.ky + n_fine;
    const std::size_t iz = m.kz >= 0 ? m.kz : m.kz + n_fine;
    const std::size_t j = (iz * n_fine + iy) * nh + m.kx;
    for (int a = 0; a < 3; ++a) f[a][j] = s[a][m.idx];
  });
  return to_physical(f, u.time());
}

VectorField curl(const VectorField& u) { return to_physical(curl(to_spectral(u)), u.time()); }

ScalarField divergence(const VectorField& u) {
  VectorSpectrum s = to_spectral(u);
  Spectrum d = derivative(s[0], 0);
  Spectrum dy = derivative(s[1], 1), dz = derivative(s[2], 2);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += dy[i] + dz[i];
  return to_physical(d, u.time());
}

VectorField gradient(const ScalarField& f) {
  Spectrum s = to_spectral(f);
  VectorSpectrum g{derivative(s, 0), derivative(s, 1), derivative(s, 2)};
  return to_physical(g, f.time());
}

VelocityGradient velocity_gradient(const VectorField& u) {
  VectorSpectrum s = to_spectral(u);
  VelocityGradient out(u.grid());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      ScalarField d = to_physical(derivative(s[i], j));
      out(i, j).assign(d.values().begin(), d.values().end());
    }
  return out;
}

StrainTensor strain(const VectorField& u) {
  VectorSpectrum s = to_spectral(u);
  StrainTensor out(u.grid());
  static constexpr int pairs[6][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}};
  for (int c = 0; c < 6; ++c) {
    const int i = pairs[c][0], j = pairs[c][1];
    Spectrum a = derivative(s[i], j);
    Spectrum b = derivative(s[j], i);
    for (std::size_t m = 0; m < a.size(); ++m) a[m] = 0.5 * (a[m] + b[m]);
    ScalarField f = to_physical(a);
    out.components[c].assign(f.values().begin(), f.values().end());
  }
  return out;
}

ScalarField vst_density(const StrainTensor& s, const VectorField& omega) {
  require_same_grid(s.grid, omega.grid(), "vst_density");
  ScalarField out(omega.grid(), omega.time());
  auto o = out.values();
  const auto& c = s.components;
  auto wx = omega.component(0), wy = omega.component(1), wz = omega.component(2);
#pragma omp parallel for
  for (std::size_t i = 0; i < o.size(); ++i) {
    const double x = wx[i], y = wy[i], z = wz[i];
    o[i] = c[StrainTensor::xx][i] * x * x + c[StrainTensor::yy][i] * y * y + c[StrainTensor::zz][i] * z * z +
           2.0 * (c[StrainTensor::xy][i] * x * y + c[StrainTensor::xz][i] * x * z + c[StrainTensor::yz][i] * y * z);
  }
  return out;
}

ScalarField stretching_density(const VelocityGradient& grad_u, const VectorField& omega) {
  require_same_grid(grad_u.grid, omega.grid(), "stretching_density");
  ScalarField out(omega.grid(), omega.time());
  auto o = out.values();
#pragma omp parallel for
  for (std::size_t n = 0; n < o.size(); ++n) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
      double stretch_i = 0.0;  // ((w . grad) u)_i
      for (int j = 0; j < 3; ++j) stretch_i += omega.component(j)[n] * grad_u(i, j)[n];
      s += stretch_i * omega.component(i)[n];
    }
    o[n] = s;
  }
  return out;
}

ScalarField gradient_norm_squared(const VectorField& v) {
  VectorSpectrum s = to_spectral(v);
  ScalarField out(v.grid(), v.time());
  auto o = out.values();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      ScalarField d = to_physical(derivative(s[i], j));
      auto dv = d.values();
      for (std::size_t n = 0; n < o.size(); ++n) o[n] += dv[n] * dv[n];
    }
  return out;
}

namespace {
// Wave vector as seen by derivative(): Nyquist components act as zero.
std::array<double, 3> effective_k(const Mode& m, int n) {
  auto eff = [n](int k) { return std::abs(k) == n / 2 ? 0.0 : double(k); };
  return {eff(m.kx), eff(m.ky), eff(m.kz)};
}
}  // namespace

void project_solenoidal(VectorSpectrum& s) {
  const int n = s[0].grid().n();
  for_each_mode(s[0].grid(), [&](const Mode& m) {
    const auto k = effective_k(m, n);
    const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if (k2 == 0.0) return;
    const Complex kdotu = k[0] * s[0][m.idx] + k[1] * s[1][m.idx] + k[2] * s[2][m.idx];
    for (int a = 0; a < 3; ++a) s[a][m.idx] -= k[a] * kdotu / k2;
  });
}

double relative_divergence(const VectorField& u) {
  VectorSpectrum s = to_spectral(u);
  const int n = u.grid().n();
  double div2 = 0.0, grad2 = 0.0;
  for_each_mode(u.grid(), [&](const Mode& m) {
    const double w = (m.kx == 0 || m.kx == n / 2) ? 1.0 : 2.0;
    const auto k = effective_k(m, n);
    const Complex d = k[0] * s[0][m.idx] + k[1] * s[1][m.idx] + k[2] * s[2][m.idx];
    const double k2 = double(m.kx) * m.kx + double(m.ky) * m.ky + double(m.kz) * m.kz;
    div2 += w * std::norm(d);
    grad2 += w * k2 * (std::norm(s[0][m.idx]) + std::norm(s[1][m.idx]) + std::norm(s[2][m.idx]));
  });
  return grad2 > 0.0 ? std::sqrt(div2 / grad2) : 0.0;
}

}  // namespace vscope

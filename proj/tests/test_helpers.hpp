#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "vscope/grid.hpp"

namespace vscope::test {

inline ScalarField sample(const Grid& g, const std::function<double(const Vec3&)>& f, double time = 0.0) {
  ScalarField out(g, time);
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = f(g.node(i));
  return out;
}

inline VectorField sample(const Grid& g, const std::function<Vec3(const Vec3&)>& f, double time = 0.0) {
  VectorField out(g, time);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3 v = f(g.node(i));
    for (int a = 0; a < 3; ++a) out.component(a)[i] = v[a];
  }
  return out;
}

inline ScalarField random_scalar(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  ScalarField f(g);
  for (auto& v : f.values()) v = nd(rng);
  return f;
}

inline VectorField random_vector(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  VectorField f(g);
  for (int a = 0; a < 3; ++a)
    for (auto& v : f.component(a)) v = nd(rng);
  return f;
}

/// Smooth random field: a handful of low Fourier modes with random amplitudes.
inline VectorField smooth_random_vector(const Grid& g, std::uint64_t seed, int kmax = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  VectorField f(g);
  for (int a = 0; a < 3; ++a)
    for (int kx = 0; kx <= kmax; ++kx)
      for (int ky = -kmax; ky <= kmax; ++ky)
        for (int kz = -kmax; kz <= kmax; ++kz) {
          const double c = ud(rng), s = ud(rng);
          for (std::size_t i = 0; i < g.size(); ++i) {
            const Vec3 x = g.node(i);
            const double ph = kx * x[0] + ky * x[1] + kz * x[2];
            f.component(a)[i] += c * std::cos(ph) + s * std::sin(ph);
          }
        }
  return f;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace vscope::test

#pragma once

#include <cmath>

namespace vscope {

/// Hyper-dual number v + e1 E1 + e2 E2 + e12 E1E2 with E1^2 = E2^2 = 0.
/// Seeding e1 = e2 = 1 on one variable yields the exact first and second
/// derivative along it in e1 and e12.
struct HyperDual {
  double v = 0.0, e1 = 0.0, e2 = 0.0, e12 = 0.0;

  constexpr HyperDual() = default;
  constexpr HyperDual(double value) : v(value) {}
  constexpr HyperDual(double value, double d1, double d2, double d12) : v(value), e1(d1), e2(d2), e12(d12) {}

  static constexpr HyperDual variable(double x) { return {x, 1.0, 1.0, 0.0}; }
};

inline HyperDual operator+(const HyperDual& a, const HyperDual& b) { return {a.v + b.v, a.e1 + b.e1, a.e2 + b.e2, a.e12 + b.e12}; }
inline HyperDual operator-(const HyperDual& a, const HyperDual& b) { return {a.v - b.v, a.e1 - b.e1, a.e2 - b.e2, a.e12 - b.e12}; }
inline HyperDual operator-(const HyperDual& a) { return {-a.v, -a.e1, -a.e2, -a.e12}; }
inline HyperDual operator*(const HyperDual& a, const HyperDual& b) {
  return {a.v * b.v, a.v * b.e1 + a.e1 * b.v, a.v * b.e2 + a.e2 * b.v,
          a.v * b.e12 + a.e1 * b.e2 + a.e2 * b.e1 + a.e12 * b.v};
}
inline HyperDual operator*(double s, const HyperDual& a) { return {s * a.v, s * a.e1, s * a.e2, s * a.e12}; }
inline HyperDual operator*(const HyperDual& a, double s) { return s * a; }
inline HyperDual operator+(const HyperDual& a, double s) { return {a.v + s, a.e1, a.e2, a.e12}; }
inline HyperDual operator+(double s, const HyperDual& a) { return a + s; }
inline HyperDual operator-(const HyperDual& a, double s) { return {a.v - s, a.e1, a.e2, a.e12}; }
inline HyperDual operator-(double s, const HyperDual& a) { return {s - a.v, -a.e1, -a.e2, -a.e12}; }

// Chain rule through a scalar function with value f0 and derivatives f1, f2.
inline HyperDual apply(const HyperDual& a, double f0, double f1, double f2) {
  return {f0, f1 * a.e1, f1 * a.e2, f1 * a.e12 + f2 * a.e1 * a.e2};
}

inline HyperDual inverse(const HyperDual& a) {
  const double i = 1.0 / a.v;
  return apply(a, i, -i * i, 2.0 * i * i * i);
}
inline HyperDual operator/(const HyperDual& a, const HyperDual& b) { return a * inverse(b); }
inline HyperDual operator/(const HyperDual& a, double s) { return a * (1.0 / s); }

inline HyperDual sqrt(const HyperDual& a) {
  const double r = std::sqrt(a.v);
  return apply(a, r, 0.5 / r, -0.25 / (r * a.v));
}

inline double value_of(double x) { return x; }
inline double value_of(const HyperDual& x) { return x.v; }

template <class T>
T ipow(const T& x, int m) {
  T out(1.0);
  for (int i = 0; i < m; ++i) out = out * x;
  return out;
}

}  // namespace vscope

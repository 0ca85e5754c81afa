#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "vscope/errors.hpp"

namespace vscope {

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// Uniform periodic grid on the cube [0, box_length)^3. Node (i, j, k) sits at
/// (i, j, k) * spacing; storage is x-fastest.
class Grid {
 public:
  Grid(int n_points, double box_length = 2.0 * std::numbers::pi);

  int n() const { return n_; }
  double length() const { return length_; }
  double spacing() const { return length_ / n_; }
  double cell_volume() const { return std::pow(spacing(), 3); }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_ * n_; }
  /// Wavenumber unit 2*pi/L; physical wavenumber = unit * integer index.
  double k_unit() const { return 2.0 * std::numbers::pi / length_; }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(n_) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(n_) * k);
  }
  /// Index with periodic wrap of each coordinate.
  std::size_t wrapped_index(int i, int j, int k) const { return index(wrap(i), wrap(j), wrap(k)); }
  int wrap(int i) const {
    int r = i % n_;
    return r < 0 ? r + n_ : r;
  }
  Vec3 node(std::size_t idx) const;

  /// Minimum-image displacement x - origin on the torus, each component in [-L/2, L/2).
  Vec3 displacement(const Vec3& x, const Vec3& origin) const;

  bool operator==(const Grid& o) const { return n_ == o.n_ && length_ == o.length_; }
  bool operator!=(const Grid& o) const { return !(*this == o); }

 private:
  int n_;
  double length_;
};

void require_same_grid(const Grid& a, const Grid& b, const char* what);

class ScalarField {
 public:
  explicit ScalarField(const Grid& grid, double time = 0.0);
  ScalarField(const Grid& grid, std::vector<double> values, double time = 0.0);

  const Grid& grid() const { return grid_; }
  double time() const { return time_; }
  void set_time(double t) { time_ = t; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  /// Throws ValidationError on any NaN/Inf.
  void require_finite() const;

 private:
  Grid grid_;
  std::vector<double> values_;
  double time_;
};

class VectorField {
 public:
  explicit VectorField(const Grid& grid, double time = 0.0);
  VectorField(const Grid& grid, std::array<std::vector<double>, 3> components, double time = 0.0);

  const Grid& grid() const { return grid_; }
  double time() const { return time_; }
  void set_time(double t) { time_ = t; }
  std::span<const double> component(int a) const { return components_[a]; }
  std::span<double> component(int a) { return components_[a]; }
  Vec3 at(std::size_t idx) const { return {components_[0][idx], components_[1][idx], components_[2][idx]}; }

  void require_finite() const;

 private:
  Grid grid_;
  std::array<std::vector<double>, 3> components_;
  double time_;
};

/// Symmetric 3x3 tensor field, six stored components.
struct StrainTensor {
  enum Component { xx = 0, yy, zz, xy, xz, yz };

  explicit StrainTensor(const Grid& g) : grid(g) {
    for (auto& c : components) c.assign(g.size(), 0.0);
  }
  double get(int row, int col, std::size_t idx) const;
  double trace(std::size_t idx) const { return components[xx][idx] + components[yy][idx] + components[zz][idx]; }

  Grid grid;
  std::array<std::vector<double>, 6> components;
};

/// Full velocity gradient, entry (i, j) = d u_i / d x_j.
struct VelocityGradient {
  explicit VelocityGradient(const Grid& g) : grid(g) {
    for (auto& c : components) c.assign(g.size(), 0.0);
  }
  std::vector<double>& operator()(int i, int j) { return components[3 * i + j]; }
  const std::vector<double>& operator()(int i, int j) const { return components[3 * i + j]; }

  Grid grid;
  std::array<std::vector<double>, 9> components;
};

// Pointwise helpers and quadrature.

ScalarField magnitude(const VectorField& v);
ScalarField magnitude_squared(const VectorField& v);

/// Uniform-grid quadrature sum f * spacing^3.
double integrate(const ScalarField& f);
/// Uniform-grid quadrature sum f * w * spacing^3.
double integrate(const ScalarField& f, const ScalarField& weight);

double max_magnitude(const VectorField& v);
/// sum |v| * spacing^3
double l1_norm(const VectorField& v);
/// (1/2) sum |v|^2 * spacing^3
double kinetic_energy(const VectorField& v);

}  // namespace vscope

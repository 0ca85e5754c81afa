#include "vscope/grid.hpp"

#include <algorithm>
#include <sstream>

namespace vscope {

Grid::Grid(int n_points, double box_length) : n_(n_points), length_(box_length) {
  if (n_points < 8 || n_points % 2 != 0) {
    std::ostringstream os;
    os << "grid: n_points must be even and >= 8 (got " << n_points << ")";
    throw ValidationError(os.str());
  }
  if (!(box_length > 0.0) || !std::isfinite(box_length)) throw ValidationError("grid: box_length must be positive");
}

Vec3 Grid::node(std::size_t idx) const {
  const auto n = static_cast<std::size_t>(n_);
  const double h = spacing();
  return {static_cast<double>(idx % n) * h, static_cast<double>((idx / n) % n) * h, static_cast<double>(idx / (n * n)) * h};
}

Vec3 Grid::displacement(const Vec3& x, const Vec3& origin) const {
  Vec3 d;
  for (int a = 0; a < 3; ++a) {
    double v = x[a] - origin[a];
    v -= length_ * std::floor(v / length_ + 0.5);
    d[a] = v;
  }
  return d;
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (a != b) throw ValidationError(std::string(what) + ": grid mismatch");
}

ScalarField::ScalarField(const Grid& grid, double time) : grid_(grid), values_(grid.size(), 0.0), time_(time) {}

ScalarField::ScalarField(const Grid& grid, std::vector<double> values, double time)
    : grid_(grid), values_(std::move(values)), time_(time) {
  if (values_.size() != grid_.size()) throw ValidationError("scalar field: value count does not match grid");
}

void ScalarField::require_finite() const {
  if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); }))
    throw ValidationError("scalar field contains non-finite values");
}

VectorField::VectorField(const Grid& grid, double time) : grid_(grid), time_(time) {
  for (auto& c : components_) c.assign(grid.size(), 0.0);
}

VectorField::VectorField(const Grid& grid, std::array<std::vector<double>, 3> components, double time)
    : grid_(grid), components_(std::move(components)), time_(time) {
  for (const auto& c : components_)
    if (c.size() != grid_.size()) throw ValidationError("vector field: component count does not match grid");
}

void VectorField::require_finite() const {
  for (const auto& c : components_)
    if (!std::all_of(c.begin(), c.end(), [](double v) { return std::isfinite(v); }))
      throw ValidationError("vector field contains non-finite values");
}

double StrainTensor::get(int row, int col, std::size_t idx) const {
  static constexpr int map[3][3] = {{xx, xy, xz}, {xy, yy, yz}, {xz, yz, zz}};
  return components[map[row][col]][idx];
}

ScalarField magnitude_squared(const VectorField& v) {
  ScalarField out(v.grid(), v.time());
  auto x = v.component(0), y = v.component(1), z = v.component(2);
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * x[i] + y[i] * y[i] + z[i] * z[i];
  return out;
}

ScalarField magnitude(const VectorField& v) {
  ScalarField out = magnitude_squared(v);
  for (auto& x : out.values()) x = std::sqrt(x);
  return out;
}

double integrate(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s * f.grid().cell_volume();
}

double integrate(const ScalarField& f, const ScalarField& weight) {
  require_same_grid(f.grid(), weight.grid(), "integrate");
  auto a = f.values();
  auto b = weight.values();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s * f.grid().cell_volume();
}

double max_magnitude(const VectorField& v) {
  auto x = v.component(0), y = v.component(1), z = v.component(2);
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, x[i] * x[i] + y[i] * y[i] + z[i] * z[i]);
  return std::sqrt(m);
}

double l1_norm(const VectorField& v) {
  auto x = v.component(0), y = v.component(1), z = v.component(2);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::sqrt(x[i] * x[i] + y[i] * y[i] + z[i] * z[i]);
  return s * v.grid().cell_volume();
}

double kinetic_energy(const VectorField& v) { return 0.5 * integrate(magnitude_squared(v)); }

}  // namespace vscope

#include "vscope/cutoffs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

#include "vscope/hyperdual.hpp"

namespace vscope {

int bridge_order(double rho) {
  if (!(rho > 0.5 && rho < 1.0)) {
    std::ostringstream os;
    os << "cut-off exponent " << rho << " outside (1/2, 1)";
    throw ValidationError(os.str());
  }
  return static_cast<int>(std::ceil(1.0 / (1.0 - rho) - 1e-9));
}

namespace {

template <class T>
T bridge_t(const T& s, int m) {
  if (value_of(s) <= 0.0) return T(0.0);
  if (value_of(s) >= 1.0) return T(1.0);
  const T a = ipow(s, m);
  const T b = ipow(1.0 - s, m);
  return a / (a + b);
}

// Radial macro profile: 1 on [0,1], B(2 - s) on (1,2), 0 beyond.
template <class T>
T chi_t(const T& s, int m) {
  if (value_of(s) <= 1.0) return T(1.0);
  if (value_of(s) >= 2.0) return T(0.0);
  return bridge_t(2.0 - s, m);
}

// Profile used in the blended cone coordinate: 1 up to 1.25, 0 from 1.75.
constexpr double kBlendInner = 1.25;
constexpr double kBlendOuter = 1.75;

template <class T>
T chi_blend(const T& s, int m) {
  if (value_of(s) <= kBlendInner) return T(1.0);
  if (value_of(s) >= kBlendOuter) return T(0.0);
  return 1.0 - bridge_t((s - kBlendInner) / (kBlendOuter - kBlendInner), m);
}

double sqrt(double x) { return std::sqrt(x); }

template <class T>
T norm_t(const std::array<T, 3>& v) {
  const T sq = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
  if (value_of(sq) <= 0.0) return T(0.0);
  return sqrt(sq);
}

struct AdjustedParams {
  double R0;
  int m0;
  double R;
  int m;
  Vec3 xi;
};

template <class T>
T adjusted_value(const std::array<T, 3>& p, const AdjustedParams& a) {
  const T r = norm_t(p);
  const T psi0 = chi_t(r / a.R0, a.m0);
  if (value_of(psi0) <= 0.0) return T(0.0);

  const double w = 0.25 * a.R;
  T lam(0.0);
  if (value_of(r) >= a.R0) {
    lam = T(1.0);
  } else if (value_of(r) > a.R0 - w) {
    lam = bridge_t((r - (a.R0 - w)) / w, a.m);
  }

  T d(0.0);
  if (value_of(lam) < 1.0) d = norm_t(std::array<T, 3>{p[0] - a.xi[0], p[1] - a.xi[1], p[2] - a.xi[2]});
  if (value_of(lam) > 0.0) {
    const T scale = a.R0 / r;
    const std::array<T, 3> q{p[0] * scale - a.xi[0], p[1] * scale - a.xi[1], p[2] * scale - a.xi[2]};
    const T dp = norm_t(q);
    d = value_of(lam) >= 1.0 ? dp : (1.0 - lam) * d + lam * dp;
  }
  return psi0 * chi_blend(d / a.R, a.m);
}

double ratio(double num, double den, double power) {
  return std::abs(num) / std::pow(den, power);
}

}  // namespace

double bridge(double s, int m) { return bridge_t(s, m); }

double bridge_d1(double s, int m) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double a = std::pow(s, m - 1), b = std::pow(1.0 - s, m - 1);
  const double g = a * s + b * (1.0 - s);
  return m * a * b / (g * g);
}

double bridge_d2(double s, int m) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double a = std::pow(s, m - 1), b = std::pow(1.0 - s, m - 1);
  const double g = a * s + b * (1.0 - s);
  const double n = m * a * b;
  const double dn = m * (m - 1) * std::pow(s, m - 2) * std::pow(1.0 - s, m - 2) * (1.0 - 2.0 * s);
  const double dg = m * (a - b);
  return (dn * g - 2.0 * n * dg) / (g * g * g);
}

// ---------------------------------------------------------------- temporal

TemporalCutoff::TemporalCutoff(double horizon, double rho) : horizon_(horizon), rho_(rho), order_(bridge_order(rho)) {
  if (!(horizon > 0.0)) throw ValidationError("temporal cut-off: horizon must be positive");
  const int samples = 20000;
  for (int i = 1; i < samples; ++i) {
    const double s = double(i) / samples;
    const double b = bridge(s, order_);
    if (b > 1e-14) c0_ = std::max(c0_, 3.0 * ratio(bridge_d1(s, order_), b, rho_));
  }
}

TemporalCutoff TemporalCutoff::constant(double horizon) {
  if (!(horizon > 0.0)) throw ValidationError("temporal cut-off: horizon must be positive");
  TemporalCutoff c;
  c.horizon_ = horizon;
  c.constant_ = true;
  return c;
}

double TemporalCutoff::value(double t) const {
  if (constant_) return 1.0;
  return bridge(3.0 * t / horizon_ - 1.0, order_);
}

double TemporalCutoff::derivative(double t) const {
  if (constant_) return 0.0;
  return 3.0 / horizon_ * bridge_d1(3.0 * t / horizon_ - 1.0, order_);
}

TemporalCutoff make_temporal(double horizon, double rho) { return TemporalCutoff(horizon, rho); }

// ---------------------------------------------------------------- spatial

Vec3 SpatialCutoff::wrap(const Vec3& y, const Vec3& origin) const {
  Vec3 d;
  const double L = box_length_;
  for (int a = 0; a < 3; ++a) {
    double v = y[a] - origin[a];
    v -= L * std::floor(v / L + 0.5);
    d[a] = v;
  }
  return d;
}

CutoffJet SpatialCutoff::radial_jet(const Vec3& d) const {
  CutoffJet j;
  const double r = norm(d);
  const double R = radius_;
  if (profile_ == Profile::indicator) {
    const double outer = 2.0 * R;
    if (ramp_ <= 0.0) {
      j.value = r < outer ? 1.0 : 0.0;
      return j;
    }
    if (r <= outer - ramp_) {
      j.value = 1.0;
    } else if (r < outer) {
      j.value = (outer - r) / ramp_;
      const double dchi = -1.0 / ramp_;
      j.gradient = (dchi / r) * d;
      j.laplacian = 2.0 * dchi / r;
    }
    return j;
  }
  const double s = r / R;
  if (s <= 1.0) {
    j.value = 1.0;
    return j;
  }
  if (s >= 2.0) return j;
  const double q = 2.0 - s;
  j.value = bridge(q, order_);
  const double d1 = -bridge_d1(q, order_);
  const double d2 = bridge_d2(q, order_);
  j.gradient = (d1 / (R * r)) * d;
  j.laplacian = d2 / (R * R) + 2.0 * d1 / (R * r);
  return j;
}

CutoffJet SpatialCutoff::adjusted_jet(const Vec3& p) const {
  const AdjustedParams prm{adjusted_->macro_radius, adjusted_->macro_order, radius_, order_, adjusted_->element};
  CutoffJet j;
  j.value = adjusted_value<double>({p[0], p[1], p[2]}, prm);
  if (j.value <= 0.0) return j;
  for (int a = 0; a < 3; ++a) {
    std::array<HyperDual, 3> x{HyperDual(p[0]), HyperDual(p[1]), HyperDual(p[2])};
    x[a] = HyperDual::variable(p[a]);
    const HyperDual v = adjusted_value(x, prm);
    j.gradient[a] = v.e1;
    j.laplacian += v.e12;
  }
  return j;
}

double SpatialCutoff::value(const Vec3& y) const {
  if (adjusted_) {
    const Vec3 p = wrap(y, adjusted_->macro_center);
    const AdjustedParams prm{adjusted_->macro_radius, adjusted_->macro_order, radius_, order_, adjusted_->element};
    return adjusted_value<double>({p[0], p[1], p[2]}, prm);
  }
  return radial_jet(wrap(y, center_)).value;
}

CutoffJet SpatialCutoff::jet(const Vec3& y) const {
  if (adjusted_) return adjusted_jet(wrap(y, adjusted_->macro_center));
  return radial_jet(wrap(y, center_));
}

std::pair<Vec3, Vec3> SpatialCutoff::support_box() const {
  Vec3 lo, hi;
  if (!adjusted_) {
    for (int a = 0; a < 3; ++a) {
      lo[a] = center_[a] - 2.0 * radius_;
      hi[a] = center_[a] + 2.0 * radius_;
    }
    return {lo, hi};
  }
  const auto& ad = *adjusted_;
  const double R = radius_, R0 = ad.macro_radius;
  for (int a = 0; a < 3; ++a) {
    const double x = ad.element[a];
    const double l = std::min(x - 2.0 * R, 2.0 * x - 4.0 * R);
    const double h = std::max(x + 2.0 * R, 2.0 * x + 4.0 * R);
    lo[a] = ad.macro_center[a] + std::max(l, -2.0 * R0);
    hi[a] = ad.macro_center[a] + std::min(h, 2.0 * R0);
  }
  return {lo, hi};
}

namespace {

using Intervals = std::vector<std::pair<double, double>>;

// x-range of the line (., y, z) inside the ball |p - c| < rad, clipped to [lo, hi].
void ball_row(const Vec3& c, double rad, double y, double z, double lo, double hi, Intervals& out) {
  const double r2 = rad * rad - (y - c[1]) * (y - c[1]) - (z - c[2]) * (z - c[2]);
  if (r2 < 0.0) return;
  const double a = std::max(lo, c[0] - std::sqrt(r2)), b = std::min(hi, c[0] + std::sqrt(r2));
  if (a <= b) out.emplace_back(a, b);
}

// x-range of the line (., y, z) in the convex cone {e.p >= c |p|}, c > 0, clipped to [lo, hi].
void cone_row(const Vec3& e, double c, double y, double z, double lo, double hi, Intervals& out) {
  auto inside = [&](double x) { return e[0] * x + e[1] * y + e[2] * z >= c * std::sqrt(x * x + y * y + z * z); };
  // boundary candidates: roots of (e.p)^2 = c^2 |p|^2 and of e.p = 0
  const double a = e[0], b = e[1] * y + e[2] * z, s2 = y * y + z * z;
  std::vector<double> xs{lo, hi};
  const double qa = a * a - c * c, qb = 2.0 * a * b, qc = b * b - c * c * s2;
  if (std::abs(qa) > 1e-14) {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      xs.push_back((-qb - std::sqrt(disc)) / (2.0 * qa));
      xs.push_back((-qb + std::sqrt(disc)) / (2.0 * qa));
    }
  } else if (std::abs(qb) > 0.0) {
    xs.push_back(-qc / qb);
  }
  if (a != 0.0) xs.push_back(-b / a);
  std::sort(xs.begin(), xs.end());
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double x0 = std::max(lo, xs[i]), x1 = std::min(hi, xs[i + 1]);
    if (x0 > x1) continue;
    if (inside(0.5 * (x0 + x1)) || inside(x0) || inside(x1)) out.emplace_back(x0, x1);
  }
}

Intervals merged(Intervals v) {
  std::sort(v.begin(), v.end());
  Intervals out;
  for (const auto& iv : v) {
    if (!out.empty() && iv.first <= out.back().second)
      out.back().second = std::max(out.back().second, iv.second);
    else
      out.push_back(iv);
  }
  return out;
}

}  // namespace

std::vector<std::pair<double, double>> SpatialCutoff::row_support(double y, double z, double x_lo, double x_hi) const {
  Intervals out;
  if (!adjusted_) {
    ball_row(center_, 2.0 * radius_, y, z, x_lo, x_hi, out);
    return out;
  }
  // Inside B(0,R0) the support lies in B(xi, 2R); outside, the projection onto
  // the sphere must land within 1.75 R of xi, which bounds the angle to xi.
  const auto& ad = *adjusted_;
  const Vec3& m = ad.macro_center;
  const double R = radius_, R0 = ad.macro_radius;
  ball_row(m + ad.element, 2.0 * R, y, z, x_lo, x_hi, out);
  const double dist = norm(ad.element);
  const double reach = 1.75 * R * (1.0 + 1e-9);
  const double c = dist > 0.0 ? (R0 * R0 + dist * dist - reach * reach) / (2.0 * R0 * dist) : -1.0;
  if (c <= 1e-3) {
    ball_row(m, 2.0 * R0, y, z, x_lo, x_hi, out);
  } else {
    Intervals cone;
    cone_row((1.0 / dist) * ad.element, std::min(c, 1.0) * (1.0 - 1e-9), y - m[1], z - m[2], x_lo - m[0], x_hi - m[0],
             cone);
    for (auto& [a, b] : cone) out.emplace_back(a + m[0], b + m[0]);
  }
  return merged(std::move(out));
}

SpatialCutoff SpatialCutoff::with_ramp_width(double w) const {
  SpatialCutoff c = *this;
  c.ramp_ = w;
  return c;
}

namespace {

// Ratio constants of the radial profile; scale free, so cached per exponent.
std::pair<double, double> radial_constants(double rho, int order) {
  static std::mutex mutex;
  static std::map<double, std::pair<double, double>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(rho);
  if (it != cache.end()) return it->second;
  double grad = 0.0, lap = 0.0;
  const int samples = 20000;
  for (int i = 1; i < samples; ++i) {
    const double r = 1.0 + double(i) / samples;
    const double q = 2.0 - r;
    const double v = bridge(q, order);
    if (v <= 1e-14) continue;
    const double d1 = bridge_d1(q, order);
    const double d2 = bridge_d2(q, order);
    grad = std::max(grad, ratio(d1, v, rho));
    lap = std::max(lap, ratio(d2 - 2.0 * d1 / r, v, 2.0 * rho - 1.0));
  }
  return cache.emplace(rho, std::make_pair(grad, lap)).first->second;
}

}  // namespace

SpatialCutoff make_spatial(const Vec3& center, double radius, double rho, double box_length) {
  if (!(box_length > 0.0)) throw ValidationError("spatial cut-off: box length must be positive");
  if (!(radius > 0.0)) throw ValidationError("spatial cut-off: radius must be positive");
  if (4.0 * radius > box_length * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "spatial cut-off: scale " << radius << " too large for box " << box_length << " (need 2R <= L/2)";
    throw ValidationError(os.str());
  }
  SpatialCutoff c;
  c.center_ = center;
  c.radius_ = radius;
  c.rho_ = rho;
  c.order_ = bridge_order(rho);
  c.box_length_ = box_length;
  std::tie(c.grad_c_, c.lap_c_) = radial_constants(rho, c.order_);
  return c;
}

SpatialCutoff make_indicator(const Vec3& center, double radius, double box_length, double ramp_width) {
  if (!(box_length > 0.0) || !(radius > 0.0) || 4.0 * radius > box_length * (1.0 + 1e-12))
    throw ValidationError("indicator cut-off: invalid radius for box");
  if (ramp_width < 0.0 || ramp_width > radius) throw ValidationError("indicator cut-off: invalid ramp width");
  SpatialCutoff c;
  c.center_ = center;
  c.radius_ = radius;
  c.box_length_ = box_length;
  c.profile_ = SpatialCutoff::Profile::indicator;
  c.ramp_ = ramp_width;
  c.grad_c_ = std::numeric_limits<double>::infinity();
  c.lap_c_ = std::numeric_limits<double>::infinity();
  return c;
}

SpatialCutoff boundary_adjust(const SpatialCutoff& psi, const SpatialCutoff& psi0) {
  if (psi0.boundary_adjusted() || psi0.profile() != SpatialCutoff::Profile::smooth)
    throw ValidationError("boundary_adjust: macro cut-off must be a plain smooth radial profile");
  if (psi.boundary_adjusted()) return psi;
  if (psi.profile() != SpatialCutoff::Profile::smooth) throw ValidationError("boundary_adjust: element cut-off must be smooth");
  if (std::abs(psi.box_length() - psi0.box_length()) > 1e-12 * psi0.box_length())
    throw ValidationError("boundary_adjust: cut-offs live on different boxes");
  const double R = psi.radius(), R0 = psi0.radius();
  if (R > R0 * (1.0 + 1e-12)) throw ValidationError("boundary_adjust: element scale exceeds macro scale");
  const Vec3 xi = psi.wrap(psi.center(), psi0.center());
  const double dist = norm(xi);
  if (dist + 2.0 * R <= R0) return psi;
  if (dist >= R0 + R) {
    std::ostringstream os;
    os << "boundary_adjust: element ball at distance " << dist << " does not meet the macro ball of radius " << R0;
    throw ValidationError(os.str());
  }
  SpatialCutoff c = psi;
  c.adjusted_ = SpatialCutoff::Adjusted{psi0.center(), R0, psi0.order(), xi};
  return c;
}

// ---------------------------------------------------------------- sampling

SampledCutoff sample(const SpatialCutoff& psi, const Grid& grid, bool derivatives) {
  if (std::abs(grid.length() - psi.box_length()) > 1e-12 * grid.length())
    throw ValidationError("cut-off sampled on a grid with a different box length");
  const auto [lo, hi] = psi.support_box();
  const double h = grid.spacing();
  const int n = grid.n();
  std::array<int, 3> start{}, count{};
  for (int a = 0; a < 3; ++a) {
    start[a] = static_cast<int>(std::ceil(lo[a] / h - 1e-9));
    const int stop = static_cast<int>(std::floor(hi[a] / h + 1e-9));
    count[a] = std::min(n, stop - start[a] + 1);
  }
  SampledCutoff out;
  auto visit = [&](std::size_t idx) {
    const Vec3 y = grid.node(idx);
    if (derivatives) {
      const CutoffJet jt = psi.jet(y);
      if (jt.value <= 0.0) return;
      out.nodes.push_back(idx);
      out.value.push_back(jt.value);
      out.gradient.push_back(jt.gradient);
      out.laplacian.push_back(jt.laplacian);
    } else {
      const double v = psi.value(y);
      if (v <= 0.0) return;
      out.nodes.push_back(idx);
      out.value.push_back(v);
    }
  };
  for (int k = 0; k < count[2]; ++k)
    for (int j = 0; j < count[1]; ++j) {
      int next = 0;
      for (const auto& [xa, xb] : psi.row_support((start[1] + j) * h, (start[2] + k) * h, lo[0], hi[0])) {
        // one spacing of slack; values are still evaluated exactly
        const int i0 = std::max(next, static_cast<int>(std::floor(xa / h)) - 1 - start[0]);
        const int i1 = std::min(count[0] - 1, static_cast<int>(std::ceil(xb / h)) + 1 - start[0]);
        for (int i = i0; i <= i1; ++i) visit(grid.wrapped_index(start[0] + i, start[1] + j, start[2] + k));
        next = std::max(next, i1 + 1);
      }
    }
  return out;
}

ScalarField to_field(const SampledCutoff& s, const Grid& grid) {
  ScalarField f(grid);
  for (std::size_t i = 0; i < s.nodes.size(); ++i) f[s.nodes[i]] = s.value[i];
  return f;
}

double CutoffPair::value(const Vec3& y, double t) const {
  const double v = spatial.value(y) * temporal.value(t);
  return v <= 0.0 ? 0.0 : std::pow(v, delta_exp);
}

// ---------------------------------------------------------------- bounds

BoundReport verify_bounds(const SpatialCutoff& psi, const Grid& grid) {
  SpatialCutoff c = psi;
  if (c.profile() == SpatialCutoff::Profile::indicator && c.ramp_width() == 0.0) c = c.with_ramp_width(grid.spacing());
  const SampledCutoff s = sample(c, grid, true);
  BoundReport rep;
  rep.resolution = grid.n();
  const double R = c.radius(), rho = c.rho();
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    const double v = s.value[i];
    if (v <= 1e-14) continue;
    ++rep.samples;
    rep.gradient_ratio = std::max(rep.gradient_ratio, ratio(norm(s.gradient[i]) * R, v, rho));
    rep.laplacian_ratio = std::max(rep.laplacian_ratio, ratio(s.laplacian[i] * R * R, v, 2.0 * rho - 1.0));
  }
  return rep;
}

BoundReport verify_bounds(const TemporalCutoff& eta, int samples) {
  if (samples < 2) throw ValidationError("verify_bounds: need at least two samples");
  BoundReport rep;
  rep.resolution = samples;
  const double T = eta.horizon();
  for (int i = 0; i < samples; ++i) {
    const double t = T * (i + 0.5) / samples;
    const double v = eta.value(t);
    if (v <= 1e-14) continue;
    ++rep.samples;
    rep.gradient_ratio = std::max(rep.gradient_ratio, ratio(eta.derivative(t) * T, v, eta.rho()));
  }
  return rep;
}

namespace {

double spread(const std::vector<BoundReport>& levels, double BoundReport::*field) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& l : levels) {
    lo = std::min(lo, l.*field);
    hi = std::max(hi, l.*field);
  }
  if (hi == 0.0) return 1.0;
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

void summarize(RefinementReport& r, double tol) {
  r.gradient_spread = spread(r.levels, &BoundReport::gradient_ratio);
  r.laplacian_spread = spread(r.levels, &BoundReport::laplacian_ratio);
  r.stable = r.gradient_spread <= 1.0 + tol && r.laplacian_spread <= 1.0 + tol;
  if (!r.stable && r.levels.size() >= 2) {
    auto grows = [&](double BoundReport::*f) {
      for (std::size_t i = 1; i < r.levels.size(); ++i)
        if (!(r.levels[i].*f > r.levels[i - 1].*f)) return false;
      return r.levels.back().*f > (1.0 + tol) * r.levels.front().*f;
    };
    r.diverging = grows(&BoundReport::gradient_ratio) || grows(&BoundReport::laplacian_ratio);
  }
}

}  // namespace

RefinementReport refinement_study(const SpatialCutoff& psi, const std::vector<int>& resolutions, double tolerance) {
  RefinementReport r;
  for (int n : resolutions) r.levels.push_back(verify_bounds(psi, Grid(n, psi.box_length())));
  summarize(r, tolerance);
  return r;
}

RefinementReport refinement_study(const TemporalCutoff& eta, const std::vector<int>& samples, double tolerance) {
  RefinementReport r;
  for (int n : samples) r.levels.push_back(verify_bounds(eta, n));
  summarize(r, tolerance);
  return r;
}

}  // namespace vscope

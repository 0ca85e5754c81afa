#pragma once

#include <optional>
#include <vector>

#include "vscope/grid.hpp"

namespace vscope {

/// Smoothness order m = ceil(1/(1 - rho)) for rho in (1/2, 1).
int bridge_order(double rho);

/// Bridge B(s) = s^m / (s^m + (1-s)^m), 0 below s = 0 and 1 above s = 1.
double bridge(double s, int m);
double bridge_d1(double s, int m);
double bridge_d2(double s, int m);

class TemporalCutoff {
 public:
  TemporalCutoff(double horizon, double rho);
  /// eta == 1 everywhere; only meaningful as a degenerate test case.
  static TemporalCutoff constant(double horizon);

  double horizon() const { return horizon_; }
  double rho() const { return rho_; }
  int order() const { return order_; }
  bool is_constant() const { return constant_; }
  /// sup |eta'| T / eta^rho from dense sampling of the bridge.
  double measured_constant() const { return c0_; }

  double value(double t) const;
  double derivative(double t) const;

 private:
  TemporalCutoff() = default;
  double horizon_ = 1.0;
  double rho_ = 0.75;
  int order_ = 4;
  bool constant_ = false;
  double c0_ = 0.0;
};

TemporalCutoff make_temporal(double horizon, double rho);

struct CutoffJet {
  double value = 0.0;
  Vec3 gradient{0.0, 0.0, 0.0};
  double laplacian = 0.0;
};

/// Spatial cut-off on a periodic box. Positions are wrapped to the minimum
/// image about the cut-off's reference point before evaluation.
class SpatialCutoff {
 public:
  enum class Profile { smooth, indicator };

  const Vec3& center() const { return center_; }
  double radius() const { return radius_; }
  double rho() const { return rho_; }
  int order() const { return order_; }
  double box_length() const { return box_length_; }
  Profile profile() const { return profile_; }
  bool boundary_adjusted() const { return adjusted_.has_value(); }

  /// Measured sup |grad psi| R / psi^rho and sup |lap psi| R^2 / psi^(2 rho - 1)
  /// of the radial profile (dense 1D sampling).
  double gradient_constant() const { return grad_c_; }
  double laplacian_constant() const { return lap_c_; }

  double value(const Vec3& y) const;
  CutoffJet jet(const Vec3& y) const;

  /// Axis-aligned box containing the support, in unwrapped coordinates.
  std::pair<Vec3, Vec3> support_box() const;
  /// Sub-intervals of [x_lo, x_hi] on the line (., y, z) that may meet the
  /// support (a superset, sorted and disjoint), in unwrapped coordinates.
  std::vector<std::pair<double, double>> row_support(double y, double z, double x_lo, double x_hi) const;

  /// Width of the linear ramp used by the indicator profile.
  double ramp_width() const { return ramp_; }
  SpatialCutoff with_ramp_width(double w) const;

 private:
  friend SpatialCutoff make_spatial(const Vec3&, double, double, double);
  friend SpatialCutoff make_indicator(const Vec3&, double, double, double);
  friend SpatialCutoff boundary_adjust(const SpatialCutoff&, const SpatialCutoff&);

  struct Adjusted {
    Vec3 macro_center;
    double macro_radius;
    int macro_order;
    Vec3 element;  // element center relative to the macro center
  };

  Vec3 wrap(const Vec3& y, const Vec3& origin) const;
  CutoffJet radial_jet(const Vec3& d) const;
  CutoffJet adjusted_jet(const Vec3& p) const;

  Vec3 center_{0.0, 0.0, 0.0};
  double radius_ = 1.0;
  double rho_ = 0.75;
  int order_ = 4;
  double box_length_ = 0.0;
  Profile profile_ = Profile::smooth;
  double ramp_ = 0.0;
  double grad_c_ = 0.0;
  double lap_c_ = 0.0;
  std::optional<Adjusted> adjusted_;
};

/// psi(x) = chi(|x - x0| / R): 1 on [0,1], B(2 - r) on [1,2], 0 beyond.
SpatialCutoff make_spatial(const Vec3& center, double radius, double rho, double box_length);

/// Control profile: 1 on B(x0, 2R) minus a linear ramp of the given width
/// (0 means "one grid spacing" when sampled by verify_bounds).
SpatialCutoff make_indicator(const Vec3& center, double radius, double box_length, double ramp_width = 0.0);

/// Element cut-off adjusted to the macro cut-off psi0: unchanged when
/// B(x_i, 2R) lies in B(0, R0); otherwise blended into cone-radial form so that
/// psi = psi0 on the cone over S(0,R0) n B(x_i,R) and psi <= psi0 everywhere.
SpatialCutoff boundary_adjust(const SpatialCutoff& psi, const SpatialCutoff& psi0);

/// Cut-off values (and optionally derivatives) at the grid nodes of its support.
struct SampledCutoff {
  std::vector<std::size_t> nodes;
  std::vector<double> value;
  std::vector<Vec3> gradient;
  std::vector<double> laplacian;
};

SampledCutoff sample(const SpatialCutoff& psi, const Grid& grid, bool derivatives = true);
ScalarField to_field(const SampledCutoff& s, const Grid& grid);

struct CutoffPair {
  TemporalCutoff temporal;
  SpatialCutoff spatial;
  double delta_exp = 1.0;

  double value(const Vec3& y, double t) const;
};

struct BoundReport {
  int resolution = 0;
  /// sup |grad psi| R / psi^rho (or sup |eta'| T / eta^rho for temporal).
  double gradient_ratio = 0.0;
  /// sup |lap psi| R^2 / psi^(2 rho - 1); 0 for temporal cut-offs.
  double laplacian_ratio = 0.0;
  std::size_t samples = 0;
};

BoundReport verify_bounds(const SpatialCutoff& psi, const Grid& grid);
/// Samples eta at `samples` equispaced points of (0, T).
BoundReport verify_bounds(const TemporalCutoff& eta, int samples);

struct RefinementReport {
  std::vector<BoundReport> levels;
  /// max/min of each ratio over the levels.
  double gradient_spread = 1.0;
  double laplacian_spread = 1.0;
  bool stable = true;
  /// Ratios keep growing with resolution.
  bool diverging = false;
};

RefinementReport refinement_study(const SpatialCutoff& psi, const std::vector<int>& resolutions,
                                  double tolerance = 0.2);
RefinementReport refinement_study(const TemporalCutoff& eta, const std::vector<int>& samples, double tolerance = 0.2);

}  // namespace vscope

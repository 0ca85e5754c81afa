#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vscope/grid.hpp"
#include "vscope/solver.hpp"

namespace vscope {

/// Node-sampled super-level set {|w| > M}. When built from a field the node
/// magnitudes are kept, so segment tests can interpolate |w| itself.
struct LevelSet {
  Grid grid{8};
  std::vector<std::uint8_t> mask;
  double threshold = 0.0;
  double time = 0.0;
  std::vector<double> magnitude;  // empty for hand-built masks

  /// A set given directly by its node mask (no magnitude).
  static LevelSet from_mask(const Grid& grid, std::vector<std::uint8_t> mask, double time = 0.0);

  std::size_t count() const;
  /// Node count times cell volume.
  double volume() const { return static_cast<double>(count()) * grid.cell_volume(); }
  bool has_magnitude() const { return !magnitude.empty(); }
  /// Trilinear interpolant at x (periodic) minus the level; the indicator uses level 0.5.
  double level(const Vec3& x) const;
  /// Whether position x is inside: level > 0 (>= 0 for masks).
  bool contains(const Vec3& x) const { return inside(level(x)); }
  bool inside(double level) const { return has_magnitude() ? level > 0.0 : level >= 0.0; }
};

LevelSet level_set(const VectorField& omega, double threshold);

struct HAlpha {
  double h;
  double alpha_min;
};

/// h = (2/pi) asin((1 - d^2) / (1 + d^2)), alpha_min = (1 - h) / h, for d in (0, 1).
HAlpha h_alpha(double delta);

struct SparsenessOptions {
  int directions = 256;          // Fibonacci points on the half sphere
  int samples_per_spacing = 4;   // midpoint samples per grid spacing along a segment
  bool include_axes = true;      // also try the three coordinate axes
  bool self_check = false;       // rerun with doubled sampling and record the change
};

/// Unit directions used for a given option set; d and -d give the same segment so one hemisphere suffices.
std::vector<Vec3> sparseness_directions(const SparsenessOptions& opt);

/// Fraction of the segment (x0 - r d, x0 + r d) inside S. The level is sampled at
/// samples_per_spacing points per grid spacing and crossings are located linearly.
double occupancy(const LevelSet& s, const Vec3& x0, double r, const Vec3& d, int samples_per_spacing = 4);

struct SparsenessResult {
  Vec3 point{};
  double scale = 0.0;
  Vec3 direction{1.0, 0.0, 0.0};
  double ratio = 0.0;  // best (smallest) sampled occupancy
  double delta = 0.5;
  bool sparse = true;  // ratio <= delta
  std::optional<double> refinement_change;
};

SparsenessResult linear_sparseness(const LevelSet& s, const Vec3& x0, double r, double delta,
                                   const SparsenessOptions& opt = {});

struct ScanPoints {
  enum class Mode { all_nodes, sample };
  Mode mode = Mode::sample;
  std::uint64_t seed = 0;
  std::size_t count = 512;

  static ScanPoints all_nodes() { return {Mode::all_nodes, 0, 0}; }
  static ScanPoints sample(std::uint64_t seed, std::size_t count) { return {Mode::sample, seed, count}; }
};

struct ScanReport {
  double scale = 0.0;
  double delta = 0.5;
  std::size_t points = 0;
  std::size_t passed = 0;
  double fraction_passed = 1.0;
  bool all_sparse = true;
  SparsenessResult worst;
  std::vector<SparsenessResult> results;
};

ScanReport sparseness_scan(const LevelSet& s, double r, double delta, const ScanPoints& points = {},
                           const SparsenessOptions& opt = {});

struct CriticalityOptions {
  double c1 = 2.0;
  double c3 = 2.0;
  double delta = 0.5;
  double d0 = 1.0;
  std::optional<double> alpha;  // defaults to alpha_min(delta)
  SparsenessOptions sparseness;
  ScanPoints points;
};

struct TrendPoint {
  double time;
  double omega_max;
  double volume;
  double product;  // volume * omega_max
};

struct CriticalityReport {
  double time = 0.0;
  double c1 = 2.0, c3 = 2.0, delta = 0.5, d0 = 1.0;
  double h = 0.0, alpha = 0.0;
  double omega_max = 0.0;
  double omega_l1 = 0.0;
  double threshold = 0.0;  // omega_max / c1
  double volume = 0.0;
  double tchebyshev_bound = 0.0;  // omega_l1 / threshold
  bool tchebyshev_ok = true;
  double c2_implied = 0.0;  // volume * omega_max
  std::optional<double> cross_section;  // c3 / omega_max^(1/2)
  double sparse_threshold = 0.0;         // omega_max / d0^alpha
  std::optional<double> scale_cap;       // 1 / (2 d0^2 omega_max^(1/2))
  std::optional<double> window_start, window_end;
  bool partial = false;  // the window runs past the last snapshot
  std::optional<double> scan_time;
  std::optional<double> scan_scale;
  std::optional<ScanReport> scan;
  std::vector<TrendPoint> trend;
  std::string note;
};

CriticalityReport criticality_report(const SnapshotSequence& seq, double t, const CriticalityOptions& opt = {});

void to_json(nlohmann::json& j, const SparsenessResult& r);
void to_json(nlohmann::json& j, const ScanReport& r);
void to_json(nlohmann::json& j, const CriticalityReport& r);
/// One row per queried point: x,y,z,ratio,dx,dy,dz,sparse.
void write_csv(const std::filesystem::path& path, const ScanReport& r);
void write_mask(const std::filesystem::path& path, const LevelSet& s);

}  // namespace vscope

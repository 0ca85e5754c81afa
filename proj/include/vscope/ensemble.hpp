#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vscope/covers.hpp"
#include "vscope/cutoffs.hpp"
#include "vscope/solver.hpp"

namespace vscope {

/// Pointwise densities derived from a velocity snapshot.
enum class DensityKind {
  vorticity_squared,   // |w|^2
  enstrophy,           // |w|^2 / 2
  palinstrophy,        // |grad w|^2
  strain_stretching,   // S w . w
  stretching,          // (w . grad) u . w
  kinetic,             // |u|^2
};

std::string to_string(DensityKind k);
DensityKind density_kind(const std::string& name);

ScalarField density(const VectorField& u, DensityKind kind);

/// Density snapshots f(., s_k) for the time quadrature. Entries may share a
/// field (static densities) or be empty (known to be multiplied by zero).
class DensitySeries {
 public:
  void add(double time, std::shared_ptr<const ScalarField> field);
  std::size_t size() const { return times_.size(); }
  double time(std::size_t i) const { return times_[i]; }
  const std::shared_ptr<const ScalarField>& field(std::size_t i) const { return fields_[i]; }
  const Grid& grid() const;

  /// Density of every snapshot with time <= t; snapshots where eta vanishes are left empty.
  static DensitySeries from_sequence(const SnapshotSequence& seq, DensityKind kind, double t,
                                     const TemporalCutoff* eta = nullptr);
  /// The same field at each of the given times.
  static DensitySeries constant(std::shared_ptr<const ScalarField> field, const std::vector<double>& times);

 private:
  std::vector<double> times_;
  std::vector<std::shared_ptr<const ScalarField>> fields_;
};

struct MacroDomain {
  Vec3 center{0.0, 0.0, 0.0};
  double radius = 1.0;
};

struct EnsembleSettings {
  double horizon = 1.0;  // T
  double rho_temporal = 0.75;
  double rho_spatial = 0.75;
  double delta_exp = 1.0;

  TemporalCutoff temporal() const { return make_temporal(horizon, rho_temporal); }
};

/// psi_0 for the cover's macro ball.
SpatialCutoff macro_cutoff(const Cover& cover, double rho, double box_length);
SpatialCutoff macro_cutoff(const MacroDomain& domain, double rho, double box_length);
/// Boundary-adjusted element cut-offs psi_i of a cover.
std::vector<SpatialCutoff> element_cutoffs(const Cover& cover, const SpatialCutoff& psi0);

/// (1/t) int_0^t (1/R^3) int f phi^delta dx ds, trapezoid over the series
/// entries with time <= t. R is the cut-off's radius.
double local_average(const DensitySeries& f, const SpatialCutoff& psi, const TemporalCutoff& eta, double delta_exp,
                     double t);

struct EnsembleReport {
  double scale = 0.0;
  double time = 0.0;
  std::vector<double> values;  // per element
  double mean = 0.0;
  std::optional<double> ratio_to_p0;
  CoverBias bias = CoverBias::none;
  bool fallback = false;
};

EnsembleReport ensemble_average(const DensitySeries& f, const Cover& cover, const EnsembleSettings& s, double t);
/// F_0: the macro-ball average with phi_0^delta and 1/R0^3.
double macro_average(const DensitySeries& f, const Cover& cover, const EnsembleSettings& s, double t);

/// VST_{x,R,t} with the stretching density and phi to the first power.
double vst_local(const SnapshotSequence& seq, const SpatialCutoff& psi, const TemporalCutoff& eta, double t);
EnsembleReport vst_ensemble(const SnapshotSequence& seq, const Cover& cover, const EnsembleSettings& s, double t);
/// Same as vst_ensemble with a precomputed stretching series (shared across covers).
EnsembleReport vst_ensemble(const DensitySeries& stretching, const Cover& cover, const EnsembleSettings& s, double t);

struct FamilyReport {
  std::vector<EnsembleReport> members;
  double min_mean = 0.0;
  double max_mean = 0.0;
  bool both_signs = false;
};

FamilyReport family_average(const DensitySeries& f, const std::vector<Cover>& family, const EnsembleSettings& s,
                            double t);

struct ComparabilityReport {
  double f0 = 0.0;
  std::vector<double> ratios;  // <F>_R / F_0 per cover
  double k_star = 0.0;         // max(max ratio, 1/min ratio)
  bool all_positive = false;
};

ComparabilityReport comparability(const DensitySeries& f, const std::vector<Cover>& covers, const EnsembleSettings& s,
                                  double t);

struct MacroOptions {
  /// false: phi_0 == 1 on the whole torus (test harness).
  bool localized = true;
  /// false: omit the final-time enstrophy term from P_0.
  bool final_term = true;
};

struct MacroStats {
  double e0 = 0.0;
  double p0 = 0.0;
  std::optional<double> sigma;  // empty when P_0 = 0
  double m0 = 0.0;
};

MacroStats macro_stats(const SnapshotSequence& seq, double t, const SpatialCutoff& psi0, const TemporalCutoff& eta,
                       const MacroOptions& options = {});

struct LocalBudget {
  double vst = 0.0;
  double final_enstrophy = 0.0;
  double palinstrophy = 0.0;
  double cutoff = 0.0;
  double transport = 0.0;
  double residual = 0.0;
  /// |residual| / largest term magnitude (0 when every term vanishes).
  double relative_residual = 0.0;
};

/// Streams snapshots (in time order) and accumulates the localized
/// enstrophy budget for each element cut-off up to time t.
/// Default quadrature refinement for budgets on a grid: the element cut-offs are
/// much sharper than the flow near the macro boundary, so small grids integrate
/// on a 2x Fourier-interpolated grid.
int budget_oversampling(const Grid& grid);

class BudgetAccumulator {
 public:
  /// oversample = 0 picks budget_oversampling(grid).
  BudgetAccumulator(const Grid& grid, std::vector<SpatialCutoff> elements, TemporalCutoff eta, double viscosity,
                    double t, int oversample = 0);
  void add(double time, const VectorField& u);
  std::vector<LocalBudget> finish() const;
  std::size_t snapshots() const { return count_; }

 private:
  struct Terms {
    double vst = 0, palinstrophy = 0, cutoff = 0, transport = 0;
  };
  Grid grid_;
  Grid quad_;  // quadrature grid
  std::vector<SampledCutoff> elements_;
  TemporalCutoff eta_;
  double viscosity_;
  double t_;
  std::size_t count_ = 0;
  double prev_time_ = 0.0;
  std::vector<Terms> prev_, sum_;
  std::vector<double> final_;
  bool reached_end_ = false;
};

std::vector<LocalBudget> budget_check(const SnapshotSequence& seq, const std::vector<SpatialCutoff>& elements,
                                      const TemporalCutoff& eta, double t, int oversample = 0);

struct TheoremOptions {
  std::vector<double> scales;
  std::size_t family_size = 5;
  double c_report = 1.0;
  int k1 = 8;
  int k2 = 27;
  std::uint64_t seed = 0;
  EnsembleSettings settings;
};

struct ScaleResult {
  double scale = 0.0;
  std::vector<double> ratios;  // <VST>_R / P_0 per family member
  std::vector<EnsembleReport> members;
};

struct TheoremReport {
  MacroStats macro;
  double lower = 0.0;  // C max(M0^1/2, 1) sigma^1/2
  double macro_radius = 0.0;
  bool applicable = false;
  std::string reason;  // why not applicable
  std::vector<ScaleResult> scales;
  std::vector<double> skipped_scales;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double c_emp = 0.0;
  bool all_positive = false;
};

/// Requires t in (2T/3, T] and R0 <= sqrt(T).
TheoremReport theorem_check(const SnapshotSequence& seq, double t, const MacroDomain& domain,
                            const TheoremOptions& options);

void to_json(nlohmann::json& j, const EnsembleReport& r);
void to_json(nlohmann::json& j, const MacroStats& m);
void to_json(nlohmann::json& j, const LocalBudget& b);
void to_json(nlohmann::json& j, const TheoremReport& r);

/// One row per (scale, cover, element).
void write_csv(const std::filesystem::path& path, const std::vector<EnsembleReport>& reports);

}  // namespace vscope

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vscope/covers.hpp"
#include "vscope/ensemble.hpp"
#include "vscope/solver.hpp"
#include "vscope/sparseness.hpp"

namespace vscope {

struct MacroConfig {
  double radius = 1.0;
  std::optional<Vec3> center;  // defaults to the box centre
};

struct CoverConfig {
  std::vector<double> scales;
  int k1 = 8;
  int k2 = 27;
  std::size_t family_size = 5;
  std::uint64_t seed = 0;
  CoverStrategy strategy = CoverStrategy::jittered;
};

struct CutoffConfig {
  double rho_temporal = 0.75;
  double rho_spatial = 0.75;
  double delta_exp = 1.0;
};

struct DiagnosticConfig {
  std::vector<double> times;  // empty: the last snapshot
  bool theorem_check = false;
  double c_report = 1.0;
  DensityKind density = DensityKind::vorticity_squared;
};

struct SparsenessConfig {
  double delta = 0.5;
  double d0 = 1.0;
  double c1 = 2.0;
  double c3 = 2.0;
  int directions = 256;
  int samples_per_spacing = 4;
  std::size_t points = 512;
  std::uint64_t seed = 0;
};

/// Everything a CLI run needs; read from JSON, overridden by flags.
struct RunConfig {
  SolverConfig solver = default_solver();
  MacroConfig macro;
  CoverConfig covers;
  CutoffConfig cutoffs;
  DiagnosticConfig diagnostics;
  SparsenessConfig sparseness;
  int threads = 0;  // 0: library default

  static SolverConfig default_solver();

  Vec3 macro_center() const;
  MacroDomain macro_domain() const { return {macro_center(), macro.radius}; }
  EnsembleSettings settings() const;
  CriticalityOptions criticality() const;
  /// Configured scales, or R0/2 when none are given.
  std::vector<double> scales() const;

  /// Throws ValidationError naming the first violated constraint.
  void validate() const;
};

RunConfig load_config(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const RunConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, RunConfig& c);

}  // namespace vscope

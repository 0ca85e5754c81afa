#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "vscope/grid.hpp"

namespace vscope {

enum class CoverStrategy { lattice, jittered };
enum class CoverBias { none, positive, negative };

std::string to_string(CoverStrategy s);
std::string to_string(CoverBias b);

/// Balls B(x_i, R) covering the macro ball B(0, R0). Centers are stored
/// relative to the macro center.
struct Cover {
  Vec3 macro_center{0.0, 0.0, 0.0};
  double macro_radius = 1.0;
  double scale = 1.0;
  std::vector<Vec3> centers;
  int k1 = 8;
  int k2 = 27;
  CoverStrategy strategy = CoverStrategy::lattice;
  CoverBias bias = CoverBias::none;
  std::uint64_t seed = 0;
  /// Set when a biased construction could not be repaired and the lattice cover was used.
  bool fallback = false;

  std::size_t size() const { return centers.size(); }
  /// (R0/R)^3
  double count_lower() const;
  /// K1 (R0/R)^3
  double count_upper() const;
  /// Center of element i in box coordinates.
  Vec3 absolute_center(std::size_t i) const;
};

struct CoverOptions {
  Vec3 macro_center{0.0, 0.0, 0.0};
  int k1 = 8;
  int k2 = 27;
  CoverStrategy strategy = CoverStrategy::jittered;
  std::uint64_t seed = 0;
};

/// Certified cover at scale R built from a body-centred cubic lattice
/// (cube side 1.6R, optionally jittered by up to 1/16 of the side) pruned greedily.
/// Throws ValidationError naming the violated bound when certification fails.
Cover generate(double macro_radius, double scale, const Grid& grid, const CoverOptions& options = {});

struct CertReport {
  std::size_t count = 0;
  std::size_t nodes_checked = 0;
  std::size_t uncovered_nodes = 0;
  int max_multiplicity = 0;
  double count_lower = 0.0;
  double count_upper = 0.0;
  bool coverage_ok = false;
  bool multiplicity_ok = false;
  bool count_ok = false;
  bool passed = false;
  /// Human-readable list of violated conditions; empty when passed.
  std::vector<std::string> failures;
};

/// Exhaustive membership count over grid nodes inside B(0, R0): coverage uses
/// |y - x_i| < R, multiplicity counts |y - x_i| <= 2R.
CertReport certify(const Cover& cover, const Grid& grid);

/// Smallest scale certify accepts on this grid (8 spacings).
double minimum_scale(const Grid& grid);

struct FamilyOptions {
  Vec3 macro_center{0.0, 0.0, 0.0};
  int k1 = 8;
  int k2 = 27;
  std::size_t count = 3;
  std::uint64_t seed = 0;
};

/// Covers cycling through positive-biased, negative-biased and unbiased
/// jittered members. Biased members favour elements whose local mass of
/// `density` has the requested sign; all members are certified.
std::vector<Cover> adversarial_family(const ScalarField& density, double macro_radius, double scale,
                                      const FamilyOptions& options);

void to_json(nlohmann::json& j, const Cover& c);
void from_json(const nlohmann::json& j, Cover& c);
void to_json(nlohmann::json& j, const CertReport& r);

}  // namespace vscope

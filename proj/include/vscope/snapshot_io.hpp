#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "vscope/grid.hpp"
#include "vscope/solver.hpp"

namespace vscope {

// Layout (all little-endian):
//   0  char[4]  magic "VSCP"
//   4  u32      version
//   8  u32      n_points
//  12  u32      field kind
//  16  f64      box_length
//  24  f64      time
//  32  f64      viscosity
//  40  24 bytes reserved (zero)
//  64  f64[]    payload, component-major, x-fastest within a component
enum class FieldKind : std::uint32_t { scalar = 0, velocity = 1, vorticity = 2 };

inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr std::size_t kSnapshotHeaderBytes = 64;

struct SnapshotHeader {
  std::uint32_t version = kSnapshotVersion;
  int n_points = 0;
  FieldKind kind = FieldKind::velocity;
  double box_length = 0.0;
  double time = 0.0;
  double viscosity = 0.0;

  int components() const { return kind == FieldKind::scalar ? 1 : 3; }
};

void write_snapshot(const std::filesystem::path& path, const VectorField& field, double viscosity,
                    FieldKind kind = FieldKind::velocity);
void write_snapshot(const std::filesystem::path& path, const ScalarField& field, double viscosity);

SnapshotHeader read_snapshot_header(const std::filesystem::path& path);
VectorField read_vector_snapshot(const std::filesystem::path& path);
ScalarField read_scalar_snapshot(const std::filesystem::path& path);

/// Velocity snapshot files in a directory, ordered by time; payloads load lazily.
class SnapshotDirectory : public SnapshotSequence {
 public:
  explicit SnapshotDirectory(const std::filesystem::path& dir);

  std::size_t size() const override { return entries_.size(); }
  double time(std::size_t i) const override { return entries_[i].header.time; }
  VectorField velocity(std::size_t i) const override { return read_vector_snapshot(entries_[i].path); }
  const Grid& grid() const override { return grid_; }
  double viscosity() const override { return viscosity_; }

 private:
  struct Entry {
    std::filesystem::path path;
    SnapshotHeader header;
  };
  std::vector<Entry> entries_;
  Grid grid_{8};
  double viscosity_ = 0.0;
};

std::string snapshot_file_name(std::size_t index);

/// Raw node mask, one byte per node, x-fastest, no header.
void write_mask(const std::filesystem::path& path, const std::vector<std::uint8_t>& mask);

}  // namespace vscope

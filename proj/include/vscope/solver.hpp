#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vscope/grid.hpp"
#include "vscope/spectral.hpp"

namespace vscope {

struct InitialCondition {
  enum class Kind { taylor_green, taylor_green_3d, abc, random };

  static InitialCondition taylor_green() { return {Kind::taylor_green}; }
  /// (sin x cos y cos z, -cos x sin y cos z, 0); not an exact solution, has nonzero stretching.
  static InitialCondition taylor_green_3d() { return {Kind::taylor_green_3d}; }
  static InitialCondition abc(double a, double b, double c) {
    InitialCondition ic{Kind::abc};
    ic.a = a;
    ic.b = b;
    ic.c = c;
    return ic;
  }
  static InitialCondition random(std::uint64_t seed, double spectrum_slope, double peak_wavenumber, double rms_velocity = 1.0) {
    InitialCondition ic{Kind::random};
    ic.seed = seed;
    ic.spectrum_slope = spectrum_slope;
    ic.peak_wavenumber = peak_wavenumber;
    ic.rms_velocity = rms_velocity;
    return ic;
  }

  Kind kind = Kind::taylor_green;
  double a = 1.0, b = 1.0, c = 1.0;
  std::uint64_t seed = 0;
  double spectrum_slope = 4.0;
  double peak_wavenumber = 4.0;
  double rms_velocity = 1.0;
};

std::string to_string(InitialCondition::Kind kind);
InitialCondition::Kind initial_condition_kind(const std::string& name);

struct SolverConfig {
  Grid grid{64};
  double viscosity = 1.0;
  double dt = 1e-3;
  double t_end = 0.0;
  int snapshot_stride = 1;
  InitialCondition initial_condition;
  bool dealias = true;
  double max_cfl = 0.5;
  /// Where to write the offending state when a step produces NaN; empty disables.
  std::string dump_path;

  void validate() const;
  int step_count() const;
  double time_of_step(int k) const;
};

/// Divergence-free initial velocity on the grid.
VectorField initial_condition(const InitialCondition& ic, const Grid& grid);

/// Analytic 2D Taylor-Green velocity at time t (decays as exp(-2 nu k^2 t)).
VectorField taylor_green_exact(const Grid& grid, double viscosity, double t);

/// One integrating-factor RK4 step of size cfg.dt.
VectorField step(const VectorField& u, const SolverConfig& cfg);

struct Snapshot {
  double time;
  VectorField velocity;
};

struct StepRecord {
  int step;
  double time;
  double energy;
  double dissipation_rate;  // nu * ||grad u||^2
  double max_vorticity;
  double cfl;
};

/// Time-ordered velocity snapshots, possibly backed by files.
class SnapshotSequence {
 public:
  virtual ~SnapshotSequence() = default;
  virtual std::size_t size() const = 0;
  virtual double time(std::size_t i) const = 0;
  virtual VectorField velocity(std::size_t i) const = 0;
  virtual const Grid& grid() const = 0;
  virtual double viscosity() const = 0;
  /// Snapshot index whose time equals t (within 1e-9 relative); throws otherwise.
  std::size_t index_at(double t) const;
  /// Snapshot index with time closest to t.
  std::size_t nearest(double t) const;
};

class Trajectory : public SnapshotSequence {
 public:
  explicit Trajectory(SolverConfig cfg) : config_(std::move(cfg)) {}

  std::size_t size() const override { return snapshots_.size(); }
  double time(std::size_t i) const override { return snapshots_[i].time; }
  VectorField velocity(std::size_t i) const override { return snapshots_[i].velocity; }
  const Grid& grid() const override { return config_.grid; }
  double viscosity() const override { return config_.viscosity; }

  const SolverConfig& config() const { return config_; }
  const std::vector<Snapshot>& snapshots() const { return snapshots_; }
  const std::vector<StepRecord>& steps() const { return steps_; }
  void add_snapshot(Snapshot s);
  void add_step(const StepRecord& r) { steps_.push_back(r); }

 private:
  SolverConfig config_;
  std::vector<Snapshot> snapshots_;
  std::vector<StepRecord> steps_;
};

struct RunSummary {
  std::vector<StepRecord> steps;
  /// nu * int_0^t ||grad u||^2 by the trapezoid rule over steps.
  double dissipated = 0.0;
  std::size_t snapshot_count = 0;
};

using SnapshotObserver = std::function<void(const Snapshot&)>;

/// Runs to cfg.t_end, handing every stride-th state (and the final one) to observer.
RunSummary simulate(const SolverConfig& cfg, const SnapshotObserver& observer);
Trajectory simulate(const SolverConfig& cfg);

}  // namespace vscope

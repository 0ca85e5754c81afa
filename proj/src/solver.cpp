#include "vscope/solver.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "vscope/snapshot_io.hpp"

namespace vscope {

std::string to_string(InitialCondition::Kind kind) {
  switch (kind) {
    case InitialCondition::Kind::taylor_green: return "taylor_green";
    case InitialCondition::Kind::taylor_green_3d: return "taylor_green_3d";
    case InitialCondition::Kind::abc: return "abc";
    case InitialCondition::Kind::random: return "random";
  }
  return "unknown";
}

InitialCondition::Kind initial_condition_kind(const std::string& name) {
  for (auto k : {InitialCondition::Kind::taylor_green, InitialCondition::Kind::taylor_green_3d, InitialCondition::Kind::abc,
                 InitialCondition::Kind::random})
    if (to_string(k) == name) return k;
  throw ValidationError("unknown initial condition '" + name + "'");
}

void SolverConfig::validate() const {
  if (!(viscosity > 0.0)) throw ValidationError("solver: viscosity must be positive");
  if (!(dt > 0.0)) throw ValidationError("solver: dt must be positive");
  if (!(t_end >= 0.0)) throw ValidationError("solver: t_end must be non-negative");
  if (snapshot_stride < 1) throw ValidationError("solver: snapshot_stride must be >= 1");
  if (!(max_cfl > 0.0)) throw ValidationError("solver: max_cfl must be positive");
  if (initial_condition.kind == InitialCondition::Kind::random) {
    if (!(initial_condition.peak_wavenumber > 0.0)) throw ValidationError("solver: peak_wavenumber must be positive");
    if (!(initial_condition.rms_velocity > 0.0)) throw ValidationError("solver: rms_velocity must be positive");
  }
}

int SolverConfig::step_count() const {
  if (t_end == 0.0) return 0;
  return static_cast<int>(std::ceil(t_end / dt - 1e-9));
}

double SolverConfig::time_of_step(int k) const { return k == step_count() ? t_end : k * dt; }

namespace {

struct NonFinite {};

bool dealias_keep(const Mode& m, int n, bool dealias) {
  if (m.nyquist) return false;
  if (!dealias) return true;
  return 3 * std::abs(m.kx) <= n && 3 * std::abs(m.ky) <= n && 3 * std::abs(m.kz) <= n;
}

double wavenumber_squared(const Mode& m, double ku) {
  return ku * ku * (double(m.kx) * m.kx + double(m.ky) * m.ky + double(m.kz) * m.kz);
}

// Spectral state stepping for u_t = P(u x w) + nu Lap u.
class Integrator {
 public:
  explicit Integrator(const SolverConfig& cfg) : cfg_(cfg), grid_(cfg.grid), mask_(Spectrum(grid_).size()), k2_(mask_.size()) {
    for_each_mode(grid_, [&](const Mode& m) {
      mask_[m.idx] = dealias_keep(m, grid_.n(), cfg_.dealias) ? 1.0 : 0.0;
      k2_[m.idx] = wavenumber_squared(m, grid_.k_unit());
    });
  }

  struct Stats {
    double max_velocity = 0.0;
    double max_vorticity = 0.0;
  };

  void truncate(VectorSpectrum& s) const {
    for (auto& c : s)
      for (std::size_t i = 0; i < c.size(); ++i) c[i] *= mask_[i];
  }

  // Projected, dealiased Lamb vector u x w into `out`; fills stats for the input state.
  void nonlinear(const VectorSpectrum& u_hat, VectorSpectrum& out, Stats* stats) const {
    to_physical(u_hat, u_);
    curl(u_hat, w_hat_);
    to_physical(w_hat_, w_);
    double umax = 0.0, wmax = 0.0;
    bool finite = true;
    auto ux = u_.component(0), uy = u_.component(1), uz = u_.component(2);
    auto wx = w_.component(0), wy = w_.component(1), wz = w_.component(2);
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      const double vx = ux[i], vy = uy[i], vz = uz[i];
      const double lx = vy * wz[i] - vz * wy[i];
      const double ly = vz * wx[i] - vx * wz[i];
      const double lz = vx * wy[i] - vy * wx[i];
      ux[i] = lx;
      uy[i] = ly;
      uz[i] = lz;
      finite = finite && std::isfinite(lx) && std::isfinite(ly) && std::isfinite(lz);
      umax = std::max(umax, vx * vx + vy * vy + vz * vz);
      wmax = std::max(wmax, wx[i] * wx[i] + wy[i] * wy[i] + wz[i] * wz[i]);
    }
    if (!finite || !std::isfinite(umax) || !std::isfinite(wmax)) throw NonFinite{};
    if (stats) {
      stats->max_velocity = std::sqrt(umax);
      stats->max_vorticity = std::sqrt(wmax);
    }
    to_spectral(u_, out);
    project_solenoidal(out);
    truncate(out);
  }

  // exp(-nu k^2 tau), cached per tau.
  const std::vector<double>& decay_factors(double tau) const {
    auto it = decay_cache_.find(tau);
    if (it == decay_cache_.end()) {
      std::vector<double> f(k2_.size());
      for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::exp(-cfg_.viscosity * k2_[i] * tau);
      it = decay_cache_.emplace(tau, std::move(f)).first;
    }
    return it->second;
  }

  // Integrating-factor RK4 with v = exp(nu k^2 t) u_hat.
  VectorSpectrum advance(const VectorSpectrum& u0, double dt, Stats* stats) const {
    nonlinear(u0, k1_, stats);
    const double cfl = stats ? stats->max_velocity * dt / grid_.spacing() : 0.0;
    if (stats && cfl > cfg_.max_cfl) {
      std::ostringstream os;
      os << "step rejected: CFL " << cfl << " exceeds " << cfg_.max_cfl << " (max|u| = " << stats->max_velocity
         << ", dt = " << dt << ")";
      throw NumericalError(os.str());
    }
    const std::vector<double>& eh = decay_factors(0.5 * dt);
    const std::vector<double>& ef = decay_factors(dt);
    const std::size_t m = eh.size();

    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < m; ++i) stage_[c][i] = eh[i] * (u0[c][i] + 0.5 * dt * k1_[c][i]);
    nonlinear(stage_, k2_hat_, nullptr);

    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < m; ++i) stage_[c][i] = eh[i] * u0[c][i] + 0.5 * dt * k2_hat_[c][i];
    nonlinear(stage_, k3_, nullptr);

    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < m; ++i) stage_[c][i] = ef[i] * u0[c][i] + dt * (eh[i] * k3_[c][i]);
    nonlinear(stage_, k4_, nullptr);

    // u1 = E u0 + dt/6 (E k1 + 2 E_half (k2 + k3) + k4)
    VectorSpectrum out{Spectrum(grid_), Spectrum(grid_), Spectrum(grid_)};
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < m; ++i) {
        const Complex a = eh[i] * (u0[c][i] + (dt / 6.0) * k1_[c][i]);
        const Complex b = eh[i] * (a + (dt / 3.0) * (k2_hat_[c][i] + k3_[c][i]));
        out[c][i] = b + (dt / 6.0) * k4_[c][i];
      }
    return out;
  }

  double energy(const VectorSpectrum& s) const {
    const double vol = std::pow(grid_.length(), 3);
    return 0.5 * vol * (s[0].power() + s[1].power() + s[2].power());
  }

  double dissipation_rate(const VectorSpectrum& s) const {
    const int n = grid_.n();
    double sum = 0.0;
    for_each_mode(grid_, [&](const Mode& m) {
      const double w = (m.kx == 0 || m.kx == n / 2) ? 1.0 : 2.0;
      sum += w * k2_[m.idx] * (std::norm(s[0][m.idx]) + std::norm(s[1][m.idx]) + std::norm(s[2][m.idx]));
    });
    return cfg_.viscosity * std::pow(grid_.length(), 3) * sum;
  }

 private:
  const SolverConfig& cfg_;
  Grid grid_;
  std::vector<double> mask_;
  std::vector<double> k2_;
  mutable std::map<double, std::vector<double>> decay_cache_;
  // work buffers reused across stages
  mutable VectorField u_{grid_}, w_{grid_};
  mutable VectorSpectrum w_hat_{Spectrum(grid_), Spectrum(grid_), Spectrum(grid_)};
  mutable VectorSpectrum k1_ = w_hat_, k2_hat_ = w_hat_, k3_ = w_hat_, k4_ = w_hat_, stage_ = w_hat_;
};

bool all_finite(const VectorSpectrum& s) {
  for (const auto& c : s)
    for (const auto& v : c.data())
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

}  // namespace

VectorField taylor_green_exact(const Grid& grid, double viscosity, double t) {
  const double k = grid.k_unit();
  const double amp = std::exp(-2.0 * viscosity * k * k * t);
  VectorField u(grid, t);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3 x = grid.node(i);
    u.component(0)[i] = amp * std::sin(k * x[0]) * std::cos(k * x[1]);
    u.component(1)[i] = -amp * std::cos(k * x[0]) * std::sin(k * x[1]);
  }
  return u;
}

VectorField initial_condition(const InitialCondition& ic, const Grid& grid) {
  const double k = grid.k_unit();
  VectorField u(grid, 0.0);
  switch (ic.kind) {
    case InitialCondition::Kind::taylor_green:
      return taylor_green_exact(grid, 1.0, 0.0);
    case InitialCondition::Kind::taylor_green_3d:
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vec3 x = grid.node(i);
        u.component(0)[i] = std::sin(k * x[0]) * std::cos(k * x[1]) * std::cos(k * x[2]);
        u.component(1)[i] = -std::cos(k * x[0]) * std::sin(k * x[1]) * std::cos(k * x[2]);
      }
      return u;
    case InitialCondition::Kind::abc:
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vec3 x = grid.node(i);
        u.component(0)[i] = ic.a * std::sin(k * x[2]) + ic.c * std::cos(k * x[1]);
        u.component(1)[i] = ic.b * std::sin(k * x[0]) + ic.a * std::cos(k * x[2]);
        u.component(2)[i] = ic.c * std::sin(k * x[1]) + ic.b * std::cos(k * x[0]);
      }
      return u;
    case InitialCondition::Kind::random: {
      // White noise, shaped to E(k) ~ (k/kp)^s exp(-(s/2)(k/kp)^2) shell spectrum,
      // projected, truncated to the dealiased band and scaled to the target rms.
      std::mt19937_64 rng(ic.seed);
      std::normal_distribution<double> normal;
      for (int a = 0; a < 3; ++a)
        for (auto& v : u.component(a)) v = normal(rng);
      VectorSpectrum s = to_spectral(u);
      const double kp = ic.peak_wavenumber;
      const double slope = ic.spectrum_slope;
      for_each_mode(grid, [&](const Mode& m) {
        const double kk = std::sqrt(wavenumber_squared(m, k));
        double amp = 0.0;
        if (kk > 0.0 && dealias_keep(m, grid.n(), true)) {
          const double q = kk / kp;
          const double shell = std::pow(q, slope) * std::exp(-0.5 * slope * q * q);
          amp = std::sqrt(shell / (kk * kk));
        }
        for (int a = 0; a < 3; ++a) s[a][m.idx] *= amp;
      });
      project_solenoidal(s);
      const double mean_sq = s[0].power() + s[1].power() + s[2].power();
      if (!(mean_sq > 0.0)) throw ValidationError("random initial condition: empty spectrum band");
      const double scale = ic.rms_velocity / std::sqrt(mean_sq / 3.0);
      for (auto& c : s)
        for (auto& v : c.data()) v *= scale;
      return to_physical(s, 0.0);
    }
  }
  return u;
}

VectorField step(const VectorField& u, const SolverConfig& cfg) {
  cfg.validate();
  require_same_grid(u.grid(), cfg.grid, "step");
  Integrator integ(cfg);
  VectorSpectrum s = to_spectral(u);
  integ.truncate(s);
  Integrator::Stats stats;
  VectorSpectrum next{Spectrum(cfg.grid), Spectrum(cfg.grid), Spectrum(cfg.grid)};
  try {
    next = integ.advance(s, cfg.dt, &stats);
  } catch (const NonFinite&) {
    throw NumericalError("step produced non-finite values");
  }
  if (!all_finite(next)) throw NumericalError("step produced non-finite values");
  return to_physical(next, u.time() + cfg.dt);
}

std::size_t SnapshotSequence::index_at(double t) const {
  const std::size_t i = nearest(t);
  const double tol = 1e-9 * std::max(1.0, std::abs(t));
  if (std::abs(time(i) - t) > tol) {
    std::ostringstream os;
    os << "no snapshot at t = " << t << " (nearest " << time(i) << ")";
    throw ValidationError(os.str());
  }
  return i;
}

std::size_t SnapshotSequence::nearest(double t) const {
  if (size() == 0) throw ValidationError("empty trajectory");
  std::size_t best = 0;
  for (std::size_t i = 1; i < size(); ++i)
    if (std::abs(time(i) - t) < std::abs(time(best) - t)) best = i;
  return best;
}

void Trajectory::add_snapshot(Snapshot s) {
  if (!snapshots_.empty() && !(s.time > snapshots_.back().time))
    throw ValidationError("trajectory: snapshot times must be strictly increasing");
  snapshots_.push_back(std::move(s));
}

RunSummary simulate(const SolverConfig& cfg, const SnapshotObserver& observer) {
  cfg.validate();
  Integrator integ(cfg);
  VectorField u0 = initial_condition(cfg.initial_condition, cfg.grid);
  VectorSpectrum state = to_spectral(u0);
  project_solenoidal(state);
  integ.truncate(state);

  RunSummary summary;
  const int steps = cfg.step_count();
  auto emit = [&](double t) {
    if (observer) observer(Snapshot{t, to_physical(state, t)});
    ++summary.snapshot_count;
  };
  emit(0.0);

  double prev_rate = integ.dissipation_rate(state);
  for (int k = 0; k < steps; ++k) {
    const double t = cfg.time_of_step(k);
    const double dt = cfg.time_of_step(k + 1) - t;
    Integrator::Stats stats;
    VectorSpectrum next{Spectrum(cfg.grid), Spectrum(cfg.grid), Spectrum(cfg.grid)};
    bool finite = true;
    try {
      next = integ.advance(state, dt, &stats);
    } catch (const NonFinite&) {
      finite = false;
    }
    if (!finite || !all_finite(next)) {
      std::string msg = "non-finite state after step " + std::to_string(k + 1);
      if (!cfg.dump_path.empty()) {
        write_snapshot(cfg.dump_path, to_physical(state, t), cfg.viscosity);
        msg += "; last finite state written to " + cfg.dump_path;
      }
      throw NumericalError(msg);
    }
    summary.steps.push_back(StepRecord{k, t, integ.energy(state), prev_rate, stats.max_vorticity,
                                       stats.max_velocity * dt / cfg.grid.spacing()});
    state = std::move(next);
    const double rate = integ.dissipation_rate(state);
    summary.dissipated += 0.5 * dt * (prev_rate + rate);
    prev_rate = rate;
    if ((k + 1) % cfg.snapshot_stride == 0 || k + 1 == steps) emit(cfg.time_of_step(k + 1));
  }
  const double wmax = max_magnitude(to_physical(curl(state)));
  summary.steps.push_back(StepRecord{steps, cfg.t_end, integ.energy(state), prev_rate, wmax, 0.0});
  return summary;
}

Trajectory simulate(const SolverConfig& cfg) {
  Trajectory traj(cfg);
  RunSummary summary = simulate(cfg, [&](const Snapshot& s) { traj.add_snapshot(s); });
  for (const auto& r : summary.steps) traj.add_step(r);
  return traj;
}

}  // namespace vscope

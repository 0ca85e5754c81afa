#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "test_helpers.hpp"
#include "vscope/snapshot_io.hpp"
#include "vscope/solver.hpp"

using namespace vscope;

namespace {

SolverConfig tg_config(int n, double nu, double dt, double t_end) {
  SolverConfig cfg;
  cfg.grid = Grid(n);
  cfg.viscosity = nu;
  cfg.dt = dt;
  cfg.t_end = t_end;
  cfg.initial_condition = InitialCondition::taylor_green();
  return cfg;
}

double field_diff(const VectorField& a, const VectorField& b) {
  double m = 0.0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < a.grid().size(); ++i) m = std::max(m, std::abs(a.component(c)[i] - b.component(c)[i]));
  return m;
}

}  // namespace

TEST_CASE("rest state stays at rest") {
  SolverConfig cfg = tg_config(16, 0.1, 0.01, 0.1);
  VectorField u(cfg.grid);
  VectorField v = step(u, cfg);
  CHECK(max_magnitude(v) == 0.0);
  CHECK(v.time() == doctest::Approx(0.01));
}

TEST_CASE("taylor-green follows the analytic decay") {
  SolverConfig cfg = tg_config(16, 0.1, 0.01, 0.5);
  cfg.snapshot_stride = 10;
  Trajectory traj = simulate(cfg);
  REQUIRE(traj.size() == 6);
  CHECK(traj.time(5) == doctest::Approx(0.5));
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const VectorField exact = taylor_green_exact(cfg.grid, cfg.viscosity, traj.time(i));
    CHECK(field_diff(traj.velocity(i), exact) < 1e-6);
  }
  const double e0 = kinetic_energy(traj.velocity(0));
  const double e1 = kinetic_energy(traj.velocity(5));
  CHECK(std::abs(e1 - std::exp(-4.0 * 0.1 * 0.5) * e0) / e0 < 1e-5);

  const auto& steps = traj.steps();
  for (std::size_t k = 1; k < steps.size(); ++k) CHECK(steps[k].energy <= steps[k - 1].energy * (1 + 1e-14));
  CHECK(relative_divergence(traj.velocity(5)) < 1e-12);
}

TEST_CASE("unit viscosity energy at t=0.5") {
  SolverConfig cfg = tg_config(16, 1.0, 1e-3, 0.5);
  cfg.snapshot_stride = 1000;
  Trajectory traj = simulate(cfg);
  const double e0 = kinetic_energy(traj.velocity(0));
  const double e1 = kinetic_energy(traj.velocity(traj.size() - 1));
  CHECK(std::abs(e1 / e0 - std::exp(-2.0)) < 1e-5);
}

TEST_CASE("zero end time yields only the initial snapshot") {
  SolverConfig cfg = tg_config(16, 0.1, 0.01, 0.0);
  Trajectory traj = simulate(cfg);
  REQUIRE(traj.size() == 1);
  CHECK(traj.time(0) == 0.0);
  CHECK(field_diff(traj.velocity(0), taylor_green_exact(cfg.grid, 0.1, 0.0)) < 1e-14);
}

TEST_CASE("partial final step lands on the end time") {
  SolverConfig cfg = tg_config(16, 0.1, 0.03, 0.1);
  CHECK(cfg.step_count() == 4);
  Trajectory traj = simulate(cfg);
  CHECK(traj.time(traj.size() - 1) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(field_diff(traj.velocity(traj.size() - 1), taylor_green_exact(cfg.grid, 0.1, 0.1)) < 1e-6);
}

TEST_CASE("random initial condition") {
  const Grid g(32);
  const auto ic = InitialCondition::random(7, 4.0, 3.0, 0.5);
  const VectorField a = initial_condition(ic, g);
  const VectorField b = initial_condition(ic, g);
  CHECK(field_diff(a, b) == 0.0);
  const VectorField c = initial_condition(InitialCondition::random(8, 4.0, 3.0, 0.5), g);
  CHECK(field_diff(a, c) > 0.01);
  CHECK(relative_divergence(a) < 1e-12);
  double sq = 0.0;
  for (int k = 0; k < 3; ++k)
    for (double v : a.component(k)) sq += v * v;
  CHECK(std::sqrt(sq / (3.0 * g.size())) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("abc flow is a Beltrami field") {
  const Grid g(16);
  const VectorField u = initial_condition(InitialCondition::abc(1.0, 0.7, 0.4), g);
  CHECK(field_diff(curl(u), u) < 1e-12);
}

TEST_CASE("energy inequality on a turbulent run") {
  SolverConfig cfg;
  cfg.grid = Grid(32);
  cfg.viscosity = 0.02;
  cfg.dt = 0.01;
  cfg.t_end = 1.0;
  cfg.snapshot_stride = 100;
  cfg.initial_condition = InitialCondition::random(3, 4.0, 3.0, 0.5);
  RunSummary s = simulate(cfg, nullptr);
  const double e0 = s.steps.front().energy, e1 = s.steps.back().energy;
  CHECK(s.snapshot_count == 2);
  for (std::size_t k = 1; k < s.steps.size(); ++k) CHECK(s.steps[k].energy <= s.steps[k - 1].energy);
  CHECK(e1 + s.dissipated <= e0 * (1 + 1e-4));
  CHECK(std::abs(e1 + s.dissipated - e0) / e0 < 1e-3);
}

TEST_CASE("fourth order in time") {
  // Self-convergence on 3D Taylor-Green (the 2D flow is reproduced exactly).
  auto run = [](double dt) {
    SolverConfig cfg;
    cfg.grid = Grid(16);
    cfg.viscosity = 0.05;
    cfg.dt = dt;
    cfg.t_end = 0.8;
    cfg.snapshot_stride = 100000;
    cfg.initial_condition = InitialCondition::taylor_green_3d();
    Trajectory t = simulate(cfg);
    return t.velocity(t.size() - 1);
  };
  const VectorField ref = run(0.005);
  const double e1 = field_diff(run(0.1), ref);
  const double e2 = field_diff(run(0.05), ref);
  const double e3 = field_diff(run(0.025), ref);
  MESSAGE("ratios " << e1 / e2 << " " << e2 / e3);
  CHECK(e1 / e2 > 12.0);
  CHECK(e2 / e3 > 12.0);
  CHECK(e2 / e3 < 20.0);
}

TEST_CASE("numerical failures") {
  SUBCASE("cfl violation") {
    SolverConfig cfg = tg_config(16, 0.1, 0.5, 1.0);
    CHECK_THROWS_AS(simulate(cfg), NumericalError);
  }
  SUBCASE("overflow dumps the last finite state") {
    const auto path = std::filesystem::temp_directory_path() / "vscope_test_dump.vscp";
    std::filesystem::remove(path);
    SolverConfig cfg = tg_config(16, 0.1, 0.01, 0.05);
    cfg.initial_condition = InitialCondition::abc(1e200, 1e200, 1e200);
    cfg.max_cfl = 1e300;
    cfg.dump_path = path.string();
    CHECK_THROWS_AS(simulate(cfg), NumericalError);
    CHECK(std::filesystem::exists(path));
    std::filesystem::remove(path);
  }
}

TEST_CASE("configuration validation") {
  SolverConfig cfg = tg_config(16, 0.1, 0.01, 0.1);
  cfg.viscosity = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = tg_config(16, 0.1, -0.01, 0.1);
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = tg_config(16, 0.1, 0.01, -1.0);
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = tg_config(16, 0.1, 0.01, 1.0);
  cfg.snapshot_stride = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  CHECK_THROWS_AS(initial_condition_kind("vortex"), ValidationError);
  CHECK(initial_condition_kind("abc") == InitialCondition::Kind::abc);
}

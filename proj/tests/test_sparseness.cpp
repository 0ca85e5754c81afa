#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "doctest.h"
#include "test_helpers.hpp"
#include "vscope/sparseness.hpp"
#include "vscope/spectral.hpp"

using namespace vscope;

namespace {

constexpr double kPi = std::numbers::pi;
const Vec3 kMid{kPi, kPi, kPi};

// |w| = 1 + a - |x - pi|, linear across the interface; {|w| > 1} is exactly the slab {|x - pi| < a}.
VectorField slab_field(const Grid& g, double a) {
  return test::sample(g, [a](const Vec3& x) -> Vec3 { return {0.0, 0.0, std::max(0.0, 1.0 + a - std::abs(x[0] - kPi))}; });
}

// Tube of radius a along z through (pi, pi), level 1.
VectorField tube_field(const Grid& g, double a) {
  return test::sample(g, [a](const Vec3& x) -> Vec3 {
    const double rho = std::hypot(x[0] - kPi, x[1] - kPi);
    return {0.0, 0.0, std::max(0.0, 1.0 + a - rho)};
  });
}

// Length of a segment of half-length r through a disc of radius a, distance b from the centre line.
double chord(double a, double b, double r) { return b >= a ? 0.0 : std::min(2.0 * std::sqrt(a * a - b * b), 2.0 * r); }

}  // namespace

TEST_CASE("level sets") {
  const Grid g(16);
  const VectorField w = test::smooth_random_vector(g, 3);
  const double wmax = max_magnitude(w);
  CHECK(level_set(w, 0.0).count() == g.size());
  CHECK(level_set(w, wmax * 1.0001).count() == 0);
  const LevelSet lo = level_set(w, 0.3 * wmax), hi = level_set(w, 0.6 * wmax);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (hi.mask[i]) CHECK(lo.mask[i]);
  CHECK(lo.volume() == doctest::Approx(lo.count() * g.cell_volume()));
  CHECK_THROWS_AS(level_set(w, -1.0), ValidationError);
  CHECK_THROWS_AS(LevelSet::from_mask(g, std::vector<std::uint8_t>(10)), ValidationError);
}

TEST_CASE("h and alpha") {
  for (int i = 1; i < 200; ++i) {
    const double d = i / 200.0;
    const auto [h, a] = h_alpha(d);
    const double oracle = 2.0 / kPi * std::atan2(1.0 - d * d, 2.0 * d);
    CHECK(std::abs(h - oracle) <= 1e-12);
    CHECK(a == doctest::Approx((1.0 - oracle) / oracle).epsilon(1e-10));
  }
  const auto half = h_alpha(std::tan(kPi / 8));
  CHECK(half.h == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(half.alpha_min == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(h_alpha(1e-8).h == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(h_alpha(1e-8).alpha_min < 1e-7);
  CHECK(h_alpha(1.0 - 1e-8).h < 1e-7);
  CHECK_THROWS_AS(h_alpha(0.0), ValidationError);
  CHECK_THROWS_AS(h_alpha(1.0), ValidationError);
}

TEST_CASE("slab occupancy") {
  const Grid g(64);
  const double a = 0.5, r = 1.0;
  const LevelSet s = level_set(slab_field(g, a), 1.0);
  const double tol = 2.0 / (2.0 * r / g.spacing() * 4);  // one sample per end

  CHECK(occupancy(s, kMid, r, {1, 0, 0}) == doctest::Approx(a / r).epsilon(tol));
  CHECK(occupancy(s, kMid, r, {0, 1, 0}) == 1.0);
  // tilted: the chord grows as 1/cos
  const double th = 0.5;
  CHECK(occupancy(s, kMid, r, {std::cos(th), std::sin(th), 0}) == doctest::Approx(a / (r * std::cos(th))).epsilon(tol));

  const auto res = linear_sparseness(s, kMid, r, 0.6, {256, 4, true, true});
  CHECK(res.ratio == doctest::Approx(a / r).epsilon(tol));
  CHECK(std::abs(res.direction[0]) == doctest::Approx(1.0));
  CHECK(res.sparse);
  REQUIRE(res.refinement_change);
  CHECK(*res.refinement_change < 1e-2);
  CHECK_FALSE(linear_sparseness(s, kMid, r, 0.4).sparse);

  // star-shaped around the midpoint: the ratio does not grow with r
  double prev = 1.0;
  for (double rr : {0.6, 0.8, 1.0, 1.2, 1.5}) {
    const double q = linear_sparseness(s, kMid, rr, 0.5).ratio;
    CHECK(q <= prev + 1e-12);
    CHECK(q == doctest::Approx(a / rr).epsilon(tol));
    prev = q;
  }

  CHECK_THROWS_AS(linear_sparseness(s, kMid, 0.0, 0.5), ValidationError);
  CHECK_THROWS_AS(linear_sparseness(s, kMid, g.length() / 4, 0.5), ValidationError);
}

TEST_CASE("node masks use the half-level indicator") {
  const Grid g(64);
  std::vector<std::uint8_t> m(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) m[i] = std::abs(g.node(i)[0] - kPi) < 0.5 ? 1 : 0;
  const LevelSet s = LevelSet::from_mask(g, m);
  int nodes = 0;
  for (int i = 0; i < g.n(); ++i) nodes += std::abs(i * g.spacing() - kPi) < 0.5 ? 1 : 0;
  const double r = 1.0;
  CHECK(occupancy(s, kMid, r, {1, 0, 0}, 8) == doctest::Approx(nodes * g.spacing() / (2 * r)).epsilon(1.0 / 64));
}

TEST_CASE("ball occupancy") {
  const Grid g(64);
  const double a = 0.4;
  const VectorField w = test::sample(g, [a](const Vec3& x) -> Vec3 { return {std::max(0.0, 1.0 + a - norm(x - kMid)), 0, 0}; });
  const LevelSet s = level_set(w, 1.0);
  double prev = 1.0;
  for (double r : {0.5, 0.8, 1.1, 1.4}) {
    const auto res = linear_sparseness(s, kMid, r, 0.5);
    CHECK(res.ratio == doctest::Approx(a / r).epsilon(0.03));
    CHECK(res.ratio <= prev);
    prev = res.ratio;
  }
}

TEST_CASE("cylinder scan") {
  const Grid g(64);
  const double a = 0.2, r = 1.0;
  const LevelSet s = level_set(tube_field(g, a), 1.0);

  // on the axis, perpendicular segments cross the tube over 2a
  const auto axis = linear_sparseness(s, {kPi, kPi, 1.0}, r, 0.25);
  CHECK(axis.ratio == doctest::Approx(a / r).epsilon(0.05));
  CHECK(std::abs(axis.direction[2]) < 0.3);
  CHECK(axis.sparse);
  CHECK_FALSE(linear_sparseness(s, {kPi, kPi, 1.0}, r, 0.15).sparse);

  const ScanReport rep = sparseness_scan(s, r, 0.25, ScanPoints::sample(7, 300));
  CHECK(rep.points == 300);
  CHECK(rep.all_sparse);
  for (const auto& p : rep.results) {
    const Vec3 dx = g.displacement(p.point, kMid);
    const double b = std::hypot(dx[0], dx[1]);
    // oracle: the segment perpendicular to both the axis and the offset has the shortest chord
    CHECK(p.ratio <= chord(a, b, r) / (2 * r) + 0.03);
    if (b > r + a) CHECK(p.ratio == 0.0);
  }
  CHECK(rep.worst.ratio == doctest::Approx(a / r).epsilon(0.1));
}

TEST_CASE("empty and full sets") {
  const Grid g(16);
  const LevelSet empty = LevelSet::from_mask(g, std::vector<std::uint8_t>(g.size(), 0));
  const LevelSet full = LevelSet::from_mask(g, std::vector<std::uint8_t>(g.size(), 1));
  const double r = 1.0;
  const ScanReport e = sparseness_scan(empty, r, 0.01, ScanPoints::all_nodes());
  CHECK(e.points == g.size());
  CHECK(e.all_sparse);
  CHECK(e.worst.ratio == 0.0);
  const ScanReport f = sparseness_scan(full, r, 0.99, ScanPoints::all_nodes());
  CHECK(f.passed == 0);
  CHECK(f.fraction_passed == 0.0);
  CHECK(f.worst.ratio == 1.0);
  // the box shortcut agrees with direct sampling
  CHECK(linear_sparseness(full, {0.3, 0.2, 0.1}, r, 0.5).ratio == 1.0);
  CHECK(linear_sparseness(empty, {0.3, 0.2, 0.1}, r, 0.5).ratio == 0.0);
}

TEST_CASE("tchebyshev on random fields") {
  const Grid g(16);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int pair = 0; pair < 100; ++pair) {
    const VectorField w = test::random_vector(g, 1000 + pair);
    const double m = u(rng) * max_magnitude(w) + 1e-6;
    std::size_t nodes = 0;
    double l1 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double mag = norm(w.at(i));
      nodes += mag > m ? 1 : 0;
      l1 += mag;
    }
    l1 *= g.cell_volume();
    const LevelSet s = level_set(w, m);
    CHECK(s.count() == nodes);
    CHECK(s.volume() * m <= l1);
    CHECK(l1_norm(w) == doctest::Approx(l1).epsilon(1e-12));
  }
}

TEST_CASE("criticality report") {
  SolverConfig cfg;
  cfg.grid = Grid(32);
  cfg.viscosity = 0.05;
  cfg.dt = 0.02;
  cfg.t_end = 2.0;
  cfg.snapshot_stride = 5;
  cfg.initial_condition = InitialCondition::taylor_green_3d();
  const Trajectory traj = simulate(cfg);
  const double t = traj.time(2);

  CriticalityOptions opt;
  opt.points = ScanPoints::sample(3, 64);
  opt.sparseness.directions = 64;
  const CriticalityReport rep = criticality_report(traj, t, opt);
  const VectorField w = curl(traj.velocity(2));
  const double wmax = max_magnitude(w);
  CHECK(rep.omega_max == doctest::Approx(wmax));
  CHECK(rep.threshold == doctest::Approx(wmax / 2));
  CHECK(rep.tchebyshev_ok);
  CHECK(rep.volume * rep.threshold <= rep.omega_l1);
  CHECK(rep.tchebyshev_bound == doctest::Approx(rep.omega_l1 * 2 / wmax));
  REQUIRE(rep.scale_cap);
  CHECK(*rep.scale_cap == doctest::Approx(1.0 / (2.0 * std::sqrt(wmax))));
  CHECK(*rep.cross_section == doctest::Approx(2.0 / std::sqrt(wmax)));
  CHECK(*rep.window_start == doctest::Approx(t + 0.25 / wmax));
  CHECK(*rep.window_end == doctest::Approx(t + 1.0 / wmax));
  CHECK(rep.partial == (*rep.window_end > traj.time(traj.size() - 1)));
  CHECK(rep.alpha == doctest::Approx(h_alpha(0.5).alpha_min));
  CHECK(rep.sparse_threshold == doctest::Approx(wmax));  // d0 = 1
  REQUIRE(rep.scan);
  CHECK(rep.scan->points == 64);
  REQUIRE(rep.scan->worst.refinement_change);
  REQUIRE(rep.trend.size() == 3);
  for (const auto& p : rep.trend) CHECK(p.product == doctest::Approx(p.volume * p.omega_max));
  CHECK(rep.note.find("d0 = 1") != std::string::npos);

  opt.alpha = 0.1;
  CHECK_THROWS_AS(criticality_report(traj, t, opt), ValidationError);
  opt.alpha.reset();
  opt.c1 = 1.0;
  CHECK_THROWS_AS(criticality_report(traj, t, opt), ValidationError);

  SUBCASE("zero vorticity") {
    Trajectory rest(cfg);
    rest.add_snapshot({0.0, VectorField(cfg.grid)});
    const auto z = criticality_report(rest, 0.0, {});
    CHECK(z.volume == 0.0);
    CHECK(z.omega_max == 0.0);
    CHECK(z.tchebyshev_ok);
    CHECK_FALSE(z.scale_cap);
    CHECK_FALSE(z.scan);
  }
}

TEST_CASE("report output") {
  const Grid g(16);
  const LevelSet s = level_set(tube_field(g, 0.5), 1.0);
  const ScanReport rep = sparseness_scan(s, 1.0, 0.5, ScanPoints::sample(1, 10));
  const nlohmann::json j = rep;
  CHECK(j.at("points") == 10);
  CHECK(j.at("worst").contains("direction"));
  const auto dir = std::filesystem::temp_directory_path() / "vscope_sparse_test";
  std::filesystem::create_directories(dir);
  write_csv(dir / "scan.csv", rep);
  std::ifstream in(dir / "scan.csv");
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 11);
  write_mask(dir / "mask.bin", s);
  CHECK(std::filesystem::file_size(dir / "mask.bin") == g.size());
  std::filesystem::remove_all(dir);
}

#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "test_helpers.hpp"
#include "vscope/config.hpp"
#include "vscope/snapshot_io.hpp"

using namespace vscope;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::vector<char> bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void put(const fs::path& p, const std::vector<char>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(b.data(), static_cast<std::streamsize>(b.size()));
}

bool same_bits(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("snapshot round trip is bit exact") {
  TempDir dir("vscope_io_roundtrip");
  const Grid g(16, 3.5);
  VectorField v = test::random_vector(g, 5);
  v.set_time(0.3125);
  write_snapshot(dir.path / "v.vscp", v, 0.01);
  CHECK(fs::file_size(dir.path / "v.vscp") == 64 + 3 * g.size() * 8);

  const SnapshotHeader h = read_snapshot_header(dir.path / "v.vscp");
  CHECK(h.version == kSnapshotVersion);
  CHECK(h.n_points == 16);
  CHECK(h.kind == FieldKind::velocity);
  CHECK(h.box_length == 3.5);
  CHECK(h.time == 0.3125);
  CHECK(h.viscosity == 0.01);

  const VectorField back = read_vector_snapshot(dir.path / "v.vscp");
  CHECK(back.grid() == g);
  CHECK(back.time() == v.time());
  for (int a = 0; a < 3; ++a) CHECK(same_bits(back.component(a), v.component(a)));

  const ScalarField s = test::random_scalar(g, 6);
  write_snapshot(dir.path / "s.vscp", s, 0.01);
  CHECK(same_bits(read_scalar_snapshot(dir.path / "s.vscp").values(), s.values()));
  CHECK_THROWS_AS(read_vector_snapshot(dir.path / "s.vscp"), FormatError);
  CHECK_THROWS_AS(read_scalar_snapshot(dir.path / "v.vscp"), FormatError);

  write_snapshot(dir.path / "w.vscp", v, 0.01, FieldKind::vorticity);
  CHECK(read_snapshot_header(dir.path / "w.vscp").kind == FieldKind::vorticity);
}

TEST_CASE("corrupted snapshots are rejected") {
  TempDir dir("vscope_io_corrupt");
  const Grid g(8);
  write_snapshot(dir.path / "ok.vscp", test::random_vector(g, 1), 0.1);
  const auto good = bytes(dir.path / "ok.vscp");
  const fs::path bad = dir.path / "bad.vscp";

  auto b = good;
  b[0] = 'X';
  put(bad, b);
  CHECK_THROWS_WITH_AS(read_vector_snapshot(bad), doctest::Contains("magic"), FormatError);

  b = good;
  b[4] = 2;  // version 2
  put(bad, b);
  CHECK_THROWS_WITH_AS(read_vector_snapshot(bad), doctest::Contains("unsupported version"), FormatError);

  b = good;
  b[12] = 7;  // kind
  put(bad, b);
  CHECK_THROWS_WITH_AS(read_vector_snapshot(bad), doctest::Contains("kind"), FormatError);

  b = good;
  b.resize(b.size() - 8);
  put(bad, b);
  CHECK_THROWS_WITH_AS(read_vector_snapshot(bad), doctest::Contains("truncated"), FormatError);

  b = std::vector<char>(good.begin(), good.begin() + 20);
  put(bad, b);
  CHECK_THROWS_WITH_AS(read_snapshot_header(bad), doctest::Contains("truncated"), FormatError);

  b = good;
  b.push_back(0);
  put(bad, b);
  CHECK_THROWS_WITH_AS(read_vector_snapshot(bad), doctest::Contains("trailing"), FormatError);

  CHECK_THROWS_AS(read_vector_snapshot(dir.path / "missing.vscp"), FormatError);
}

TEST_CASE("snapshot directories are ordered by time") {
  TempDir dir("vscope_io_dir");
  const Grid g(8);
  const double times[] = {0.5, 0.1, 0.3};
  for (int i = 0; i < 3; ++i) {
    VectorField v = test::random_vector(g, 10 + i);
    v.set_time(times[i]);
    write_snapshot(dir.path / snapshot_file_name(i), v, 0.2);
  }
  CHECK(snapshot_file_name(7) == "snapshot_000007.vscp");
  const SnapshotDirectory seq(dir.path);
  REQUIRE(seq.size() == 3);
  CHECK(seq.time(0) == 0.1);
  CHECK(seq.time(2) == 0.5);
  CHECK(seq.viscosity() == 0.2);
  CHECK(seq.index_at(0.3) == 1);
  const VectorField first = seq.velocity(0);
  CHECK(same_bits(first.component(0), test::random_vector(g, 11).component(0)));

  VectorField dup = test::random_vector(g, 20);
  dup.set_time(0.3);
  write_snapshot(dir.path / "dup.vscp", dup, 0.2);
  CHECK_THROWS_AS(SnapshotDirectory{dir.path}, ValidationError);
  CHECK_THROWS_AS(SnapshotDirectory{dir.path / "nope"}, ValidationError);
}

TEST_CASE("masks are raw bytes") {
  TempDir dir("vscope_io_mask");
  const std::vector<std::uint8_t> m{0, 1, 1, 0, 1};
  write_mask(dir.path / "m.mask", m);
  const auto b = bytes(dir.path / "m.mask");
  REQUIRE(b.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(static_cast<std::uint8_t>(b[i]) == m[i]);
}

TEST_CASE("run configuration") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  const double L = c.solver.grid.length();
  CHECK(c.macro_center()[0] == doctest::Approx(L / 2));
  CHECK(c.scales() == std::vector<double>{0.5});

  SUBCASE("json round trip") {
    c.solver.grid = Grid(48);
    c.solver.initial_condition = InitialCondition::random(9, 3.0, 5.0, 0.2);
    c.macro.radius = 1.3;
    c.macro.center = Vec3{1, 2, 3};
    c.covers.scales = {1.1, 1.3};
    c.covers.strategy = CoverStrategy::lattice;
    c.diagnostics.density = DensityKind::palinstrophy;
    c.sparseness.delta = 0.3;
    const nlohmann::json j = c;
    const RunConfig back = j.get<RunConfig>();
    CHECK(nlohmann::json(back) == j);
    CHECK(back.solver.grid.n() == 48);
    CHECK(back.solver.initial_condition.kind == InitialCondition::Kind::random);
    CHECK(back.solver.initial_condition.seed == 9);
    CHECK(back.covers.strategy == CoverStrategy::lattice);
  }

  SUBCASE("partial json keeps defaults") {
    const auto back = nlohmann::json::parse(R"({"solver": {"viscosity": 0.2}, "macro": {"radius": 1.2}})").get<RunConfig>();
    CHECK(back.solver.viscosity == 0.2);
    CHECK(back.solver.grid.n() == 32);
    CHECK(back.macro.radius == 1.2);
  }

  SUBCASE("rejections") {
    CHECK_THROWS_WITH_AS(nlohmann::json::parse(R"({"solvr": {}})").get<RunConfig>(), doctest::Contains("solvr"),
                         ValidationError);
    CHECK_THROWS_AS(nlohmann::json::parse(R"({"solver": {"dt": "fast"}})").get<RunConfig>(), ValidationError);
    CHECK_THROWS_AS(nlohmann::json::parse(R"({"covers": {"strategy": "spiral"}})").get<RunConfig>(), ValidationError);
    CHECK_THROWS_AS(nlohmann::json::parse(R"({"solver": {"n": 15}})").get<RunConfig>(), ValidationError);

    RunConfig bad = c;
    bad.macro.radius = L / 3;
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("4 R0"), ValidationError);
    bad = c;
    bad.covers.scales = {0.5 * minimum_scale(c.solver.grid)};
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("8 spacing"), ValidationError);
    bad = c;
    bad.macro.radius = 1.5;
    bad.diagnostics.theorem_check = true;
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("sqrt"), ValidationError);
    bad = c;
    bad.sparseness.c1 = 1.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = c;
    bad.diagnostics.times = {2.0};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
  }

  SUBCASE("files") {
    TempDir dir("vscope_io_config");
    {
      std::ofstream(dir.path / "c.json") << R"({"solver": {"n": 16, "t_end": 0.5}})";
      std::ofstream(dir.path / "broken.json") << "{ not json";
    }
    CHECK(load_config(dir.path / "c.json").solver.grid.n() == 16);
    CHECK_THROWS_AS(load_config(dir.path / "broken.json"), ValidationError);
    CHECK_THROWS_AS(load_config(dir.path / "absent.json"), ValidationError);
  }
}

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "vscope/cli.hpp"
#include "json.hpp"

using namespace vscope;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

nlohmann::json load(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

const fs::path kRoot = fs::temp_directory_path() / "vscope_cli_test";

// 48^3 keeps 8 spacings (~1.05) below R0 = 1.5.
fs::path write_config() {
  fs::create_directories(kRoot);
  const fs::path p = kRoot / "tg.json";
  std::ofstream(p) << R"({
    "solver": {"n": 48, "viscosity": 0.05, "dt": 0.02, "t_end": 0.6, "snapshot_stride": 1,
               "initial_condition": {"kind": "taylor_green_3d"}},
    "macro": {"radius": 1.5},
    "covers": {"scales": [1.2], "family_size": 2, "seed": 4},
    "sparseness": {"points": 32, "directions": 32}
  })";
  return p;
}

}  // namespace

TEST_CASE("usage and exit codes") {
  CHECK(cli({"--help"}).code == 0);
  const Run unknown = cli({"simulate", "--bogus"});
  CHECK(unknown.code == exit_invalid);
  CHECK(unknown.err.find("Usage") != std::string::npos);
  CHECK(cli({}).code == exit_invalid);
  CHECK(cli({"frobnicate"}).code == exit_invalid);

  fs::create_directories(kRoot);
  std::ofstream(kRoot / "bad.json") << R"({"solver": {"viscosty": 1}})";
  const Run bad = cli({"simulate", "--config", (kRoot / "bad.json").string(), "--out-dir", (kRoot / "bad").string()});
  CHECK(bad.code == exit_invalid);
  CHECK(bad.err.find("viscosty") != std::string::npos);

  // CFL violation before the first step
  const Run cfl = cli({"simulate", "--out-dir", (kRoot / "cfl").string(), "--ic", "abc", "--dt", "5", "--t-end", "10"});
  CHECK(cfl.code == exit_numerical);

  CHECK(cli({"diagnose", "--out-dir", (kRoot / "empty").string()}).code == exit_invalid);

  setenv("VSCOPE_THREADS", "many", 1);
  CHECK(cli({"covers", "--out-dir", (kRoot / "env").string(), "--R0", "1.0", "--R", "1.0"}).code == exit_invalid);
  setenv("VSCOPE_THREADS", "1", 1);
  CHECK(cli({"covers", "--out-dir", (kRoot / "env").string(), "--R0", "1.0", "--R", "1.0"}).code == exit_ok);
  unsetenv("VSCOPE_THREADS");
}

TEST_CASE("covers subcommand") {
  const fs::path out = kRoot / "covers";
  const Run r = cli({"covers", "--out-dir", out.string(), "--R", "0.5", "--K1", "8", "--K2", "27"});
  REQUIRE(r.code == exit_ok);
  const auto j = load(out / "covers.json");
  CHECK(j["certification"]["passed"] == true);
  CHECK(j["cover"]["scale"] == 0.5);
  CHECK(j["certification"]["max_multiplicity"].get<int>() <= 27);
  const auto n = j["cover"]["centers"].size();
  CHECK(n >= 8);
  CHECK(n <= 64);
  CHECK(j["config"]["covers"]["k1"] == 8);

  const Run tight = cli({"covers", "--out-dir", out.string(), "--R", "0.5", "--K1", "1", "--strategy", "lattice"});
  CHECK(tight.code == exit_invalid);
  CHECK(tight.err.find("K1") != std::string::npos);
}

TEST_CASE("pipeline") {
  const fs::path cfg = write_config();
  const fs::path a = kRoot / "a", b = kRoot / "b";
  for (const auto& dir : {a, b}) {
    fs::remove_all(dir);
    REQUIRE(cli({"simulate", "--config", cfg.string(), "--out-dir", dir.string()}).code == exit_ok);
    const Run d = cli({"diagnose", "--config", cfg.string(), "--out-dir", dir.string(), "--budget", "--vst", "--macro"});
    REQUIRE(d.code == exit_ok);
    CHECK(d.out.find("relative") != std::string::npos);
  }
  CHECK(load(a / "run.json")["summary"]["snapshots"] == 31);

  // budget residual table
  std::istringstream rows(slurp(a / "budget.csv"));
  std::string line;
  std::getline(rows, line);
  CHECK(line.find("relative_residual") != std::string::npos);
  int elements = 0;
  for (; std::getline(rows, line); ++elements) {
    const double rel = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(rel <= 2e-2);
  }
  CHECK(elements >= 8);

  // deterministic given seeds
  for (const char* f : {"budget.csv", "vst.csv", "steps.csv", "macro.json"}) {
    INFO(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }

  const Run s = cli({"sparseness", "--config", cfg.string(), "--out-dir", a.string(), "--delta", "0.41421"});
  REQUIRE(s.code == exit_ok);
  const auto sj = load(a / "sparseness.json");
  CHECK(sj["criticality"]["h"].get<double>() == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(sj["criticality"]["tchebyshev_ok"] == true);
  CHECK(sj["criticality"]["d0"] == 1.0);
  CHECK(fs::file_size(a / "intense_region.mask") == 48 * 48 * 48);

  const Run rep = cli({"report", "--out-dir", a.string()});
  REQUIRE(rep.code == exit_ok);
  const auto sum = load(a / "summary.json");
  for (const char* k : {"run", "macro", "budget", "vst", "sparseness"}) CHECK(sum["sections"].contains(k));
  CHECK(sum["tables"]["steps"]["rows"] == 31);  // includes step 0

  // without a config the parameters come from the snapshot headers
  const Run bare = cli({"diagnose", "--out-dir", a.string(), "--macro", "--R0", "1.5", "--R", "1.2"});
  CHECK(bare.code == exit_ok);
  fs::remove_all(kRoot);
}

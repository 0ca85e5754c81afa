#include "vscope/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>

namespace vscope {

namespace {

using nlohmann::json;

void check_keys(const json& j, const char* section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError(std::string("config: '") + section + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : j.items())
    if (!ok.count(item.key())) throw ValidationError(std::string("config: unknown key '") + item.key() + "' in " + section);
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

CoverStrategy strategy_from(const std::string& s) {
  if (s == "lattice") return CoverStrategy::lattice;
  if (s == "jittered") return CoverStrategy::jittered;
  throw ValidationError("config: unknown cover strategy '" + s + "'");
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("config: " + what);
}

}  // namespace

SolverConfig RunConfig::default_solver() {
  SolverConfig s;
  s.grid = Grid(32);
  s.viscosity = 0.05;
  s.dt = 0.01;
  s.t_end = 1.0;
  s.snapshot_stride = 10;
  s.initial_condition = InitialCondition::taylor_green_3d();
  return s;
}

Vec3 RunConfig::macro_center() const {
  const double c = solver.grid.length() / 2.0;
  return macro.center.value_or(Vec3{c, c, c});
}

EnsembleSettings RunConfig::settings() const {
  EnsembleSettings s;
  s.horizon = solver.t_end;
  s.rho_temporal = cutoffs.rho_temporal;
  s.rho_spatial = cutoffs.rho_spatial;
  s.delta_exp = cutoffs.delta_exp;
  return s;
}

CriticalityOptions RunConfig::criticality() const {
  CriticalityOptions o;
  o.c1 = sparseness.c1;
  o.c3 = sparseness.c3;
  o.delta = sparseness.delta;
  o.d0 = sparseness.d0;
  o.sparseness.directions = sparseness.directions;
  o.sparseness.samples_per_spacing = sparseness.samples_per_spacing;
  o.points = ScanPoints::sample(sparseness.seed, sparseness.points);
  return o;
}

std::vector<double> RunConfig::scales() const {
  if (!covers.scales.empty()) return covers.scales;
  return {macro.radius / 2.0};
}

void RunConfig::validate() const {
  solver.validate();
  require(solver.t_end > 0.0, "solver.t_end must be positive");
  const double L = solver.grid.length();
  const double R0 = macro.radius;
  require(R0 > 0.0, "macro.radius must be positive");
  require(4.0 * R0 <= L * (1.0 + 1e-12), "4 R0 must not exceed the box length");
  const double rmin = minimum_scale(solver.grid);
  for (double r : covers.scales)
    require(r >= rmin * (1.0 - 1e-12) && r <= R0 * (1.0 + 1e-12),
            "cover scale " + std::to_string(r) + " outside [8 spacing, R0] = [" + std::to_string(rmin) + ", " +
                std::to_string(R0) + "]");
  require(covers.k1 >= 1 && covers.k2 >= 1, "K1 and K2 must be positive");
  require(covers.family_size >= 1, "covers.family_size must be >= 1");
  require(cutoffs.rho_temporal > 0.0 && cutoffs.rho_temporal < 1.0, "cutoffs.rho_temporal must lie in (0, 1)");
  require(cutoffs.rho_spatial > 0.0 && cutoffs.rho_spatial < 1.0, "cutoffs.rho_spatial must lie in (0, 1)");
  require(cutoffs.delta_exp > 0.0, "cutoffs.delta_exp must be positive");
  for (double t : diagnostics.times)
    require(t > 0.0 && t <= solver.t_end * (1.0 + 1e-12), "diagnostic time outside (0, t_end]");
  if (diagnostics.theorem_check) require(R0 <= std::sqrt(solver.t_end) * (1.0 + 1e-12), "R0 must not exceed sqrt(t_end)");
  require(diagnostics.c_report > 0.0, "diagnostics.c_report must be positive");
  require(sparseness.delta > 0.0 && sparseness.delta < 1.0, "sparseness.delta must lie in (0, 1)");
  require(sparseness.d0 > 0.0, "sparseness.d0 must be positive");
  require(sparseness.c1 > 1.0 && sparseness.c3 > 1.0, "sparseness.c1 and c3 must exceed 1");
  require(sparseness.directions >= 1 && sparseness.samples_per_spacing >= 1, "sparseness sampling must be positive");
  require(threads >= 0, "threads must be >= 0");
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config: " + path.string() + ": " + e.what());
  }
  RunConfig c = j.get<RunConfig>();
  c.validate();
  return c;
}

void to_json(json& j, const RunConfig& c) {
  const auto& s = c.solver;
  const auto& ic = s.initial_condition;
  j = json{{"solver",
            {{"n", s.grid.n()},
             {"box_length", s.grid.length()},
             {"viscosity", s.viscosity},
             {"dt", s.dt},
             {"t_end", s.t_end},
             {"snapshot_stride", s.snapshot_stride},
             {"dealias", s.dealias},
             {"max_cfl", s.max_cfl},
             {"initial_condition",
              {{"kind", to_string(ic.kind)},
               {"seed", ic.seed},
               {"spectrum_slope", ic.spectrum_slope},
               {"peak_wavenumber", ic.peak_wavenumber},
               {"rms_velocity", ic.rms_velocity},
               {"a", ic.a},
               {"b", ic.b},
               {"c", ic.c}}}}},
           {"macro", {{"radius", c.macro.radius}, {"center", c.macro_center()}}},
           {"covers",
            {{"scales", c.covers.scales},
             {"k1", c.covers.k1},
             {"k2", c.covers.k2},
             {"family_size", c.covers.family_size},
             {"seed", c.covers.seed},
             {"strategy", to_string(c.covers.strategy)}}},
           {"cutoffs",
            {{"rho_temporal", c.cutoffs.rho_temporal},
             {"rho_spatial", c.cutoffs.rho_spatial},
             {"delta_exp", c.cutoffs.delta_exp}}},
           {"diagnostics",
            {{"times", c.diagnostics.times},
             {"theorem_check", c.diagnostics.theorem_check},
             {"c_report", c.diagnostics.c_report},
             {"density", to_string(c.diagnostics.density)}}},
           {"sparseness",
            {{"delta", c.sparseness.delta},
             {"d0", c.sparseness.d0},
             {"c1", c.sparseness.c1},
             {"c3", c.sparseness.c3},
             {"directions", c.sparseness.directions},
             {"samples_per_spacing", c.sparseness.samples_per_spacing},
             {"points", c.sparseness.points},
             {"seed", c.sparseness.seed}}},
           {"threads", c.threads}};
}

void from_json(const json& j, RunConfig& c) {
  try {
    check_keys(j, "config", {"solver", "macro", "covers", "cutoffs", "diagnostics", "sparseness", "threads"});
    if (j.contains("solver")) {
      const json& s = j.at("solver");
      check_keys(s, "solver",
                 {"n", "box_length", "viscosity", "dt", "t_end", "snapshot_stride", "dealias", "max_cfl",
                  "initial_condition"});
      int n = c.solver.grid.n();
      double L = c.solver.grid.length();
      read(s, "n", n);
      read(s, "box_length", L);
      require(n >= 8 && n % 2 == 0, "solver.n must be even and >= 8");
      require(L > 0.0, "solver.box_length must be positive");
      c.solver.grid = Grid(n, L);
      read(s, "viscosity", c.solver.viscosity);
      read(s, "dt", c.solver.dt);
      read(s, "t_end", c.solver.t_end);
      read(s, "snapshot_stride", c.solver.snapshot_stride);
      read(s, "dealias", c.solver.dealias);
      read(s, "max_cfl", c.solver.max_cfl);
      if (s.contains("initial_condition")) {
        const json& ic = s.at("initial_condition");
        check_keys(ic, "initial_condition",
                   {"kind", "seed", "spectrum_slope", "peak_wavenumber", "rms_velocity", "a", "b", "c"});
        auto& out = c.solver.initial_condition;
        if (ic.contains("kind")) out.kind = initial_condition_kind(ic.at("kind").get<std::string>());
        read(ic, "seed", out.seed);
        read(ic, "spectrum_slope", out.spectrum_slope);
        read(ic, "peak_wavenumber", out.peak_wavenumber);
        read(ic, "rms_velocity", out.rms_velocity);
        read(ic, "a", out.a);
        read(ic, "b", out.b);
        read(ic, "c", out.c);
      }
    }
    if (j.contains("macro")) {
      const json& m = j.at("macro");
      check_keys(m, "macro", {"radius", "center"});
      read(m, "radius", c.macro.radius);
      if (m.contains("center")) c.macro.center = m.at("center").get<Vec3>();
    }
    if (j.contains("covers")) {
      const json& m = j.at("covers");
      check_keys(m, "covers", {"scales", "k1", "k2", "family_size", "seed", "strategy"});
      read(m, "scales", c.covers.scales);
      read(m, "k1", c.covers.k1);
      read(m, "k2", c.covers.k2);
      read(m, "family_size", c.covers.family_size);
      read(m, "seed", c.covers.seed);
      if (m.contains("strategy")) c.covers.strategy = strategy_from(m.at("strategy").get<std::string>());
    }
    if (j.contains("cutoffs")) {
      const json& m = j.at("cutoffs");
      check_keys(m, "cutoffs", {"rho_temporal", "rho_spatial", "delta_exp"});
      read(m, "rho_temporal", c.cutoffs.rho_temporal);
      read(m, "rho_spatial", c.cutoffs.rho_spatial);
      read(m, "delta_exp", c.cutoffs.delta_exp);
    }
    if (j.contains("diagnostics")) {
      const json& m = j.at("diagnostics");
      check_keys(m, "diagnostics", {"times", "theorem_check", "c_report", "density"});
      read(m, "times", c.diagnostics.times);
      read(m, "theorem_check", c.diagnostics.theorem_check);
      read(m, "c_report", c.diagnostics.c_report);
      if (m.contains("density")) c.diagnostics.density = density_kind(m.at("density").get<std::string>());
    }
    if (j.contains("sparseness")) {
      const json& m = j.at("sparseness");
      check_keys(m, "sparseness", {"delta", "d0", "c1", "c3", "directions", "samples_per_spacing", "points", "seed"});
      read(m, "delta", c.sparseness.delta);
      read(m, "d0", c.sparseness.d0);
      read(m, "c1", c.sparseness.c1);
      read(m, "c3", c.sparseness.c3);
      read(m, "directions", c.sparseness.directions);
      read(m, "samples_per_spacing", c.sparseness.samples_per_spacing);
      read(m, "points", c.sparseness.points);
      read(m, "seed", c.sparseness.seed);
    }
    read(j, "threads", c.threads);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

}  // namespace vscope

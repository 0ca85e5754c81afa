#include "vscope/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "vscope/config.hpp"
#include "vscope/snapshot_io.hpp"
#include "vscope/spectral.hpp"

namespace vscope {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::ofstream open_csv(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.precision(17);
  return out;
}

// Flags shared by several subcommands; an unset optional leaves the config value.
struct Overrides {
  std::optional<int> n;
  std::optional<double> nu, dt, t_end, R0, R, delta, d0, c1, time;
  std::optional<int> stride, k1, k2, directions;
  std::optional<std::size_t> points;
  std::optional<std::string> ic, strategy;
  std::optional<std::uint64_t> seed;
};

void apply(const Overrides& o, RunConfig& c) {
  if (o.n) c.solver.grid = Grid(*o.n, c.solver.grid.length());
  if (o.nu) c.solver.viscosity = *o.nu;
  if (o.dt) c.solver.dt = *o.dt;
  if (o.t_end) c.solver.t_end = *o.t_end;
  if (o.stride) c.solver.snapshot_stride = *o.stride;
  if (o.ic) c.solver.initial_condition.kind = initial_condition_kind(*o.ic);
  if (o.seed) {
    c.solver.initial_condition.seed = *o.seed;
    c.covers.seed = *o.seed;
    c.sparseness.seed = *o.seed;
  }
  if (o.R0) c.macro.radius = *o.R0;
  if (o.R) c.covers.scales = {*o.R};
  if (o.k1) c.covers.k1 = *o.k1;
  if (o.k2) c.covers.k2 = *o.k2;
  if (o.strategy) {
    if (*o.strategy == "lattice") c.covers.strategy = CoverStrategy::lattice;
    else if (*o.strategy == "jittered") c.covers.strategy = CoverStrategy::jittered;
    else throw ValidationError("unknown cover strategy '" + *o.strategy + "'");
  }
  if (o.delta) c.sparseness.delta = *o.delta;
  if (o.d0) c.sparseness.d0 = *o.d0;
  if (o.c1) c.sparseness.c1 = *o.c1;
  if (o.directions) c.sparseness.directions = *o.directions;
  if (o.points) c.sparseness.points = *o.points;
  if (o.time) c.diagnostics.times = {*o.time};
}

int resolve_threads(std::optional<int> flag, const RunConfig& c) {
  if (flag) return *flag;
  if (const char* env = std::getenv("VSCOPE_THREADS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 0) throw ValidationError(std::string("VSCOPE_THREADS is not a thread count: ") + env);
    return static_cast<int>(v);
  }
  return c.threads;
}

struct Context {
  RunConfig config;
  bool config_given = false;
  fs::path out_dir;
  fs::path snapshots;
  std::ostream& out;
};

// Without a config file the run parameters come from the snapshot headers.
void adopt_snapshot_parameters(RunConfig& c, const SnapshotSequence& seq) {
  c.solver.grid = seq.grid();
  c.solver.viscosity = seq.viscosity();
  c.solver.t_end = seq.time(seq.size() - 1);
}

SnapshotDirectory open_snapshots_unchecked(const fs::path& dir) {
  SnapshotDirectory seq(dir);
  if (seq.size() == 0) throw ValidationError("no snapshots in " + dir.string());
  return seq;
}

SnapshotDirectory open_snapshots(const Context& ctx) {
  SnapshotDirectory seq = open_snapshots_unchecked(ctx.snapshots);
  if (seq.grid() != ctx.config.solver.grid) throw ValidationError("snapshot grid does not match the configured grid");
  return seq;
}

std::vector<double> diagnostic_times(const RunConfig& c, const SnapshotSequence& seq) {
  if (!c.diagnostics.times.empty()) return c.diagnostics.times;
  return {seq.time(seq.size() - 1)};
}

std::vector<Cover> scale_family(const RunConfig& c, const Grid& grid, double R, std::size_t scale_index) {
  std::vector<Cover> family;
  for (std::size_t m = 0; m < c.covers.family_size; ++m) {
    const std::uint64_t seed = c.covers.seed * 1000003ULL + scale_index * 1009ULL + m;
    family.push_back(generate(c.macro.radius, R, grid, {c.macro_center(), c.covers.k1, c.covers.k2, c.covers.strategy, seed}));
  }
  return family;
}

int cmd_simulate(Context& ctx) {
  const RunConfig& c = ctx.config;
  fs::create_directories(ctx.snapshots);
  for (const auto& e : fs::directory_iterator(ctx.snapshots))
    if (e.path().extension() == ".vscp") fs::remove(e.path());

  SolverConfig sc = c.solver;
  sc.dump_path = (ctx.out_dir / "failed_state.vscp").string();
  std::size_t written = 0;
  const RunSummary summary = simulate(sc, [&](const Snapshot& s) {
    write_snapshot(ctx.snapshots / snapshot_file_name(written++), s.velocity, sc.viscosity);
  });

  auto csv = open_csv(ctx.out_dir / "steps.csv");
  csv << "step,time,energy,dissipation_rate,max_vorticity,cfl\n";
  for (const auto& r : summary.steps)
    csv << r.step << ',' << r.time << ',' << r.energy << ',' << r.dissipation_rate << ',' << r.max_vorticity << ','
        << r.cfl << '\n';
  json j{{"config", c},
         {"summary",
          {{"steps", summary.steps.size()},
           {"snapshots", written},
           {"dissipated", summary.dissipated},
           {"final_energy", summary.steps.empty() ? 0.0 : summary.steps.back().energy}}}};
  write_json(ctx.out_dir / "run.json", j);
  ctx.out << "simulate: " << written << " snapshots in " << ctx.snapshots.string() << '\n';
  return exit_ok;
}

struct DiagnoseFlags {
  bool budget = false, macro = false, vst = false, theorem = false, comparability = false;
};

int cmd_diagnose(Context& ctx, DiagnoseFlags f) {
  if (!f.budget && !f.macro && !f.vst && !f.theorem && !f.comparability) f.macro = f.vst = true;
  const SnapshotDirectory seq = open_snapshots(ctx);
  const RunConfig& c = ctx.config;
  const Grid& grid = seq.grid();
  const EnsembleSettings settings = c.settings();
  const TemporalCutoff eta = settings.temporal();
  const SpatialCutoff psi0 = macro_cutoff(c.macro_domain(), c.cutoffs.rho_spatial, grid.length());
  const auto times = diagnostic_times(c, seq);
  const auto scales = c.scales();

  if (f.macro) {
    json rows = json::array();
    for (double t : times) rows.push_back({{"time", t}, {"stats", macro_stats(seq, t, psi0, eta)}});
    write_json(ctx.out_dir / "macro.json", {{"config", c}, {"macro", rows}});
    for (const auto& r : rows) ctx.out << "macro t=" << r["time"] << ' ' << r["stats"].dump() << '\n';
  }

  if (f.budget) {
    const Cover cover = generate(c.macro.radius, scales.front(), grid,
                                 {c.macro_center(), c.covers.k1, c.covers.k2, c.covers.strategy, c.covers.seed});
    const auto elements = element_cutoffs(cover, psi0);
    auto csv = open_csv(ctx.out_dir / "budget.csv");
    csv << "time,element,vst,final_enstrophy,palinstrophy,cutoff,transport,residual,relative_residual\n";
    json rows = json::array();
    ctx.out << "budget (scale " << scales.front() << ", " << elements.size() << " elements)\n";
    ctx.out << std::setw(8) << "time" << std::setw(6) << "elem" << std::setw(14) << "vst" << std::setw(14) << "residual"
            << std::setw(14) << "relative" << '\n';
    for (double t : times) {
      const auto budgets = budget_check(seq, elements, eta, t);
      for (std::size_t i = 0; i < budgets.size(); ++i) {
        const auto& b = budgets[i];
        csv << t << ',' << i << ',' << b.vst << ',' << b.final_enstrophy << ',' << b.palinstrophy << ',' << b.cutoff
            << ',' << b.transport << ',' << b.residual << ',' << b.relative_residual << '\n';
        rows.push_back({{"time", t}, {"element", i}, {"budget", b}});
        ctx.out << std::setw(8) << t << std::setw(6) << i << std::setw(14) << b.vst << std::setw(14) << b.residual
                << std::setw(14) << b.relative_residual << '\n';
      }
    }
    write_json(ctx.out_dir / "budget.json", {{"config", c}, {"cover", cover}, {"budget", rows}});
  }

  if (f.vst || f.comparability) {
    std::vector<std::vector<Cover>> families;
    for (std::size_t si = 0; si < scales.size(); ++si) families.push_back(scale_family(c, grid, scales[si], si));

    if (f.vst) {
      std::vector<EnsembleReport> all;
      json rows = json::array();
      for (double t : times) {
        const DensitySeries stretching = DensitySeries::from_sequence(seq, DensityKind::stretching, t, &eta);
        for (std::size_t si = 0; si < scales.size(); ++si) {
          json members = json::array();
          for (const auto& cover : families[si]) {
            EnsembleReport r = vst_ensemble(stretching, cover, settings, t);
            members.push_back(r);
            all.push_back(std::move(r));
          }
          rows.push_back({{"time", t}, {"scale", scales[si]}, {"members", members}});
        }
      }
      write_csv(ctx.out_dir / "vst.csv", all);
      write_json(ctx.out_dir / "vst.json", {{"config", c}, {"vst", rows}});
      for (const auto& r : all) ctx.out << "vst R=" << r.scale << " t=" << r.time << " mean=" << r.mean << '\n';
    }

    if (f.comparability) {
      std::vector<Cover> covers;
      for (const auto& fam : families) covers.insert(covers.end(), fam.begin(), fam.end());
      json rows = json::array();
      for (double t : times) {
        const DensitySeries series = DensitySeries::from_sequence(seq, c.diagnostics.density, t, &eta);
        const ComparabilityReport r = comparability(series, covers, settings, t);
        rows.push_back({{"time", t},
                        {"density", to_string(c.diagnostics.density)},
                        {"f0", r.f0},
                        {"ratios", r.ratios},
                        {"k_star", r.k_star},
                        {"all_positive", r.all_positive}});
        ctx.out << "comparability t=" << t << " K*=" << r.k_star << '\n';
      }
      write_json(ctx.out_dir / "comparability.json", {{"config", c}, {"comparability", rows}});
    }
  }

  if (f.theorem) {
    TheoremOptions opt;
    opt.scales = scales;
    opt.family_size = c.covers.family_size;
    opt.c_report = c.diagnostics.c_report;
    opt.k1 = c.covers.k1;
    opt.k2 = c.covers.k2;
    opt.seed = c.covers.seed;
    opt.settings = settings;
    json rows = json::array();
    for (double t : times) {
      const TheoremReport r = theorem_check(seq, t, c.macro_domain(), opt);
      rows.push_back({{"time", t}, {"report", r}});
      ctx.out << "theorem t=" << t << (r.applicable ? " applicable" : " not applicable: " + r.reason);
      if (r.applicable) ctx.out << " c_emp=" << r.c_emp << " all_positive=" << (r.all_positive ? "yes" : "no");
      ctx.out << '\n';
    }
    write_json(ctx.out_dir / "theorem.json", {{"config", c}, {"theorem", rows}});
  }
  return exit_ok;
}

int cmd_covers(Context& ctx) {
  const RunConfig& c = ctx.config;
  const double R = c.scales().front();
  const Cover cover =
      generate(c.macro.radius, R, c.solver.grid, {c.macro_center(), c.covers.k1, c.covers.k2, c.covers.strategy, c.covers.seed});
  const CertReport cert = certify(cover, c.solver.grid);
  write_json(ctx.out_dir / "covers.json", {{"config", c}, {"cover", cover}, {"certification", cert}});
  ctx.out << "covers: " << cover.size() << " balls of radius " << R << ", max multiplicity " << cert.max_multiplicity
          << (cert.passed ? ", certified" : ", NOT certified") << '\n';
  return cert.passed ? exit_ok : exit_invalid;
}

int cmd_sparseness(Context& ctx) {
  const SnapshotDirectory seq = open_snapshots(ctx);
  const RunConfig& c = ctx.config;
  const double t = diagnostic_times(c, seq).front();
  const CriticalityReport rep = criticality_report(seq, t, c.criticality());
  write_json(ctx.out_dir / "sparseness.json", {{"config", c}, {"criticality", rep}});
  if (rep.scan) write_csv(ctx.out_dir / "scan.csv", *rep.scan);
  const VectorField w = curl(seq.velocity(seq.index_at(t)));
  write_mask(ctx.out_dir / "intense_region.mask", level_set(w, rep.threshold));
  ctx.out << "sparseness: delta=" << rep.delta << " h=" << rep.h << " alpha=" << rep.alpha << " d0=" << rep.d0 << '\n';
  ctx.out << "  |w|max=" << rep.omega_max << " volume=" << rep.volume << " tchebyshev bound=" << rep.tchebyshev_bound
          << '\n';
  if (rep.scan)
    ctx.out << "  scan at r=" << rep.scan->scale << ", s=" << *rep.scan_time << ": " << rep.scan->passed << '/'
            << rep.scan->points << " points sparse" << (rep.partial ? " (partial window)" : "") << '\n';
  return exit_ok;
}

int cmd_report(Context& ctx) {
  static const char* sections[] = {"run", "macro", "budget", "vst", "comparability", "theorem", "covers", "sparseness"};
  static const char* tables[] = {"steps", "budget", "vst", "scan"};
  json summary{{"sections", json::object()}, {"tables", json::object()}};
  std::size_t found = 0;
  for (const char* name : sections) {
    const fs::path p = ctx.out_dir / (std::string(name) + ".json");
    if (!fs::exists(p)) continue;
    std::ifstream in(p);
    try {
      summary["sections"][name] = json::parse(in);
    } catch (const json::exception& e) {
      throw FormatError(p.string() + ": " + e.what());
    }
    ++found;
  }
  for (const char* name : tables) {
    const fs::path p = ctx.out_dir / (std::string(name) + ".csv");
    if (!fs::exists(p)) continue;
    std::ifstream in(p);
    std::string header, line;
    std::getline(in, header);
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    summary["tables"][name] = {{"file", p.filename().string()}, {"header", header}, {"rows", rows}};
    ++found;
  }
  if (found == 0) throw ValidationError("report: no outputs found in " + ctx.out_dir.string());
  write_json(ctx.out_dir / "summary.json", summary);
  ctx.out << "report: merged " << found << " outputs into " << (ctx.out_dir / "summary.json").string() << '\n';
  return exit_ok;
}

template <class T>
void add_override(CLI::App* app, const std::string& name, std::optional<T>& target, const std::string& help) {
  app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Localized vorticity diagnostics for periodic Navier-Stokes runs", "vscope"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path, out_dir = "vscope_out", snapshots;
  std::optional<int> threads;
  Overrides ov;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out-dir", out_dir, "Directory for snapshots and reports")->capture_default_str();
  add_override(&app, "--threads", threads, "Worker threads (falls back to VSCOPE_THREADS)");
  add_override(&app, "--seed", ov.seed, "Seed for the initial condition, covers and sparseness sampling");

  auto* sim = app.add_subcommand("simulate", "Run the solver and write snapshots");
  add_override(sim, "--n", ov.n, "Grid points per axis");
  add_override(sim, "--nu", ov.nu, "Viscosity");
  add_override(sim, "--dt", ov.dt, "Time step");
  add_override(sim, "--t-end", ov.t_end, "Final time");
  add_override(sim, "--stride", ov.stride, "Steps between snapshots");
  add_override(sim, "--ic", ov.ic, "Initial condition: taylor_green, taylor_green_3d, abc, random");

  DiagnoseFlags df;
  auto* diag = app.add_subcommand("diagnose", "Macro statistics, budgets, VST ensembles, theorem report");
  diag->add_flag("--budget", df.budget, "Localized enstrophy budget per cover element");
  diag->add_flag("--macro", df.macro, "Macro-scale E0, P0, sigma, M0");
  diag->add_flag("--vst", df.vst, "VST ensemble averages per scale");
  diag->add_flag("--comparability", df.comparability, "Ensemble averages of the configured density against F0");
  diag->add_flag("--theorem", df.theorem, "Positivity range check");
  diag->add_option("--snapshots", snapshots, "Snapshot directory (default OUT/snapshots)");
  add_override(diag, "--time", ov.time, "Diagnostic time");
  add_override(diag, "--R0", ov.R0, "Macro radius");
  add_override(diag, "--R", ov.R, "Single cover scale");

  auto* cov = app.add_subcommand("covers", "Generate and certify a (K1,K2)-cover");
  add_override(cov, "--n", ov.n, "Certification grid points per axis");
  add_override(cov, "--R0", ov.R0, "Macro radius");
  add_override(cov, "--R", ov.R, "Cover scale");
  add_override(cov, "--K1", ov.k1, "Global count factor");
  add_override(cov, "--K2", ov.k2, "Local multiplicity bound");
  add_override(cov, "--strategy", ov.strategy, "lattice or jittered");

  auto* sp = app.add_subcommand("sparseness", "Intense-region volume, Tchebyshev bound and sparseness scan");
  sp->add_option("--snapshots", snapshots, "Snapshot directory (default OUT/snapshots)");
  add_override(sp, "--time", ov.time, "Diagnostic time");
  add_override(sp, "--delta", ov.delta, "Sparseness ratio delta in (0,1)");
  add_override(sp, "--d0", ov.d0, "Smoothing constant d0");
  add_override(sp, "--c1", ov.c1, "Intensity factor c1 > 1");
  add_override(sp, "--directions", ov.directions, "Sampled directions");
  add_override(sp, "--points", ov.points, "Sampled query points");

  auto* rep = app.add_subcommand("report", "Merge outputs into summary.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return exit_invalid;
  }

  try {
    Context ctx{RunConfig{}, !config_path.empty(), out_dir, {}, out};
    if (ctx.config_given) ctx.config = load_config(config_path);
    apply(ov, ctx.config);
    if (cov->parsed() && !ov.n) {
      // certification needs R >= 8 spacings; refine the grid when the configured one is too coarse
      const double L = ctx.config.solver.grid.length();
      const double R = ctx.config.scales().front();
      if (R > 0.0 && R < minimum_scale(ctx.config.solver.grid)) {
        int n = static_cast<int>(std::ceil(8.0 * L / R - 1e-9));
        n += n % 2;
        ctx.config.solver.grid = Grid(n, L);
      }
    }
    ctx.snapshots = snapshots.empty() ? ctx.out_dir / "snapshots" : fs::path(snapshots);
    if ((diag->parsed() || sp->parsed()) && !ctx.config_given) {
      const SnapshotDirectory seq = open_snapshots_unchecked(ctx.snapshots);
      adopt_snapshot_parameters(ctx.config, seq);
    }
    ctx.config.validate();
    set_thread_count(resolve_threads(threads, ctx.config));
    fs::create_directories(ctx.out_dir);

    if (sim->parsed()) return cmd_simulate(ctx);
    if (diag->parsed()) return cmd_diagnose(ctx, df);
    if (cov->parsed()) return cmd_covers(ctx);
    if (sp->parsed()) return cmd_sparseness(ctx);
    if (rep->parsed()) return cmd_report(ctx);
    return exit_invalid;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return exit_numerical;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << '\n';
    return exit_invalid;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return exit_invalid;
  } catch (const fs::filesystem_error& e) {
    err << "file error: " << e.what() << '\n';
    return exit_invalid;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"vscope"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace vscope

#include "vscope/sparseness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "vscope/snapshot_io.hpp"
#include "vscope/spectral.hpp"

namespace vscope {

namespace {

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

// Periodic 3D summed-area table over the mask, for quick empty/full box tests.
class BoxCounter {
 public:
  explicit BoxCounter(const LevelSet& s) : n_(s.grid.n()) {
    const std::size_t m = static_cast<std::size_t>(n_) + 1;
    sat_.assign(m * m * m, 0);
    for (int k = 0; k < n_; ++k)
      for (int j = 0; j < n_; ++j)
        for (int i = 0; i < n_; ++i) {
          const std::uint32_t v = s.mask[s.grid.index(i, j, k)];
          at(i + 1, j + 1, k + 1) = v + at(i, j + 1, k + 1) + at(i + 1, j, k + 1) + at(i + 1, j + 1, k) - at(i, j, k + 1) -
                                    at(i, j + 1, k) - at(i + 1, j, k) + at(i, j, k);
        }
  }

  // Number of in-nodes among node indices [lo, hi] per axis, with periodic wrap.
  std::int64_t count(const std::array<int, 3>& lo, const std::array<int, 3>& hi) const {
    std::array<std::vector<std::pair<int, int>>, 3> r;
    for (int a = 0; a < 3; ++a) r[a] = ranges(lo[a], hi[a]);
    std::int64_t total = 0;
    for (auto [x0, x1] : r[0])
      for (auto [y0, y1] : r[1])
        for (auto [z0, z1] : r[2]) total += box(x0, x1, y0, y1, z0, z1);
    return total;
  }

  std::int64_t volume(const std::array<int, 3>& lo, const std::array<int, 3>& hi) const {
    std::int64_t v = 1;
    for (int a = 0; a < 3; ++a) v *= std::min<std::int64_t>(hi[a] - lo[a] + 1, n_);
    return v;
  }

 private:
  std::int64_t& at(int i, int j, int k) {
    const std::size_t m = static_cast<std::size_t>(n_) + 1;
    return sat_[static_cast<std::size_t>(i) + m * (static_cast<std::size_t>(j) + m * k)];
  }
  std::int64_t at(int i, int j, int k) const {
    const std::size_t m = static_cast<std::size_t>(n_) + 1;
    return sat_[static_cast<std::size_t>(i) + m * (static_cast<std::size_t>(j) + m * k)];
  }
  std::int64_t box(int x0, int x1, int y0, int y1, int z0, int z1) const {
    ++x1, ++y1, ++z1;
    return at(x1, y1, z1) - at(x0, y1, z1) - at(x1, y0, z1) - at(x1, y1, z0) + at(x0, y0, z1) + at(x0, y1, z0) +
           at(x1, y0, z0) - at(x0, y0, z0);
  }
  std::vector<std::pair<int, int>> ranges(int lo, int hi) const {
    if (hi - lo + 1 >= n_) return {{0, n_ - 1}};
    int a = lo % n_;
    if (a < 0) a += n_;
    const int b = a + (hi - lo);
    if (b < n_) return {{a, b}};
    return {{a, n_ - 1}, {0, b - n_}};
  }

  int n_;
  std::vector<std::int64_t> sat_;
};

struct Best {
  Vec3 direction;
  double ratio;
};

Best best_direction(const LevelSet& s, const Vec3& x0, double r, const std::vector<Vec3>& dirs, int samples) {
  Best best{dirs.front(), 2.0};
  for (const Vec3& d : dirs) {
    const double q = occupancy(s, x0, r, d, samples);
    if (q < best.ratio) best = {d, q};
    if (best.ratio == 0.0) break;
  }
  return best;
}

void check_scale(const LevelSet& s, double r) {
  if (!(r > 0.0) || !(r < s.grid.length() / 4.0))
    throw ValidationError("sparseness: scale r must lie in (0, box_length/4)");
}

SparsenessResult evaluate(const LevelSet& s, const Vec3& x0, double r, double delta, const SparsenessOptions& opt,
                          const std::vector<Vec3>& dirs, const BoxCounter* boxes) {
  SparsenessResult res;
  res.point = x0;
  res.scale = r;
  res.delta = delta;
  bool done = false;
  if (boxes) {
    const double h = s.grid.spacing();
    std::array<int, 3> lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      lo[a] = static_cast<int>(std::floor((x0[a] - r) / h));
      hi[a] = static_cast<int>(std::floor((x0[a] + r) / h)) + 1;
    }
    const std::int64_t c = boxes->count(lo, hi);
    if (c == 0 || c == boxes->volume(lo, hi)) {
      res.direction = dirs.front();
      res.ratio = c == 0 ? 0.0 : 1.0;
      done = true;
    }
  }
  if (!done) {
    const Best b = best_direction(s, x0, r, dirs, opt.samples_per_spacing);
    res.direction = b.direction;
    res.ratio = b.ratio;
  }
  res.sparse = res.ratio <= delta;
  if (opt.self_check) {
    SparsenessOptions fine = opt;
    fine.directions *= 2;
    fine.samples_per_spacing *= 2;
    const Best b = best_direction(s, x0, r, sparseness_directions(fine), fine.samples_per_spacing);
    res.refinement_change = std::abs(b.ratio - res.ratio);
  }
  return res;
}

std::vector<Vec3> scan_points(const Grid& g, const ScanPoints& p) {
  std::vector<Vec3> pts;
  if (p.mode == ScanPoints::Mode::all_nodes) {
    pts.reserve(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) pts.push_back(g.node(i));
    return pts;
  }
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> u(0.0, g.length());
  pts.reserve(p.count);
  for (std::size_t i = 0; i < p.count; ++i) {
    const double x = u(rng), y = u(rng), z = u(rng);
    pts.push_back({x, y, z});
  }
  return pts;
}

}  // namespace

LevelSet LevelSet::from_mask(const Grid& grid, std::vector<std::uint8_t> mask, double time) {
  if (mask.size() != grid.size()) throw ValidationError("level set: mask size does not match grid");
  LevelSet s;
  s.grid = grid;
  s.mask = std::move(mask);
  for (auto& m : s.mask) m = m ? 1 : 0;
  s.threshold = 0.5;
  s.time = time;
  return s;
}

std::size_t LevelSet::count() const { return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1)); }

double LevelSet::level(const Vec3& x) const {
  const double h = grid.spacing();
  std::array<int, 3> i0{};
  std::array<double, 3> f{};
  for (int a = 0; a < 3; ++a) {
    const double u = x[a] / h;
    const double fl = std::floor(u);
    i0[a] = static_cast<int>(fl);
    f[a] = u - fl;
  }
  double v = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    const double w = (dx ? f[0] : 1.0 - f[0]) * (dy ? f[1] : 1.0 - f[1]) * (dz ? f[2] : 1.0 - f[2]);
    if (w == 0.0) continue;
    const std::size_t idx = grid.wrapped_index(i0[0] + dx, i0[1] + dy, i0[2] + dz);
    v += w * (has_magnitude() ? magnitude[idx] : static_cast<double>(mask[idx]));
  }
  return v - (has_magnitude() ? threshold : 0.5);
}

LevelSet level_set(const VectorField& omega, double threshold) {
  if (!(threshold >= 0.0)) throw ValidationError("level set: threshold must be >= 0");
  LevelSet s;
  s.grid = omega.grid();
  s.threshold = threshold;
  s.time = omega.time();
  const ScalarField mag = magnitude(omega);
  s.magnitude.assign(mag.values().begin(), mag.values().end());
  s.mask.resize(s.magnitude.size());
  for (std::size_t i = 0; i < s.mask.size(); ++i) s.mask[i] = s.magnitude[i] > threshold ? 1 : 0;
  return s;
}

HAlpha h_alpha(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("h_alpha: delta must lie in (0, 1)");
  const double d2 = delta * delta;
  const double h = 2.0 / std::numbers::pi * std::asin((1.0 - d2) / (1.0 + d2));
  return {h, (1.0 - h) / h};
}

std::vector<Vec3> sparseness_directions(const SparsenessOptions& opt) {
  if (opt.directions < 1 && !opt.include_axes) throw ValidationError("sparseness: no directions to sample");
  std::vector<Vec3> dirs;
  if (opt.include_axes) dirs = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < opt.directions; ++i) {
    const double z = 1.0 - (i + 0.5) / opt.directions;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    dirs.push_back({rho * std::cos(phi), rho * std::sin(phi), z});
  }
  return dirs;
}

double occupancy(const LevelSet& s, const Vec3& x0, double r, const Vec3& d, int samples_per_spacing) {
  if (samples_per_spacing < 1) throw ValidationError("sparseness: samples per spacing must be >= 1");
  const int n = std::max(1, static_cast<int>(std::ceil(2.0 * r / s.grid.spacing() * samples_per_spacing - 1e-9)));
  const double ds = 2.0 * r / n;
  double prev = s.level(x0 - r * d);
  double inside = 0.0;
  for (int j = 1; j <= n; ++j) {
    const double cur = s.level(x0 + (-r + j * ds) * d);
    const bool a = s.inside(prev), b = s.inside(cur);
    if (a && b)
      inside += 1.0;
    else if (a != b) {
      const double t = prev / (prev - cur);  // crossing within the interval
      inside += a ? t : 1.0 - t;
    }
    prev = cur;
  }
  return inside / n;
}

SparsenessResult linear_sparseness(const LevelSet& s, const Vec3& x0, double r, double delta,
                                   const SparsenessOptions& opt) {
  check_scale(s, r);
  return evaluate(s, x0, r, delta, opt, sparseness_directions(opt), nullptr);
}

ScanReport sparseness_scan(const LevelSet& s, double r, double delta, const ScanPoints& points,
                           const SparsenessOptions& opt) {
  check_scale(s, r);
  const auto dirs = sparseness_directions(opt);
  const auto pts = scan_points(s.grid, points);
  // the table costs 8 bytes per node; skip it on very large grids
  std::optional<BoxCounter> boxes;
  if (s.grid.n() <= 256) boxes.emplace(s);

  ScanReport rep;
  rep.scale = r;
  rep.delta = delta;
  rep.points = pts.size();
  rep.results.resize(pts.size());
  SparsenessOptions per_point = opt;
  per_point.self_check = false;
  const long np = static_cast<long>(pts.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < np; ++i) rep.results[i] = evaluate(s, pts[i], r, delta, per_point, dirs, boxes ? &*boxes : nullptr);

  std::size_t worst = 0;
  for (std::size_t i = 0; i < rep.results.size(); ++i) {
    if (rep.results[i].sparse) ++rep.passed;
    if (rep.results[i].ratio > rep.results[worst].ratio) worst = i;
  }
  rep.fraction_passed = pts.empty() ? 1.0 : static_cast<double>(rep.passed) / pts.size();
  rep.all_sparse = rep.passed == pts.size();
  if (!pts.empty()) {
    rep.worst = rep.results[worst];
    if (opt.self_check) rep.worst = linear_sparseness(s, rep.worst.point, r, delta, opt);
  }
  return rep;
}

CriticalityReport criticality_report(const SnapshotSequence& seq, double t, const CriticalityOptions& opt) {
  if (!(opt.c1 > 1.0) || !(opt.c3 > 1.0)) throw ValidationError("criticality: c1 and c3 must exceed 1");
  if (!(opt.d0 > 0.0)) throw ValidationError("criticality: d0 must be positive");
  const HAlpha ha = h_alpha(opt.delta);
  const double alpha = opt.alpha.value_or(ha.alpha_min);
  if (alpha < ha.alpha_min * (1.0 - 1e-12)) throw ValidationError("criticality: alpha below (1 - h)/h");

  CriticalityReport rep;
  rep.time = t;
  rep.c1 = opt.c1;
  rep.c3 = opt.c3;
  rep.delta = opt.delta;
  rep.d0 = opt.d0;
  rep.h = ha.h;
  rep.alpha = alpha;

  const std::size_t it = seq.index_at(t);
  for (std::size_t j = 0; j <= it; ++j) {
    const VectorField w = curl(seq.velocity(j));
    const double wmax = max_magnitude(w);
    const double vol = level_set(w, wmax / opt.c1).volume();
    rep.trend.push_back({seq.time(j), wmax, vol, vol * wmax});
    if (j != it) continue;
    rep.omega_max = wmax;
    rep.omega_l1 = l1_norm(w);
    rep.threshold = wmax / opt.c1;
    rep.volume = vol;
    rep.c2_implied = vol * wmax;
  }

  std::ostringstream note;
  note << "d0 = " << opt.d0 << " is a configuration input; sparseness uses the best of the sampled directions";
  if (rep.omega_max == 0.0) {
    rep.tchebyshev_bound = 0.0;
    rep.tchebyshev_ok = rep.volume == 0.0;
    note << "; vorticity vanishes, no scale or window";
    rep.note = note.str();
    return rep;
  }
  rep.tchebyshev_bound = rep.omega_l1 / rep.threshold;
  rep.tchebyshev_ok = rep.volume <= rep.tchebyshev_bound * (1.0 + 1e-12);
  rep.cross_section = opt.c3 / std::sqrt(rep.omega_max);
  rep.sparse_threshold = rep.omega_max / std::pow(opt.d0, alpha);
  rep.scale_cap = 1.0 / (2.0 * opt.d0 * opt.d0 * std::sqrt(rep.omega_max));
  rep.window_start = t + 1.0 / (4.0 * opt.d0 * opt.d0 * rep.omega_max);
  rep.window_end = t + 1.0 / (opt.d0 * opt.d0 * rep.omega_max);

  const double last = seq.time(seq.size() - 1);
  rep.partial = *rep.window_end > last * (1.0 + 1e-12);
  const double mid = 0.5 * (*rep.window_start + *rep.window_end);
  std::optional<std::size_t> chosen;
  for (std::size_t j = 0; j < seq.size(); ++j) {
    const double s = seq.time(j);
    if (s < *rep.window_start || s > *rep.window_end) continue;
    if (!chosen || std::abs(s - mid) < std::abs(seq.time(*chosen) - mid)) chosen = j;
  }
  if (!chosen) {
    chosen = seq.nearest(mid);
    note << "; no snapshot inside the window, nearest used";
  }
  if (rep.partial) note << "; window extends past the last snapshot";
  rep.scan_time = seq.time(*chosen);

  double r = *rep.scale_cap;
  const double r_max = 0.2499 * seq.grid().length();
  if (r > r_max) {
    r = r_max;
    note << "; scale cap exceeds box_length/4, clamped";
  }
  rep.scan_scale = r;
  const VectorField ws = curl(seq.velocity(*chosen));
  SparsenessOptions so = opt.sparseness;
  so.self_check = true;
  rep.scan = sparseness_scan(level_set(ws, rep.sparse_threshold), r, opt.delta, opt.points, so);
  rep.note = note.str();
  return rep;
}

void to_json(nlohmann::json& j, const SparsenessResult& r) {
  j = nlohmann::json{{"point", r.point},   {"scale", r.scale},   {"direction", r.direction},
                     {"ratio", r.ratio},   {"delta", r.delta},   {"sparse", r.sparse}};
  j["refinement_change"] = opt_json(r.refinement_change);
}

void to_json(nlohmann::json& j, const ScanReport& r) {
  j = nlohmann::json{{"scale", r.scale},
                     {"delta", r.delta},
                     {"points", r.points},
                     {"passed", r.passed},
                     {"fraction_passed", r.fraction_passed},
                     {"all_sparse", r.all_sparse},
                     {"worst", r.worst}};
}

void to_json(nlohmann::json& j, const CriticalityReport& r) {
  j = nlohmann::json{{"time", r.time},
                     {"c1", r.c1},
                     {"c3", r.c3},
                     {"delta", r.delta},
                     {"d0", r.d0},
                     {"h", r.h},
                     {"alpha", r.alpha},
                     {"omega_max", r.omega_max},
                     {"omega_l1", r.omega_l1},
                     {"threshold", r.threshold},
                     {"volume", r.volume},
                     {"tchebyshev_bound", r.tchebyshev_bound},
                     {"tchebyshev_ok", r.tchebyshev_ok},
                     {"c2_implied", r.c2_implied},
                     {"sparse_threshold", r.sparse_threshold},
                     {"partial", r.partial},
                     {"note", r.note}};
  j["cross_section"] = opt_json(r.cross_section);
  j["scale_cap"] = opt_json(r.scale_cap);
  j["window"] = r.window_start ? nlohmann::json::array({*r.window_start, *r.window_end}) : nlohmann::json(nullptr);
  j["scan_time"] = opt_json(r.scan_time);
  j["scan_scale"] = opt_json(r.scan_scale);
  j["scan"] = r.scan ? nlohmann::json(*r.scan) : nlohmann::json(nullptr);
  auto& trend = j["trend"] = nlohmann::json::array();
  for (const auto& p : r.trend)
    trend.push_back({{"time", p.time}, {"omega_max", p.omega_max}, {"volume", p.volume}, {"product", p.product}});
}

void write_csv(const std::filesystem::path& path, const ScanReport& r) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.precision(17);
  out << "x,y,z,ratio,dx,dy,dz,sparse\n";
  for (const auto& p : r.results)
    out << p.point[0] << ',' << p.point[1] << ',' << p.point[2] << ',' << p.ratio << ',' << p.direction[0] << ','
        << p.direction[1] << ',' << p.direction[2] << ',' << (p.sparse ? 1 : 0) << '\n';
}

void write_mask(const std::filesystem::path& path, const LevelSet& s) { write_mask(path, s.mask); }

}  // namespace vscope

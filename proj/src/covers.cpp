#include "vscope/covers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <random>
#include <sstream>
#include <tuple>

#include "vscope/cutoffs.hpp"

namespace vscope {

std::string to_string(CoverStrategy s) { return s == CoverStrategy::lattice ? "lattice" : "jittered"; }

std::string to_string(CoverBias b) {
  switch (b) {
    case CoverBias::positive: return "positive";
    case CoverBias::negative: return "negative";
    default: return "none";
  }
}

double Cover::count_lower() const { return std::pow(macro_radius / scale, 3); }
double Cover::count_upper() const { return k1 * count_lower(); }
Vec3 Cover::absolute_center(std::size_t i) const { return macro_center + centers[i]; }

double minimum_scale(const Grid& grid) { return 8.0 * grid.spacing(); }

namespace {

constexpr double kLatticeFactor = 1.6;   // BCC cube side / R
constexpr double kJitterFraction = 1.0 / 16.0;

// Nodes of the cube around the macro center that contains B(0, R0).
class MacroCube {
 public:
  MacroCube(const Grid& g, const Vec3& center, double R0) : grid_(g), R0_(R0), h_(g.spacing()) {
    for (int a = 0; a < 3; ++a) {
      base_[a] = static_cast<int>(std::lround(center[a] / h_));
      offset_[a] = base_[a] * h_ - center[a];
    }
    r_ = static_cast<int>(std::ceil(R0 / h_)) + 1;
    m_ = 2 * r_ + 1;
  }

  int side() const { return m_; }
  std::size_t size() const { return std::size_t(m_) * m_ * m_; }
  std::size_t local(int i, int j, int k) const { return std::size_t(i) + std::size_t(m_) * (j + std::size_t(m_) * k); }
  double coord(int a, int i) const { return offset_[a] + (i - r_) * h_; }
  Vec3 pos(int i, int j, int k) const { return {coord(0, i), coord(1, j), coord(2, k)}; }
  bool inside(int i, int j, int k) const {
    const Vec3 p = pos(i, j, k);
    return dot(p, p) < R0_ * R0_;
  }
  std::size_t global(int i, int j, int k) const {
    return grid_.wrapped_index(base_[0] + i - r_, base_[1] + j - r_, base_[2] + k - r_);
  }

  // Inclusive local index range of nodes with |coord - x| <= rad on axis a.
  std::pair<int, int> range(int a, double x, double rad) const {
    const int lo = static_cast<int>(std::ceil((x - rad - offset_[a]) / h_ - 1e-9)) + r_;
    const int hi = static_cast<int>(std::floor((x + rad - offset_[a]) / h_ + 1e-9)) + r_;
    return {std::max(lo, 0), std::min(hi, m_ - 1)};
  }

  // f(local index, i, j, k, squared distance) for cube nodes inside B(0,R0) with |y - x| <= rad.
  template <class F>
  void for_ball(const Vec3& x, double rad, F&& f, int k_only = -1) const {
    auto [k0, k1] = range(2, x[2], rad);
    if (k_only >= 0) {
      if (k_only < k0 || k_only > k1) return;
      k0 = k1 = k_only;
    }
    const auto [j0, j1] = range(1, x[1], rad);
    const auto [i0, i1] = range(0, x[0], rad);
    const double r2 = rad * rad * (1.0 + 1e-12);
    for (int k = k0; k <= k1; ++k) {
      const double dz = coord(2, k) - x[2];
      for (int j = j0; j <= j1; ++j) {
        const double dy = coord(1, j) - x[1];
        for (int i = i0; i <= i1; ++i) {
          const double dx = coord(0, i) - x[0];
          const double d2 = dx * dx + dy * dy + dz * dz;
          if (d2 > r2 || !inside(i, j, k)) continue;
          f(local(i, j, k), i, j, k, d2);
        }
      }
    }
  }

 private:
  const Grid& grid_;
  double R0_, h_;
  int base_[3];
  double offset_[3];
  int r_, m_;
};

void check_geometry(double R0, double R, const Grid& grid) {
  if (!(R > 0.0) || !(R0 > 0.0)) throw ValidationError("cover: radii must be positive");
  if (R > R0 * (1.0 + 1e-12)) throw ValidationError("cover: scale R exceeds macro radius R0");
  if (4.0 * R0 > grid.length() * (1.0 + 1e-12)) throw ValidationError("cover: macro ball too large for the box (need 2 R0 <= L/2)");
}

std::vector<Vec3> bcc_points(double a, double reach, std::mt19937_64* rng, double jitter) {
  std::vector<Vec3> pts;
  const int m = static_cast<int>(std::ceil(reach / a)) + 1;
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  for (int k = -m; k <= m; ++k)
    for (int j = -m; j <= m; ++j)
      for (int i = -m; i <= m; ++i)
        for (double s : {0.0, 0.5}) {
          Vec3 p{(i + s) * a, (j + s) * a, (k + s) * a};
          if (rng && jitter > 0.0) {
            Vec3 d{normal(*rng), normal(*rng), normal(*rng)};
            const double len = norm(d);
            const double mag = jitter * std::cbrt(unif(*rng));
            if (len > 0.0) p = p + (mag / len) * d;
          }
          if (norm(p) < reach) pts.push_back(p);
        }
  return pts;
}

// Greedy selection of candidates until every node of B(0,R0) lies in some open ball.
std::vector<Vec3> greedy_cover(const std::vector<Vec3>& cand, double R, const MacroCube& cube) {
  std::vector<std::uint8_t> uncovered(cube.size(), 0);
  std::size_t remaining = 0;
  const int m = cube.side();
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i)
        if (cube.inside(i, j, k)) {
          uncovered[cube.local(i, j, k)] = 1;
          ++remaining;
        }
  const double R2 = R * R;
  auto gain = [&](std::size_t c) {
    std::size_t g = 0;
    cube.for_ball(cand[c], R, [&](std::size_t l, int, int, int, double d2) {
      if (d2 < R2 && uncovered[l]) ++g;
    });
    return g;
  };
  // (gain, -|x|, -index): ties go to the candidate nearest the macro center.
  using Entry = std::tuple<std::size_t, double, long>;
  std::priority_queue<Entry> pq;
  for (std::size_t c = 0; c < cand.size(); ++c) pq.emplace(gain(c), -norm(cand[c]), -static_cast<long>(c));
  std::vector<Vec3> chosen;
  while (remaining > 0 && !pq.empty()) {
    auto [g, nd, ni] = pq.top();
    pq.pop();
    const std::size_t c = static_cast<std::size_t>(-ni);
    const std::size_t fresh = gain(c);
    if (fresh == 0) continue;
    if (!pq.empty() && fresh < std::get<0>(pq.top())) {
      pq.emplace(fresh, nd, ni);
      continue;
    }
    chosen.push_back(cand[c]);
    cube.for_ball(cand[c], R, [&](std::size_t l, int, int, int, double d2) {
      if (d2 < R2 && uncovered[l]) {
        uncovered[l] = 0;
        --remaining;
      }
    });
  }
  if (remaining > 0) {
    std::ostringstream os;
    os << "cover: coverage violated, " << remaining << " nodes of B(0,R0) not in any B(x_i,R)";
    throw ValidationError(os.str());
  }
  return chosen;
}

// Reverse delete: drop elements (latest picks first) whose nodes are all covered twice.
std::vector<Vec3> prune(std::vector<Vec3> centers, double R, const MacroCube& cube) {
  std::vector<std::uint16_t> cov(cube.size(), 0);
  const double R2 = R * R;
  for (const Vec3& x : centers)
    cube.for_ball(x, R, [&](std::size_t l, int, int, int, double d2) {
      if (d2 < R2) ++cov[l];
    });
  std::vector<bool> keep(centers.size(), true);
  for (std::size_t i = centers.size(); i-- > 0;) {
    bool redundant = true;
    cube.for_ball(centers[i], R, [&](std::size_t l, int, int, int, double d2) {
      if (d2 < R2 && cov[l] < 2) redundant = false;
    });
    if (!redundant) continue;
    keep[i] = false;
    cube.for_ball(centers[i], R, [&](std::size_t l, int, int, int, double d2) {
      if (d2 < R2) --cov[l];
    });
  }
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < centers.size(); ++i)
    if (keep[i]) out.push_back(centers[i]);
  return out;
}

struct Counts {
  std::vector<std::uint16_t> coverage;      // |y - x_i| < R
  std::vector<std::uint16_t> multiplicity;  // |y - x_i| <= 2R
};

void accumulate(Counts& cnt, const MacroCube& cube, const Vec3& x, double R, int sign) {
  const double R2 = R * R;
  cube.for_ball(x, 2.0 * R, [&](std::size_t l, int, int, int, double d2) {
    cnt.multiplicity[l] = static_cast<std::uint16_t>(cnt.multiplicity[l] + sign);
    if (d2 < R2) cnt.coverage[l] = static_cast<std::uint16_t>(cnt.coverage[l] + sign);
  });
}

std::string describe(const CertReport& r, const Cover& c) {
  std::ostringstream os;
  os << "cover at R = " << c.scale << " failed certification:";
  for (const auto& f : r.failures) os << ' ' << f << ';';
  return os.str();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  std::uint32_t parts[2];
  seq.generate(parts, parts + 2);
  return (std::uint64_t(parts[0]) << 32) | parts[1];
}

}  // namespace

CertReport certify(const Cover& cover, const Grid& grid) {
  CertReport rep;
  rep.count = cover.size();
  rep.count_lower = cover.count_lower();
  rep.count_upper = cover.count_upper();
  const double R = cover.scale;
  if (R < minimum_scale(grid) * (1.0 - 1e-12)) {
    std::ostringstream os;
    os << "scale R = " << R << " below 8 grid spacings (" << minimum_scale(grid) << ")";
    rep.failures.push_back(os.str());
    return rep;
  }
  check_geometry(cover.macro_radius, R, grid);
  const MacroCube cube(grid, cover.macro_center, cover.macro_radius);
  const int m = cube.side();
  std::vector<std::size_t> uncovered(m, 0), checked(m, 0);
  std::vector<int> maxmult(m, 0);
  const double R2 = R * R;
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < m; ++k) {
    std::vector<std::uint16_t> cov(std::size_t(m) * m, 0), mult(std::size_t(m) * m, 0);
    for (const Vec3& x : cover.centers)
      cube.for_ball(
          x, 2.0 * R,
          [&](std::size_t, int i, int j, int, double d2) {
            const std::size_t l = std::size_t(i) + std::size_t(m) * j;
            ++mult[l];
            if (d2 < R2) ++cov[l];
          },
          k);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        if (!cube.inside(i, j, k)) continue;
        const std::size_t l = std::size_t(i) + std::size_t(m) * j;
        ++checked[k];
        if (cov[l] == 0) ++uncovered[k];
        maxmult[k] = std::max<int>(maxmult[k], mult[l]);
      }
  }
  rep.nodes_checked = std::accumulate(checked.begin(), checked.end(), std::size_t{0});
  rep.uncovered_nodes = std::accumulate(uncovered.begin(), uncovered.end(), std::size_t{0});
  rep.max_multiplicity = *std::max_element(maxmult.begin(), maxmult.end());

  rep.coverage_ok = rep.uncovered_nodes == 0;
  rep.multiplicity_ok = rep.max_multiplicity <= cover.k2;
  const double n = static_cast<double>(rep.count);
  rep.count_ok = n >= rep.count_lower * (1.0 - 1e-9) && n <= rep.count_upper * (1.0 + 1e-9);
  std::ostringstream os;
  if (!rep.coverage_ok) {
    os << "coverage: " << rep.uncovered_nodes << " nodes of B(0,R0) uncovered";
    rep.failures.push_back(os.str());
    os.str("");
  }
  if (!rep.multiplicity_ok) {
    os << "K2: multiplicity " << rep.max_multiplicity << " exceeds K2 = " << cover.k2;
    rep.failures.push_back(os.str());
    os.str("");
  }
  if (!rep.count_ok) {
    os << "K1: count n = " << rep.count << " outside [" << rep.count_lower << ", " << rep.count_upper << "]";
    rep.failures.push_back(os.str());
  }
  rep.passed = rep.failures.empty();
  return rep;
}

Cover generate(double macro_radius, double scale, const Grid& grid, const CoverOptions& options) {
  check_geometry(macro_radius, scale, grid);
  if (scale < minimum_scale(grid) * (1.0 - 1e-12)) {
    std::ostringstream os;
    os << "cover: scale R = " << scale << " below 8 grid spacings (" << minimum_scale(grid) << ")";
    throw ValidationError(os.str());
  }
  if (options.k1 < 1 || options.k2 < 1) throw ValidationError("cover: K1 and K2 must be positive");
  Cover cover;
  cover.macro_center = options.macro_center;
  cover.macro_radius = macro_radius;
  cover.scale = scale;
  cover.k1 = options.k1;
  cover.k2 = options.k2;
  cover.strategy = options.strategy;
  cover.seed = options.seed;

  std::mt19937_64 rng(options.seed);
  const bool jitter = options.strategy == CoverStrategy::jittered;
  const MacroCube cube(grid, options.macro_center, macro_radius);
  // When R is close to R0 the coarse lattice wastes balls; finer candidate
  // lattices give greedy more freedom and are tried only if the count is the problem.
  CertReport rep;
  for (int refine : {1, 2, 4}) {
    const double a = kLatticeFactor * scale / refine;
    auto cand = bcc_points(a, macro_radius + scale, jitter ? &rng : nullptr, kJitterFraction * a);
    if (jitter) cand.push_back({0.0, 0.0, 0.0});
    cover.centers = prune(greedy_cover(cand, scale, cube), scale, cube);
    rep = certify(cover, grid);
    if (rep.passed) return cover;
    if (!rep.coverage_ok || !rep.multiplicity_ok) break;
  }
  throw ValidationError(describe(rep, cover));
}

namespace {

// Local mass (1/R^3) sum f psi over B(x, 2R), with x snapped to the nearest node
// and the ball sampled with a stride so that large scales stay affordable.
class MassStencil {
 public:
  MassStencil(const Grid& g, double R) : grid_(g) {
    const double h = g.spacing();
    stride_ = std::max(1, static_cast<int>(std::floor(R / (4.0 * h))));
    const double step = stride_ * h;
    const int r = static_cast<int>(std::floor(2.0 * R / step));
    const SpatialCutoff psi = make_spatial({0.0, 0.0, 0.0}, R, 0.75, g.length());
    const double w = std::pow(step, 3) / std::pow(R, 3);
    for (int k = -r; k <= r; ++k)
      for (int j = -r; j <= r; ++j)
        for (int i = -r; i <= r; ++i) {
          const double v = psi.value({i * step, j * step, k * step});
          if (v > 0.0) taps_.push_back({i * stride_, j * stride_, k * stride_, v * w});
        }
  }

  double mass(const ScalarField& f, const Vec3& x) const {
    const double h = grid_.spacing();
    const int ci = static_cast<int>(std::lround(x[0] / h));
    const int cj = static_cast<int>(std::lround(x[1] / h));
    const int ck = static_cast<int>(std::lround(x[2] / h));
    double s = 0.0;
    for (const auto& t : taps_) s += t.w * f[grid_.wrapped_index(ci + t.i, cj + t.j, ck + t.k)];
    return s;
  }

 private:
  struct Tap {
    int i, j, k;
    double w;
  };
  const Grid& grid_;
  int stride_ = 1;
  std::vector<Tap> taps_;
};

Cover biased_cover(const ScalarField& f, double R0, double R, const FamilyOptions& opt, CoverBias bias,
                   std::uint64_t seed) {
  const Grid& grid = f.grid();
  CoverOptions co{opt.macro_center, opt.k1, opt.k2, CoverStrategy::jittered, seed};
  Cover cover = generate(R0, R, grid, co);
  cover.bias = bias;
  const double sgn = bias == CoverBias::positive ? 1.0 : -1.0;

  const MassStencil stencil(grid, R);
  const MacroCube cube(grid, opt.macro_center, R0);
  Counts cnt{std::vector<std::uint16_t>(cube.size(), 0), std::vector<std::uint16_t>(cube.size(), 0)};
  for (const Vec3& x : cover.centers) accumulate(cnt, cube, x, R, +1);

  std::mt19937_64 rng(mix_seed(seed, 0xb1a5));
  auto pool = bcc_points(R, R0 + R, &rng, kJitterFraction * R);
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const double s = sgn * stencil.mass(f, opt.macro_center + pool[i]);
    if (s > 0.0) ranked.emplace_back(-s, i);
  }
  std::sort(ranked.begin(), ranked.end());
  const auto n_max = static_cast<std::size_t>(std::floor(cover.count_upper() * (1.0 + 1e-12)));
  for (const auto& [neg, i] : ranked) {
    if (cover.centers.size() >= n_max) break;
    bool room = true;
    cube.for_ball(pool[i], 2.0 * R, [&](std::size_t l, int, int, int, double) {
      if (cnt.multiplicity[l] >= opt.k2) room = false;
    });
    if (!room) continue;
    cover.centers.push_back(pool[i]);
    accumulate(cnt, cube, pool[i], R, +1);
  }

  // Drop elements working against the bias while every node stays covered.
  std::vector<std::pair<double, std::size_t>> adverse;
  for (std::size_t i = 0; i < cover.centers.size(); ++i) {
    const double s = sgn * stencil.mass(f, opt.macro_center + cover.centers[i]);
    if (s < 0.0) adverse.emplace_back(s, i);
  }
  std::sort(adverse.begin(), adverse.end());
  const auto n_min = static_cast<std::size_t>(std::ceil(cover.count_lower() * (1.0 - 1e-12)));
  std::vector<bool> keep(cover.centers.size(), true);
  std::size_t n = cover.centers.size();
  const double R2 = R * R;
  for (const auto& [s, i] : adverse) {
    if (n <= n_min) break;
    bool redundant = true;
    cube.for_ball(cover.centers[i], R, [&](std::size_t l, int, int, int, double d2) {
      if (d2 < R2 && cnt.coverage[l] < 2) redundant = false;
    });
    if (!redundant) continue;
    keep[i] = false;
    --n;
    accumulate(cnt, cube, cover.centers[i], R, -1);
  }
  std::vector<Vec3> kept;
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (keep[i]) kept.push_back(cover.centers[i]);
  cover.centers = std::move(kept);

  if (!certify(cover, grid).passed) {
    Cover fb = generate(R0, R, grid, CoverOptions{opt.macro_center, opt.k1, opt.k2, CoverStrategy::lattice, seed});
    fb.bias = bias;
    fb.fallback = true;
    return fb;
  }
  return cover;
}

}  // namespace

std::vector<Cover> adversarial_family(const ScalarField& density, double macro_radius, double scale,
                                      const FamilyOptions& options) {
  if (options.count == 0) throw ValidationError("adversarial_family: count must be positive");
  density.require_finite();
  std::vector<Cover> family;
  for (std::size_t m = 0; m < options.count; ++m) {
    const std::uint64_t seed = mix_seed(options.seed, m);
    switch (m % 3) {
      case 0: family.push_back(biased_cover(density, macro_radius, scale, options, CoverBias::positive, seed)); break;
      case 1: family.push_back(biased_cover(density, macro_radius, scale, options, CoverBias::negative, seed)); break;
      default:
        family.push_back(generate(macro_radius, scale, density.grid(),
                                  CoverOptions{options.macro_center, options.k1, options.k2, CoverStrategy::jittered, seed}));
    }
  }
  return family;
}

void to_json(nlohmann::json& j, const Cover& c) {
  nlohmann::json centers = nlohmann::json::array();
  for (const Vec3& x : c.centers) centers.push_back({x[0], x[1], x[2]});
  j = nlohmann::json{{"macro_center", {c.macro_center[0], c.macro_center[1], c.macro_center[2]}},
                     {"macro_radius", c.macro_radius},
                     {"scale", c.scale},
                     {"k1", c.k1},
                     {"k2", c.k2},
                     {"strategy", to_string(c.strategy)},
                     {"bias", to_string(c.bias)},
                     {"seed", c.seed},
                     {"fallback", c.fallback},
                     {"centers", centers}};
}

void from_json(const nlohmann::json& j, Cover& c) {
  try {
    const auto mc = j.at("macro_center");
    c.macro_center = {mc.at(0).get<double>(), mc.at(1).get<double>(), mc.at(2).get<double>()};
    c.macro_radius = j.at("macro_radius").get<double>();
    c.scale = j.at("scale").get<double>();
    c.k1 = j.at("k1").get<int>();
    c.k2 = j.at("k2").get<int>();
    const std::string s = j.value("strategy", "lattice");
    if (s != "lattice" && s != "jittered") throw ValidationError("cover JSON: unknown strategy '" + s + "'");
    c.strategy = s == "lattice" ? CoverStrategy::lattice : CoverStrategy::jittered;
    const std::string b = j.value("bias", "none");
    c.bias = b == "positive" ? CoverBias::positive : b == "negative" ? CoverBias::negative : CoverBias::none;
    c.seed = j.value("seed", std::uint64_t{0});
    c.fallback = j.value("fallback", false);
    c.centers.clear();
    for (const auto& x : j.at("centers")) c.centers.push_back({x.at(0).get<double>(), x.at(1).get<double>(), x.at(2).get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("cover JSON: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const CertReport& r) {
  j = nlohmann::json{{"count", r.count},
                     {"nodes_checked", r.nodes_checked},
                     {"uncovered_nodes", r.uncovered_nodes},
                     {"max_multiplicity", r.max_multiplicity},
                     {"count_lower", r.count_lower},
                     {"count_upper", r.count_upper},
                     {"coverage_ok", r.coverage_ok},
                     {"multiplicity_ok", r.multiplicity_ok},
                     {"count_ok", r.count_ok},
                     {"passed", r.passed},
                     {"failures", r.failures}};
}

}  // namespace vscope

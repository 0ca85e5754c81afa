#include "vscope/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "vscope/spectral.hpp"

namespace vscope {

std::string to_string(DensityKind k) {
  switch (k) {
    case DensityKind::vorticity_squared: return "vorticity_squared";
    case DensityKind::enstrophy: return "enstrophy";
    case DensityKind::palinstrophy: return "palinstrophy";
    case DensityKind::strain_stretching: return "strain_stretching";
    case DensityKind::stretching: return "stretching";
    case DensityKind::kinetic: return "kinetic";
  }
  return "unknown";
}

DensityKind density_kind(const std::string& name) {
  for (auto k : {DensityKind::vorticity_squared, DensityKind::enstrophy, DensityKind::palinstrophy,
                 DensityKind::strain_stretching, DensityKind::stretching, DensityKind::kinetic})
    if (to_string(k) == name) return k;
  throw ValidationError("unknown density '" + name + "'");
}

ScalarField density(const VectorField& u, DensityKind kind) {
  if (kind == DensityKind::kinetic) return magnitude_squared(u);
  const VectorField w = curl(u);
  switch (kind) {
    case DensityKind::vorticity_squared: return magnitude_squared(w);
    case DensityKind::enstrophy: {
      ScalarField e = magnitude_squared(w);
      for (auto& v : e.values()) v *= 0.5;
      return e;
    }
    case DensityKind::palinstrophy: return gradient_norm_squared(w);
    case DensityKind::strain_stretching: return vst_density(strain(u), w);
    case DensityKind::stretching: return stretching_density(velocity_gradient(u), w);
    default: break;
  }
  throw ValidationError("unsupported density");
}

// ---------------------------------------------------------------- series

void DensitySeries::add(double time, std::shared_ptr<const ScalarField> field) {
  if (!times_.empty() && !(time > times_.back())) throw ValidationError("density series: times must increase");
  if (field && !fields_.empty()) {
    for (const auto& f : fields_)
      if (f) {
        require_same_grid(f->grid(), field->grid(), "density series");
        break;
      }
  }
  times_.push_back(time);
  fields_.push_back(std::move(field));
}

const Grid& DensitySeries::grid() const {
  for (const auto& f : fields_)
    if (f) return f->grid();
  throw ValidationError("density series has no fields");
}

DensitySeries DensitySeries::from_sequence(const SnapshotSequence& seq, DensityKind kind, double t,
                                           const TemporalCutoff* eta) {
  DensitySeries out;
  const double tol = 1e-9 * std::max(1.0, std::abs(t));
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const double s = seq.time(i);
    if (s > t + tol) break;
    if (eta && eta->value(s) == 0.0 && eta->derivative(s) == 0.0) {
      out.add(s, nullptr);
      continue;
    }
    out.add(s, std::make_shared<const ScalarField>(density(seq.velocity(i), kind)));
  }
  return out;
}

DensitySeries DensitySeries::constant(std::shared_ptr<const ScalarField> field, const std::vector<double>& times) {
  DensitySeries out;
  for (double s : times) out.add(s, field);
  return out;
}

// ---------------------------------------------------------------- cut-offs

SpatialCutoff macro_cutoff(const Cover& cover, double rho, double box_length) {
  return make_spatial(cover.macro_center, cover.macro_radius, rho, box_length);
}

SpatialCutoff macro_cutoff(const MacroDomain& domain, double rho, double box_length) {
  return make_spatial(domain.center, domain.radius, rho, box_length);
}

std::vector<SpatialCutoff> element_cutoffs(const Cover& cover, const SpatialCutoff& psi0) {
  std::vector<SpatialCutoff> out;
  out.reserve(cover.size());
  for (std::size_t i = 0; i < cover.size(); ++i)
    out.push_back(boundary_adjust(make_spatial(cover.absolute_center(i), cover.scale, psi0.rho(), psi0.box_length()), psi0));
  return out;
}

namespace {

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

// Trapezoid weights for the entries with time <= t; the last used entry must sit at t.
std::vector<double> trapezoid_weights(const std::vector<double>& times, double t) {
  if (times.empty()) throw ValidationError("empty trajectory");
  if (!(t > 0.0)) throw ValidationError("averaging time must be positive");
  std::size_t k = 0;
  while (k < times.size() && times[k] <= t + 1e-9 * std::max(1.0, t)) ++k;
  if (k < 2 || !same_time(times[k - 1], t)) {
    std::ostringstream os;
    os << "no snapshot at averaging time t = " << t;
    throw ValidationError(os.str());
  }
  std::vector<double> w(k, 0.0);
  for (std::size_t i = 0; i + 1 < k; ++i) {
    const double d = 0.5 * (times[i + 1] - times[i]);
    w[i] += d;
    w[i + 1] += d;
  }
  return w;
}

// The bridge of eta must be resolved by the snapshots.
void preflight(const std::vector<double>& times, const TemporalCutoff& eta, double t) {
  if (eta.is_constant()) return;
  const double T = eta.horizon();
  const double end = std::min(t, 2.0 * T / 3.0);
  if (end <= T / 3.0) return;
  std::size_t inside = 0;
  for (double s : times)
    if (s > T / 3.0 && s < end) ++inside;
  const std::size_t needed = static_cast<std::size_t>(std::ceil(8.0 * (end - T / 3.0) / (T / 3.0)));
  if (inside < needed) {
    std::ostringstream os;
    os << "snapshots too sparse to resolve the temporal cut-off: " << inside << " inside (T/3, 2T/3), need "
       << needed;
    throw ValidationError(os.str());
  }
}

std::vector<double> times_of(const DensitySeries& f) {
  std::vector<double> t(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) t[i] = f.time(i);
  return t;
}

double spatial_sum(const SampledCutoff& s, const std::vector<double>& weights, const ScalarField& f) {
  double acc = 0.0;
  for (std::size_t k = 0; k < s.nodes.size(); ++k) acc += weights[k] * f[s.nodes[k]];
  return acc;
}

double average_with(const DensitySeries& f, const std::vector<double>& w, const SpatialCutoff& psi,
                    const TemporalCutoff& eta, double delta, double t) {
  const Grid& grid = f.grid();
  const SampledCutoff s = sample(psi, grid, false);
  std::vector<double> pw(s.value);
  if (delta != 1.0)
    for (auto& v : pw) v = std::pow(v, delta);
  const double norm_factor = grid.cell_volume() / std::pow(psi.radius(), 3);
  double total = 0.0;
  const ScalarField* last = nullptr;
  double last_sum = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double e = eta.value(f.time(k));
    if (e == 0.0 || !f.field(k)) continue;
    const ScalarField* fk = f.field(k).get();
    if (fk != last) {
      last_sum = spatial_sum(s, pw, *fk);
      last = fk;
    }
    total += w[k] * (delta == 1.0 ? e : std::pow(e, delta)) * last_sum;
  }
  return total * norm_factor / t;
}

}  // namespace

double local_average(const DensitySeries& f, const SpatialCutoff& psi, const TemporalCutoff& eta, double delta_exp,
                     double t) {
  if (!(delta_exp > 0.0 && delta_exp <= 1.0)) throw ValidationError("delta_exp must lie in (0, 1]");
  const auto times = times_of(f);
  const auto w = trapezoid_weights(times, t);
  preflight(times, eta, t);
  return average_with(f, w, psi, eta, delta_exp, t);
}

namespace {

EnsembleReport ensemble_impl(const DensitySeries& f, const Cover& cover, const EnsembleSettings& s, double delta,
                             double t) {
  if (!(delta > 0.0 && delta <= 1.0)) throw ValidationError("delta_exp must lie in (0, 1]");
  if (cover.size() == 0) throw ValidationError("ensemble average over an empty cover");
  const auto times = times_of(f);
  const auto w = trapezoid_weights(times, t);
  const TemporalCutoff eta = s.temporal();
  preflight(times, eta, t);
  const SpatialCutoff psi0 = macro_cutoff(cover, s.rho_spatial, f.grid().length());
  const auto elements = element_cutoffs(cover, psi0);
  EnsembleReport rep;
  rep.scale = cover.scale;
  rep.time = t;
  rep.bias = cover.bias;
  rep.fallback = cover.fallback;
  rep.values.assign(elements.size(), 0.0);
  const long n = static_cast<long>(elements.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) rep.values[i] = average_with(f, w, elements[i], eta, delta, t);
  double sum = 0.0;
  for (double v : rep.values) sum += v;
  rep.mean = sum / static_cast<double>(rep.values.size());
  return rep;
}

}  // namespace

EnsembleReport ensemble_average(const DensitySeries& f, const Cover& cover, const EnsembleSettings& s, double t) {
  return ensemble_impl(f, cover, s, s.delta_exp, t);
}

double macro_average(const DensitySeries& f, const Cover& cover, const EnsembleSettings& s, double t) {
  const SpatialCutoff psi0 = macro_cutoff(cover, s.rho_spatial, f.grid().length());
  return local_average(f, psi0, s.temporal(), s.delta_exp, t);
}

double vst_local(const SnapshotSequence& seq, const SpatialCutoff& psi, const TemporalCutoff& eta, double t) {
  const DensitySeries f = DensitySeries::from_sequence(seq, DensityKind::stretching, t, &eta);
  return local_average(f, psi, eta, 1.0, t);
}

EnsembleReport vst_ensemble(const DensitySeries& stretching, const Cover& cover, const EnsembleSettings& s, double t) {
  return ensemble_impl(stretching, cover, s, 1.0, t);
}

EnsembleReport vst_ensemble(const SnapshotSequence& seq, const Cover& cover, const EnsembleSettings& s, double t) {
  const TemporalCutoff eta = s.temporal();
  const DensitySeries f = DensitySeries::from_sequence(seq, DensityKind::stretching, t, &eta);
  return vst_ensemble(f, cover, s, t);
}

FamilyReport family_average(const DensitySeries& f, const std::vector<Cover>& family, const EnsembleSettings& s,
                            double t) {
  if (family.empty()) throw ValidationError("empty cover family");
  FamilyReport rep;
  rep.min_mean = std::numeric_limits<double>::infinity();
  rep.max_mean = -std::numeric_limits<double>::infinity();
  for (const Cover& c : family) {
    rep.members.push_back(ensemble_average(f, c, s, t));
    rep.min_mean = std::min(rep.min_mean, rep.members.back().mean);
    rep.max_mean = std::max(rep.max_mean, rep.members.back().mean);
  }
  rep.both_signs = rep.min_mean < 0.0 && rep.max_mean > 0.0;
  return rep;
}

ComparabilityReport comparability(const DensitySeries& f, const std::vector<Cover>& covers, const EnsembleSettings& s,
                                  double t) {
  if (covers.empty()) throw ValidationError("comparability needs at least one cover");
  ComparabilityReport rep;
  rep.f0 = macro_average(f, covers.front(), s, t);
  if (!(rep.f0 > 0.0)) throw ValidationError("comparability: macro average F0 is not positive");
  rep.all_positive = true;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const Cover& c : covers) {
    const double r = ensemble_average(f, c, s, t).mean / rep.f0;
    rep.ratios.push_back(r);
    rep.all_positive = rep.all_positive && r > 0.0;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  rep.k_star = lo > 0.0 ? std::max(hi, 1.0 / lo) : std::numeric_limits<double>::infinity();
  return rep;
}

// ---------------------------------------------------------------- macro

MacroStats macro_stats(const SnapshotSequence& seq, double t, const SpatialCutoff& psi0, const TemporalCutoff& eta,
                       const MacroOptions& options) {
  const Grid& grid = seq.grid();
  std::vector<double> times;
  for (std::size_t i = 0; i < seq.size(); ++i) times.push_back(seq.time(i));
  const auto w = trapezoid_weights(times, t);
  if (options.localized) preflight(times, eta, t);
  const double nu = seq.viscosity();
  const double R0 = psi0.radius();
  const double vol = grid.cell_volume() / std::pow(R0, 3);

  // psi0 on the whole grid, and the sharp ball B(0, 2R0) for M0.
  std::vector<double> phi(grid.size(), 1.0);
  std::vector<char> ball(grid.size(), 1);
  if (options.localized) {
    const SampledCutoff s = sample(psi0, grid, false);
    std::fill(phi.begin(), phi.end(), 0.0);
    for (std::size_t k = 0; k < s.nodes.size(); ++k) phi[s.nodes[k]] = s.value[k];
    for (std::size_t i = 0; i < grid.size(); ++i)
      ball[i] = norm(grid.displacement(grid.node(i), psi0.center())) < 2.0 * R0;
  }

  MacroStats m;
  double e_int = 0.0, p_int = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const VectorField u = seq.velocity(k);
    double energy = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (ball[i]) {
        const Vec3 v = u.at(i);
        energy += dot(v, v);
      }
    m.m0 = std::max(m.m0, energy * grid.cell_volume());

    const double e = options.localized ? eta.value(times[k]) : 1.0;
    const bool last = k + 1 == w.size();
    if (e == 0.0 && !(last && options.final_term)) continue;
    const VectorField omega = curl(u);
    const ScalarField w2 = magnitude_squared(omega);
    const ScalarField g2 = gradient_norm_squared(omega);
    double es = 0.0, ps = 0.0, fs = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (phi[i] == 0.0) continue;
      es += 0.5 * w2[i] * std::sqrt(phi[i]);
      ps += g2[i] * phi[i];
      fs += 0.5 * w2[i] * phi[i];
    }
    e_int += w[k] * std::sqrt(e) * es;
    p_int += w[k] * e * ps;
    if (last && options.final_term) m.p0 += fs * vol / t;
  }
  m.e0 = e_int * vol / t;
  m.p0 += nu * p_int * vol / t;
  if (m.p0 > 0.0) m.sigma = std::sqrt(nu * m.e0 / m.p0);
  return m;
}

// ---------------------------------------------------------------- budget

int budget_oversampling(const Grid& grid) { return grid.n() <= 128 ? 2 : 1; }

namespace {

Grid quadrature_grid(const Grid& grid, int oversample) {
  if (oversample < 0) throw ValidationError("budget: oversampling factor must be >= 1");
  const int f = oversample == 0 ? budget_oversampling(grid) : oversample;
  return Grid(grid.n() * f, grid.length());
}

}  // namespace

BudgetAccumulator::BudgetAccumulator(const Grid& grid, std::vector<SpatialCutoff> elements, TemporalCutoff eta,
                                     double viscosity, double t, int oversample)
    : grid_(grid), quad_(quadrature_grid(grid, oversample)), eta_(std::move(eta)), viscosity_(viscosity), t_(t) {
  if (!(t > 0.0)) throw ValidationError("budget: time must be positive");
  if (elements.empty()) throw ValidationError("budget: no elements");
  for (const auto& e : elements) elements_.push_back(sample(e, quad_, true));
  prev_.assign(elements_.size(), {});
  sum_.assign(elements_.size(), {});
  final_.assign(elements_.size(), 0.0);
}

void BudgetAccumulator::add(double time, const VectorField& u) {
  require_same_grid(u.grid(), grid_, "budget");
  if (time > t_ && !same_time(time, t_)) return;
  if (count_ > 0 && !(time > prev_time_)) throw ValidationError("budget: snapshots must arrive in time order");
  const double e = eta_.value(time), de = eta_.derivative(time);
  const bool at_end = same_time(time, t_);
  std::vector<Terms> cur(elements_.size());
  if (e != 0.0 || de != 0.0) {
    const VectorField uq = spectral_resample(u, quad_.n());
    const VectorField omega = curl(uq);
    const ScalarField stretch = stretching_density(velocity_gradient(uq), omega);
    const ScalarField pal = gradient_norm_squared(omega);
    const ScalarField w2 = magnitude_squared(omega);
    const double h3 = quad_.cell_volume();
    const long n = static_cast<long>(elements_.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
      const SampledCutoff& s = elements_[i];
      Terms tm;
      double fin = 0.0;
      for (std::size_t k = 0; k < s.nodes.size(); ++k) {
        const std::size_t idx = s.nodes[k];
        const double psi = s.value[k];
        const double half_w2 = 0.5 * w2[idx];
        tm.vst += stretch[idx] * psi;
        tm.palinstrophy += pal[idx] * psi;
        tm.cutoff += half_w2 * (psi * de + viscosity_ * e * s.laplacian[k]);
        tm.transport += half_w2 * dot(uq.at(idx), s.gradient[k]);
        fin += half_w2 * psi;
      }
      cur[i] = Terms{tm.vst * e * h3, viscosity_ * tm.palinstrophy * e * h3, tm.cutoff * h3, tm.transport * e * h3};
      if (at_end) final_[i] = fin * e * h3;
    }
  }
  if (count_ > 0) {
    const double half = 0.5 * (time - prev_time_);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      sum_[i].vst += half * (prev_[i].vst + cur[i].vst);
      sum_[i].palinstrophy += half * (prev_[i].palinstrophy + cur[i].palinstrophy);
      sum_[i].cutoff += half * (prev_[i].cutoff + cur[i].cutoff);
      sum_[i].transport += half * (prev_[i].transport + cur[i].transport);
    }
  }
  prev_ = std::move(cur);
  prev_time_ = time;
  ++count_;
  if (at_end) reached_end_ = true;
}

std::vector<LocalBudget> BudgetAccumulator::finish() const {
  if (!reached_end_) {
    std::ostringstream os;
    os << "budget: no snapshot at t = " << t_;
    throw ValidationError(os.str());
  }
  std::vector<LocalBudget> out(elements_.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    LocalBudget& b = out[i];
    b.vst = sum_[i].vst;
    b.final_enstrophy = final_[i];
    b.palinstrophy = sum_[i].palinstrophy;
    b.cutoff = sum_[i].cutoff;
    b.transport = sum_[i].transport;
    b.residual = b.vst - (b.final_enstrophy + b.palinstrophy - b.cutoff - b.transport);
    const double scale = std::max({std::abs(b.vst), std::abs(b.final_enstrophy), std::abs(b.palinstrophy),
                                   std::abs(b.cutoff), std::abs(b.transport)});
    b.relative_residual = scale > 0.0 ? std::abs(b.residual) / scale : 0.0;
  }
  return out;
}

std::vector<LocalBudget> budget_check(const SnapshotSequence& seq, const std::vector<SpatialCutoff>& elements,
                                      const TemporalCutoff& eta, double t, int oversample) {
  std::vector<double> times;
  for (std::size_t i = 0; i < seq.size(); ++i) times.push_back(seq.time(i));
  trapezoid_weights(times, t);
  preflight(times, eta, t);
  BudgetAccumulator acc(seq.grid(), elements, eta, seq.viscosity(), t, oversample);
  for (std::size_t i = 0; i < seq.size() && seq.time(i) <= t + 1e-9 * std::max(1.0, t); ++i)
    acc.add(seq.time(i), seq.velocity(i));
  return acc.finish();
}

// ---------------------------------------------------------------- theorem

TheoremReport theorem_check(const SnapshotSequence& seq, double t, const MacroDomain& domain,
                            const TheoremOptions& options) {
  const EnsembleSettings& s = options.settings;
  const double T = s.horizon;
  if (!(t > 2.0 * T / 3.0 && t <= T * (1.0 + 1e-12))) {
    std::ostringstream os;
    os << "theorem_check: t = " << t << " outside (2T/3, T] for T = " << T;
    throw ValidationError(os.str());
  }
  if (domain.radius > std::sqrt(T) * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "theorem_check: macro radius " << domain.radius << " exceeds sqrt(T) = " << std::sqrt(T);
    throw ValidationError(os.str());
  }
  if (options.family_size == 0) throw ValidationError("theorem_check: family size must be positive");
  if (!(options.c_report > 0.0)) throw ValidationError("theorem_check: reporting constant must be positive");

  const Grid& grid = seq.grid();
  const SpatialCutoff psi0 = macro_cutoff(domain, s.rho_spatial, grid.length());
  const TemporalCutoff eta = s.temporal();
  TheoremReport rep;
  rep.macro_radius = domain.radius;
  rep.macro = macro_stats(seq, t, psi0, eta);
  if (!rep.macro.sigma) {
    rep.reason = "sigma undefined (P0 = 0)";
    return rep;
  }
  rep.lower = options.c_report * std::max(std::sqrt(rep.macro.m0), 1.0) * std::sqrt(*rep.macro.sigma);
  if (rep.lower >= domain.radius) {
    std::ostringstream os;
    os << "scale condition violated: lower bound " << rep.lower << " >= R0 = " << domain.radius;
    rep.reason = os.str();
    return rep;
  }

  const DensitySeries stretching = DensitySeries::from_sequence(seq, DensityKind::stretching, t, &eta);
  rep.min_ratio = std::numeric_limits<double>::infinity();
  rep.max_ratio = -std::numeric_limits<double>::infinity();
  rep.all_positive = true;
  for (std::size_t si = 0; si < options.scales.size(); ++si) {
    const double R = options.scales[si];
    if (R < rep.lower || R > domain.radius * (1.0 + 1e-12) || R < minimum_scale(grid) * (1.0 - 1e-12)) {
      rep.skipped_scales.push_back(R);
      continue;
    }
    ScaleResult sr;
    sr.scale = R;
    for (std::size_t m = 0; m < options.family_size; ++m) {
      const std::uint64_t seed = options.seed * 1000003ull + si * 1009ull + m;
      const Cover cover = generate(domain.radius, R, grid,
                                   CoverOptions{domain.center, options.k1, options.k2, CoverStrategy::jittered, seed});
      EnsembleReport er = vst_ensemble(stretching, cover, s, t);
      const double ratio = er.mean / rep.macro.p0;
      er.ratio_to_p0 = ratio;
      sr.ratios.push_back(ratio);
      sr.members.push_back(std::move(er));
      rep.min_ratio = std::min(rep.min_ratio, ratio);
      rep.max_ratio = std::max(rep.max_ratio, ratio);
      rep.all_positive = rep.all_positive && ratio > 0.0;
    }
    rep.scales.push_back(std::move(sr));
  }
  if (rep.scales.empty()) {
    rep.reason = "no requested scale lies in the admissible range";
    rep.all_positive = false;
    return rep;
  }
  rep.applicable = true;
  rep.c_emp = rep.min_ratio > 0.0 ? std::max(rep.max_ratio, 1.0 / rep.min_ratio) : std::numeric_limits<double>::infinity();
  return rep;
}

// ---------------------------------------------------------------- output

void to_json(nlohmann::json& j, const EnsembleReport& r) {
  j = nlohmann::json{{"scale", r.scale}, {"time", r.time},          {"mean", r.mean},
                     {"values", r.values}, {"bias", to_string(r.bias)}, {"fallback", r.fallback}};
  if (r.ratio_to_p0) j["ratio_to_p0"] = *r.ratio_to_p0;
}

void to_json(nlohmann::json& j, const MacroStats& m) {
  j = nlohmann::json{{"E0", m.e0}, {"P0", m.p0}, {"M0", m.m0}};
  j["sigma"] = m.sigma ? nlohmann::json(*m.sigma) : nlohmann::json(nullptr);
}

void to_json(nlohmann::json& j, const LocalBudget& b) {
  j = nlohmann::json{{"vst", b.vst},
                     {"final_enstrophy", b.final_enstrophy},
                     {"palinstrophy", b.palinstrophy},
                     {"cutoff", b.cutoff},
                     {"transport", b.transport},
                     {"residual", b.residual},
                     {"relative_residual", b.relative_residual}};
}

void to_json(nlohmann::json& j, const TheoremReport& r) {
  j = nlohmann::json{{"macro", r.macro},
                     {"lower", r.lower},
                     {"macro_radius", r.macro_radius},
                     {"applicable", r.applicable},
                     {"reason", r.reason},
                     {"skipped_scales", r.skipped_scales}};
  nlohmann::json scales = nlohmann::json::array();
  for (const auto& s : r.scales) scales.push_back({{"scale", s.scale}, {"ratios", s.ratios}});
  j["scales"] = scales;
  if (r.applicable) {
    j["min_ratio"] = r.min_ratio;
    j["max_ratio"] = r.max_ratio;
    j["c_emp"] = std::isfinite(r.c_emp) ? nlohmann::json(r.c_emp) : nlohmann::json(nullptr);
    j["all_positive"] = r.all_positive;
  }
}

void write_csv(const std::filesystem::path& path, const std::vector<EnsembleReport>& reports) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.precision(17);
  out << "scale,cover,element,time,value\n";
  for (std::size_t c = 0; c < reports.size(); ++c)
    for (std::size_t e = 0; e < reports[c].values.size(); ++e)
      out << reports[c].scale << ',' << c << ',' << e << ',' << reports[c].time << ',' << reports[c].values[e] << '\n';
}

}  // namespace vscope

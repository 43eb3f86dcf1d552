#include "stochmed/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "stochmed/error.hpp"
#include "stochmed/inference.hpp"
#include "stochmed/interventions.hpp"
#include "stochmed/kernels.hpp"

namespace stochmed::sim {

namespace {

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kCovariateP[3] = {0.50, 0.65, 0.35};

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::vector<double> concat(std::span<const double> a, double x, std::span<const double> b = {}) {
  std::vector<double> out(a.begin(), a.end());
  out.push_back(x);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

double lookup(const std::map<std::vector<double>, double>& table, const std::vector<double>& key) {
  const auto it = table.find(key);
  return it == table.end() ? 0.0 : it->second;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::string to_string(DgpVariant v) { return v == DgpVariant::Standard ? "standard" : "null-direct"; }

double covariate_mass(std::span<const double> w) {
  double p = 1.0;
  for (std::size_t j = 0; j < 3; ++j) p *= w[j] == 1.0 ? kCovariateP[j] : 1.0 - kCovariateP[j];
  return p;
}

double propensity(std::span<const double> w) { return 0.25 * (w[0] + w[1] + w[2]) + 0.1; }

double mediator_probability(std::size_t j, double a, std::span<const double> w) {
  switch (j) {
    case 0: return 1.0 - expit((a + w[0]) / (a + w[0] + 0.5));
    case 1: return expit(((a - 1.0) + w[1]) / (w[2] + 3.0));
    case 2: return expit(((a - 1.0) + 2.0 * w[0] - 1.0) / (2.0 * w[0] + 0.5));
    default: break;
  }
  fail(ErrorCode::DomainError, "the design has three mediators");
}

double outcome_mean(double a, std::span<const double> z, std::span<const double> w, DgpVariant v) {
  const double sw = w[0] + w[1] + w[2];
  return z[0] + z[1] - z[2] + (v == DgpVariant::Standard ? a : 0.0) - 0.1 * sw * sw;
}

ObservedDataset generate(std::size_t n, std::uint64_t seed, DgpVariant v) {
  require(n >= 1, ErrorCode::EmptyDataset, "n must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, kNoiseSd);
  const auto rows = static_cast<Eigen::Index>(n);
  RowMatrix w(rows, 3), z(rows, 3);
  Eigen::VectorXd a(rows), y(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    double wi[3];
    for (int j = 0; j < 3; ++j) wi[j] = unif(rng) < kCovariateP[j] ? 1.0 : 0.0;
    const double ai = unif(rng) < propensity(wi) ? 1.0 : 0.0;
    double zi[3];
    for (std::size_t j = 0; j < 3; ++j) zi[j] = unif(rng) < mediator_probability(j, ai, wi) ? 1.0 : 0.0;
    for (int j = 0; j < 3; ++j) {
      w(i, j) = wi[j];
      z(i, j) = zi[j];
    }
    a[i] = ai;
    y[i] = outcome_mean(ai, zi, wi, v) + noise(rng);
  }
  ObservedDataset data(std::move(w), std::move(a), std::move(z), std::move(y), ExposureKind::Binary);
  data.covariate_names = {"W1", "W2", "W3"};
  data.mediator_names = {"Z1", "Z2", "Z3"};
  return data;
}

// ---------------------------------------------------------------------------

FiniteLaw::FiniteLaw(std::vector<Atom> atoms, std::vector<double> exposure_levels) : atoms_(std::move(atoms)) {
  require(!atoms_.empty(), ErrorCode::EmptyDataset, "finite law has no atoms");
  std::sort(exposure_levels.begin(), exposure_levels.end());
  exposure_levels.erase(std::unique(exposure_levels.begin(), exposure_levels.end()), exposure_levels.end());
  support_ = exposure_levels == std::vector<double>{0.0, 1.0} ? ExposureSupport::binary()
                                                               : ExposureSupport::discrete_points(exposure_levels);
  double total = 0.0;
  std::map<Key, double> y_mass;
  for (const auto& at : atoms_) {
    require(at.p >= 0.0, ErrorCode::DomainError, "atom probabilities must be >= 0");
    total += at.p;
    p_w_[at.w] += at.p;
    p_wa_[concat(at.w, at.a)] += at.p;
    p_wz_[concat(at.w, at.z)] += at.p;
    const auto key = concat(at.w, at.a, at.z);
    p_waz_[key] += at.p;
    y_mass[key] += at.p * at.y;
  }
  require(std::abs(total - 1.0) < 1e-9, ErrorCode::DomainError, "atom probabilities must sum to 1");
  for (const auto& [key, mass] : y_mass) {
    const double p = p_waz_[key];
    y_waz_[key] = p > 0.0 ? mass / p : 0.0;
  }
  for (const auto& [w, p] : p_w_) w_levels_.push_back(w);
  std::map<Key, int> zs;
  for (const auto& at : atoms_) zs[at.z] = 0;
  for (const auto& [z, unused] : zs) z_levels_.push_back(z);
}

FiniteLaw FiniteLaw::without_mediators() const {
  std::map<Key, std::pair<double, double>> merged;  // (w, a) -> (p, p*y)
  for (const auto& at : atoms_) {
    auto& slot = merged[concat(at.w, at.a)];
    slot.first += at.p;
    slot.second += at.p * at.y;
  }
  std::vector<Atom> out;
  for (const auto& [key, v] : merged) {
    Atom at;
    at.w.assign(key.begin(), key.end() - 1);
    at.a = key.back();
    at.p = v.first;
    at.y = v.first > 0.0 ? v.second / v.first : 0.0;
    out.push_back(std::move(at));
  }
  return FiniteLaw(std::move(out), support_.nodes);
}

double FiniteLaw::outcome_mean() const {
  double s = 0.0;
  for (const auto& at : atoms_) s += at.p * at.y;
  return s;
}

double FiniteLaw::g(double a, std::span<const double> w) const {
  const double pw = lookup(p_w_, Key(w.begin(), w.end()));
  return pw > 0.0 ? lookup(p_wa_, concat(w, a)) / pw : 0.0;
}

double FiniteLaw::e(double a, std::span<const double> w, std::span<const double> z) const {
  const double pwz = lookup(p_wz_, concat(w, z));
  return pwz > 0.0 ? lookup(p_waz_, concat(w, a, z)) / pwz : 0.0;
}

double FiniteLaw::m(double a, std::span<const double> z, std::span<const double> w) const {
  return lookup(y_waz_, concat(w, a, z));
}

double FiniteLaw::r(std::span<const double> z, std::span<const double> w) const {
  const double pw = lookup(p_w_, Key(w.begin(), w.end()));
  return pw > 0.0 ? lookup(p_wz_, concat(w, z)) / pw : 0.0;
}

double FiniteLaw::phi(const InterventionSpec& spec, double a, std::span<const double> w) const {
  double s = 0.0;
  for (const auto& z : z_levels_) {
    const double rz = r(z, w);
    if (rz == 0.0) continue;
    switch (spec.kind()) {
      case InterventionKind::IncrementalPropensity: s += rz * (m(1.0, z, w) - m(0.0, z, w)); break;
      case InterventionKind::ExponentialTilt: s += rz * m(a, z, w); break;
      case InterventionKind::ShiftPolicy: {
        const double d = interventions::apply_policy(a, spec.bounds_at(w).lower, spec.delta());
        s += rz * m(d, z, w);
        break;
      }
    }
  }
  return s;
}

NuisanceFits FiniteLaw::exact_fits(const InterventionSpec& spec) const {
  auto self = std::make_shared<const FiniteLaw>(*this);
  const std::size_t p = w_levels_.front().size();
  NuisanceFits fits;
  fits.has_mediators = has_mediators();
  fits.g = std::make_shared<FunctionDensity>([self](double a, std::span<const double> w) { return self->g(a, w); });
  if (fits.has_mediators) {
    fits.e = std::make_shared<FunctionDensity>([self, p](double a, std::span<const double> x) {
      return self->e(a, x.first(p), x.subspan(p));
    });
  } else {
    fits.e = fits.g;
  }
  const std::size_t q = z_levels_.front().size();
  fits.m = std::make_shared<FunctionRegression>([self, q](std::span<const double> x) {
    return self->m(x[0], x.subspan(1, q), x.subspan(1 + q));
  });
  if (spec.kind() == InterventionKind::IncrementalPropensity) {
    fits.phi = std::make_shared<FunctionRegression>([self, spec](std::span<const double> w) {
      return self->phi(spec, 1.0, w);
    });
  } else {
    fits.phi = std::make_shared<FunctionRegression>([self, spec](std::span<const double> x) {
      return self->phi(spec, x[0], x.subspan(1));
    });
  }
  return fits;
}

double FiniteLaw::theta(const InterventionSpec& spec) const {
  const auto g_exact = std::make_shared<FunctionDensity>(
      [this](double a, std::span<const double> w) { return g(a, w); });
  double s = 0.0;
  std::vector<double> vals(support_.size());
  for (const auto& [key, pwz] : p_wz_) {
    if (pwz == 0.0) continue;
    const std::size_t p = w_levels_.front().size();
    const std::span<const double> w(key.data(), p);
    const std::span<const double> z(key.data() + p, key.size() - p);
    const interventions::RowIntervention row(*g_exact, spec, w, support_);
    const auto gd = row.on_support();
    for (std::size_t k = 0; k < support_.size(); ++k) vals[k] = gd[k] == 0.0 ? 0.0 : m(support_.nodes[k], z, w) * gd[k];
    s += pwz * support_.integrate(vals);
  }
  return s;
}

double FiniteLaw::expected_eif(const NuisanceFits& fits, const InterventionSpec& spec,
                               const eif::EifOptions& options) const {
  double s = 0.0;
  for (const auto& at : atoms_) {
    if (at.p == 0.0) continue;
    s += at.p * eif::evaluate_row(fits, spec, support_, at.w, at.a, at.z, at.y, options).total;
  }
  return s;
}

FiniteLaw design_law(DgpVariant v) {
  std::vector<Atom> atoms;
  for (int code = 0; code < 128; ++code) {
    Atom at;
    at.w = {double(code & 1), double((code >> 1) & 1), double((code >> 2) & 1)};
    at.a = double((code >> 3) & 1);
    at.z = {double((code >> 4) & 1), double((code >> 5) & 1), double((code >> 6) & 1)};
    const double g1 = propensity(at.w);
    double p = covariate_mass(at.w) * (at.a == 1.0 ? g1 : 1.0 - g1);
    for (std::size_t j = 0; j < 3; ++j) {
      const double pz = mediator_probability(j, at.a, at.w);
      p *= at.z[j] == 1.0 ? pz : 1.0 - pz;
    }
    at.p = p;
    at.y = outcome_mean(at.a, at.z, at.w, v);
    atoms.push_back(std::move(at));
  }
  return FiniteLaw(std::move(atoms), {0.0, 1.0});
}

OracleTruth oracle_truth(const InterventionSpec& spec, DgpVariant v) {
  require(spec.kind() != InterventionKind::ShiftPolicy, ErrorCode::UnsupportedForContinuous,
          "the simulation design has a binary exposure; shift policies are not defined on it");
  const FiniteLaw law = design_law(v);
  OracleTruth t;
  t.delta = spec.delta();
  t.theta = law.theta(spec);
  t.psi = law.without_mediators().theta(spec);
  t.outcome_mean = law.outcome_mean();
  t.direct = t.theta - t.outcome_mean;
  t.total = t.psi - t.outcome_mean;
  t.indirect = t.total - t.direct;
  return t;
}

double oracle_direct_reduced(double delta_prime) {
  double s = 0.0;
  for (int code = 0; code < 8; ++code) {
    const double w[3] = {double(code & 1), double((code >> 1) & 1), double((code >> 2) & 1)};
    const double g1 = propensity(w);
    s += covariate_mass(w) * (interventions::ips_gdelta(g1, delta_prime) - g1);
  }
  return s;
}

// ---------------------------------------------------------------------------

std::string Arm::label() const {
  switch (kind) {
    case estimators::EstimatorKind::Substitution: return "Substitution";
    case estimators::EstimatorKind::Reweighted: return "Reweighted (IPW)";
    case estimators::EstimatorKind::OneStep: break;
  }
  if (misspecify.empty()) return "Efficient";
  std::string t;
  for (char c : misspecify) {
    if (!t.empty()) t += ",";
    t += c == 'P' ? std::string("Phi") : std::string(1, c);
  }
  return "Efficient (" + t + " mis.)";
}

std::vector<Arm> default_arms() {
  using K = estimators::EstimatorKind;
  return {{K::Substitution, ""}, {K::Reweighted, ""}, {K::OneStep, ""},
          {K::OneStep, "G"},     {K::OneStep, "E"},   {K::OneStep, "M"}};
}

learners::LearnerSet default_learners() {
  learners::LearnerSet set;
  set.g.kind = learners::LearnerKind::SaturatedStratified;
  set.g.pseudo_count = 1.0;
  set.e = set.g;
  set.m.kind = learners::LearnerKind::SaturatedStratified;
  set.phi.kind = learners::LearnerKind::SaturatedStratified;
  return set;
}

std::uint64_t replication_seed(std::uint64_t master, std::size_t n, std::size_t rep) {
  return mix(mix(mix(master) ^ static_cast<std::uint64_t>(n)) ^ static_cast<std::uint64_t>(rep));
}

estimators::EstimatorOptions arm_options(const Arm& arm, const SimConfig& config, std::uint64_t seed) {
  estimators::EstimatorOptions opt;
  opt.kind = arm.kind;
  opt.folds = config.folds;
  opt.seed = seed;
  opt.fit.learners = config.learners;
  opt.fit.threads = 1;
  for (char c : arm.misspecify) {
    learners::LearnerSpec* target = nullptr;
    switch (c) {
      case 'G': target = &opt.fit.learners.g; break;
      case 'E': target = &opt.fit.learners.e; break;
      case 'M': target = &opt.fit.learners.m; break;
      case 'P': target = &opt.fit.learners.phi; break;
      default: fail(ErrorCode::ParseError, std::string("unknown misspecification toggle '") + c + "'");
    }
    target->kind = learners::LearnerKind::InterceptOnly;
  }
  return opt;
}

SimResult run_table1(const SimConfig& config) {
  require(config.reps >= 1, ErrorCode::DomainError, "reps must be >= 1");
  require(!config.ns.empty() && !config.arms.empty(), ErrorCode::DomainError, "no sample sizes or arms");
  SimResult result;
  result.config = config;
  const auto spec = InterventionSpec::incremental_propensity(config.delta);
  result.truth = oracle_truth(spec, config.variant);
  const double z = inference::normal_critical(config.alpha);

  const std::size_t A = config.arms.size();
  const std::size_t N = config.ns.size();
  const std::size_t R = config.reps;
  struct Cell {
    double direct = NAN;
    double theta = NAN;
    bool covered = false;
    bool ok = false;
  };
  std::vector<Cell> cells(A * N * R);
  auto at = [&](std::size_t a, std::size_t ni, std::size_t r) -> Cell& { return cells[(a * N + ni) * R + r]; };

  std::atomic<std::size_t> next{0};
  const std::size_t tasks = N * R;
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      const std::size_t ni = t / R;
      const std::size_t r = t % R;
      const std::size_t n = config.ns[ni];
      const std::uint64_t seed = replication_seed(config.seed, n, r);
      const ObservedDataset data = generate(n, seed, config.variant);
      const double ybar = data.outcome_mean();
      const double deltas[1] = {config.delta};
      for (std::size_t a = 0; a < A; ++a) {
        Cell& c = at(a, ni, r);
        try {
          const auto opt = arm_options(config.arms[a], config, mix(seed));
          const auto path = estimators::estimate_theta_path(data, spec, deltas, opt);
          std::vector<double> s(n);
          for (std::size_t i = 0; i < n; ++i) s[i] = path.influence[0][i] - data.y(i);
          const double se = std::sqrt(kernels::variance(s) / static_cast<double>(n));
          c.theta = path.theta[0];
          c.direct = c.theta - ybar;
          c.covered = std::abs(c.direct - result.truth.direct) <= z * se;
          c.ok = std::isfinite(c.direct);
        } catch (const Error&) {
          c.ok = false;
        }
      }
    }
  };
  const unsigned workers = std::max(1u, config.threads == 0 ? std::thread::hardware_concurrency() : config.threads);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t ni = 0; ni < N; ++ni) {
      SimRow row;
      row.estimator = config.arms[a].label();
      row.toggle = config.arms[a].misspecify.empty() ? "none" : config.arms[a].misspecify;
      row.n = config.ns[ni];
      row.truth = result.truth.direct;
      std::vector<double> d, th;
      std::size_t covered = 0;
      for (std::size_t r = 0; r < R; ++r) {
        const Cell& c = at(a, ni, r);
        if (!c.ok) {
          ++row.failed;
          continue;
        }
        d.push_back(c.direct - result.truth.direct);
        th.push_back(c.theta - result.truth.theta);
        covered += c.covered ? 1 : 0;
      }
      row.reps = d.size();
      if (!d.empty()) {
        const double nn = static_cast<double>(row.n);
        row.bias = kernels::mean(d);
        row.se = std::sqrt(kernels::variance(d));
        row.mse = kernels::dot(d, d) / static_cast<double>(d.size());
        row.n_mse = nn * row.mse;
        row.coverage = static_cast<double>(covered) / static_cast<double>(d.size());
        row.theta_bias = kernels::mean(th);
        row.theta_se = std::sqrt(kernels::variance(th));
        row.theta_mse = kernels::dot(th, th) / static_cast<double>(th.size());
        row.theta_n_mse = nn * row.theta_mse;
      }
      result.rows.push_back(row);
    }
  }
  return result;
}

}  // namespace stochmed::sim

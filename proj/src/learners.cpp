#include "stochmed/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "stochmed/error.hpp"
#include "stochmed/interventions.hpp"
#include "stochmed/kernels.hpp"

namespace stochmed::learners {

std::string to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::SaturatedStratified: return "saturated";
    case LearnerKind::LogisticGLM: return "glm";
    case LearnerKind::LinearRidge: return "ridge";
    case LearnerKind::HistogramDensity: return "histogram";
    case LearnerKind::InterceptOnly: return "intercept";
  }
  return "unknown";
}

LearnerKind parse_learner_kind(const std::string& text) {
  if (text == "saturated") return LearnerKind::SaturatedStratified;
  if (text == "glm") return LearnerKind::LogisticGLM;
  if (text == "ridge") return LearnerKind::LinearRidge;
  if (text == "histogram") return LearnerKind::HistogramDensity;
  if (text == "intercept") return LearnerKind::InterceptOnly;
  fail(ErrorCode::ParseError, "unknown learner '" + text + "'");
}

namespace {

double clip_probability(double p) {
  return std::clamp(p, kProbabilityClip, 1.0 - kProbabilityClip);
}

double expit(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------

class ConstantRegression final : public Regression {
 public:
  explicit ConstantRegression(double value) : value_(value) {}
  double predict(std::span<const double>) const override { return value_; }

 private:
  double value_;
};

// Exact conditional means over the joint strata of discrete predictors.
// Unobserved strata back off to the longest observed prefix of the
// predictor columns, and finally to the training mean.
class StratifiedRegression final : public Regression {
 public:
  StratifiedRegression(const LearnerSpec& spec, const RowMatrix& x, std::span<const double> y,
                       Family family)
      : family_(family),
        pseudo_count_(family == Family::Binomial ? spec.pseudo_count : 0.0),
        shrinkage_(spec.shrinkage) {
    const auto n = static_cast<std::size_t>(x.rows());
    const auto p = static_cast<std::size_t>(x.cols());

    levels_.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
      auto& lv = levels_[j];
      for (std::size_t i = 0; i < n; ++i) lv.push_back(x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      std::sort(lv.begin(), lv.end());
      lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
      require(lv.size() <= kMaxLevelsPerColumn, ErrorCode::DomainError,
              "SaturatedStratified requires discrete predictors (column " + std::to_string(j) + " has " +
                  std::to_string(lv.size()) + " distinct values)");
    }

    // Level L holds the strata of the first L columns.
    strides_.assign(p + 1, 1);
    for (std::size_t j = 0; j < p; ++j) {
      strides_[j + 1] = strides_[j] * levels_[j].size();
      require(strides_[j + 1] <= (std::size_t{1} << 22), ErrorCode::DomainError,
              "SaturatedStratified: too many potential strata");
    }
    sums_.resize(p + 1);
    counts_.resize(p + 1);
    for (std::size_t l = 0; l <= p; ++l) {
      sums_[l].assign(strides_[l], 0.0);
      counts_[l].assign(strides_[l], 0);
    }

    std::vector<std::size_t> codes(p);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < p; ++j) codes[j] = code_of(j, x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      std::size_t key = 0;
      for (std::size_t l = 0; l <= p; ++l) {
        if (l > 0) key += codes[l - 1] * strides_[l - 1];
        sums_[l][key] += y[i];
        counts_[l][key] += 1;
      }
    }

    const auto observed = static_cast<std::size_t>(
        std::count_if(counts_[p].begin(), counts_[p].end(), [](std::size_t c) { return c > 0; }));
    require(observed <= spec.max_strata, ErrorCode::DomainError,
            "SaturatedStratified: " + std::to_string(observed) + " observed strata exceed the limit of " +
                std::to_string(spec.max_strata));
  }

  double predict(std::span<const double> x) const override {
    const std::size_t p = levels_.size();
    // Deepest level whose prefix is made of known values.
    std::size_t depth = 0;
    std::size_t keys[kMaxDepth + 1];
    keys[0] = 0;
    for (; depth < p && depth < kMaxDepth; ++depth) {
      const auto c = lookup(depth, x[depth]);
      if (c == kUnknown) break;
      keys[depth + 1] = keys[depth] + c * strides_[depth];
    }
    if (shrinkage_ > 0.0) {
      // each level shrinks toward its parent's estimate
      double est = (sums_[0][0] + pseudo_count_) / (static_cast<double>(counts_[0][0]) + 2.0 * pseudo_count_);
      for (std::size_t l = 1; l <= depth; ++l) {
        const std::size_t count = counts_[l][keys[l]];
        est = (sums_[l][keys[l]] + shrinkage_ * est) / (static_cast<double>(count) + shrinkage_);
      }
      return family_ == Family::Binomial ? clip_probability(est) : est;
    }
    for (std::size_t l = depth + 1; l-- > 0;) {
      const std::size_t count = counts_[l][keys[l]];
      if (count == 0) continue;
      const double value =
          (sums_[l][keys[l]] + pseudo_count_) / (static_cast<double>(count) + 2.0 * pseudo_count_);
      return family_ == Family::Binomial ? clip_probability(value) : value;
    }
    return 0.0;  // unreachable: level 0 holds every training row
  }

 private:
  static constexpr std::size_t kMaxDepth = 64;
  static constexpr std::size_t kUnknown = static_cast<std::size_t>(-1);

  std::size_t code_of(std::size_t j, double v) const { return lookup(j, v); }

  std::size_t lookup(std::size_t j, double v) const {
    const auto& lv = levels_[j];
    const auto it = std::lower_bound(lv.begin(), lv.end(), v);
    if (it == lv.end() || *it != v) return kUnknown;
    return static_cast<std::size_t>(it - lv.begin());
  }

  Family family_;
  double pseudo_count_;
  double shrinkage_;
  std::vector<std::vector<double>> levels_;
  std::vector<std::size_t> strides_;
  std::vector<std::vector<double>> sums_;
  std::vector<std::vector<std::size_t>> counts_;
};

// ---------------------------------------------------------------------------
// Linear predictors shared by LogisticGLM and LinearRidge.

Eigen::MatrixXd expand_design(const RowMatrix& x, bool interactions) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const Eigen::Index extra = interactions ? p * (p - 1) / 2 : 0;
  Eigen::MatrixXd d(n, 1 + p + extra);
  d.col(0).setOnes();
  d.middleCols(1, p) = x;
  Eigen::Index c = 1 + p;
  if (interactions) {
    for (Eigen::Index j = 0; j < p; ++j)
      for (Eigen::Index k = j + 1; k < p; ++k) d.col(c++) = x.col(j).cwiseProduct(x.col(k));
  }
  return d;
}

double linear_predictor(const Eigen::VectorXd& beta, std::span<const double> x, bool interactions) {
  const std::size_t p = x.size();
  double eta = beta[0];
  for (std::size_t j = 0; j < p; ++j) eta += beta[static_cast<Eigen::Index>(j + 1)] * x[j];
  if (interactions) {
    Eigen::Index c = static_cast<Eigen::Index>(1 + p);
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = j + 1; k < p; ++k) eta += beta[c++] * x[j] * x[k];
  }
  return eta;
}

// Solves (A + penalty on non-intercept diagonal) b = rhs; engages a small
// ridge when the system is singular.
Eigen::VectorXd solve_penalized(Eigen::MatrixXd a, const Eigen::VectorXd& rhs, double lambda,
                                FitDiagnostics& diag) {
  for (Eigen::Index j = 1; j < a.rows(); ++j) a(j, j) += lambda;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  const double scale = std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
  const auto d = ldlt.vectorD();
  const bool singular = ldlt.info() != Eigen::Success || d.cwiseAbs().minCoeff() <= 1e-10 * scale;
  if (!singular) return ldlt.solve(rhs);

  if (!diag.ridge_fallback) {
    diag.ridge_fallback = true;
    diag.warnings.emplace_back("SingularDesign: ridge fallback engaged");
  }
  const double ridge = 1e-6 * scale;
  for (Eigen::Index j = 0; j < a.rows(); ++j) a(j, j) += ridge;
  return Eigen::LDLT<Eigen::MatrixXd>(a).solve(rhs);
}

class LinearModel final : public Regression {
 public:
  LinearModel(Eigen::VectorXd beta, bool interactions, Family family, bool logistic, FitDiagnostics diag)
      : beta_(std::move(beta)), interactions_(interactions), family_(family), logistic_(logistic) {
    diagnostics_ = std::move(diag);
  }
  double predict(std::span<const double> x) const override {
    const double eta = linear_predictor(beta_, x, interactions_);
    if (logistic_) return clip_probability(expit(eta));
    return family_ == Family::Binomial ? clip_probability(eta) : eta;
  }
  const Eigen::VectorXd& coefficients() const { return beta_; }

 private:
  Eigen::VectorXd beta_;
  bool interactions_;
  Family family_;
  bool logistic_;
};

std::shared_ptr<const Regression> fit_ridge(const LearnerSpec& spec, const RowMatrix& x,
                                            std::span<const double> y, Family family) {
  const Eigen::MatrixXd d = expand_design(x, spec.interactions);
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  FitDiagnostics diag;
  const Eigen::MatrixXd gram = d.transpose() * d;
  Eigen::VectorXd beta = solve_penalized(gram, d.transpose() * yv, spec.ridge_lambda, diag);
  return std::make_shared<LinearModel>(std::move(beta), spec.interactions, family, false, std::move(diag));
}

double binomial_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double m = std::clamp(mu[i], 1e-15, 1.0 - 1e-15);
    dev -= 2.0 * (y[i] * std::log(m) + (1.0 - y[i]) * std::log(1.0 - m));
  }
  return dev;
}

double penalized_deviance(const Eigen::MatrixXd& d, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                          double lambda) {
  const Eigen::VectorXd eta = d * beta;
  Eigen::VectorXd mu(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) mu[i] = expit(eta[i]);
  return binomial_deviance(y, mu) + lambda * beta.tail(beta.size() - 1).squaredNorm();
}

// Iteratively reweighted least squares with step-halving.
std::shared_ptr<const Regression> fit_logistic(const LearnerSpec& spec, const RowMatrix& x,
                                               std::span<const double> y, Family family) {
  const Eigen::MatrixXd d = expand_design(x, spec.interactions);
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  const Eigen::Index n = d.rows();

  FitDiagnostics diag;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d.cols());
  const double ybar = std::clamp(yv.mean(), 1e-3, 1.0 - 1e-3);
  beta[0] = std::log(ybar / (1.0 - ybar));
  double dev = penalized_deviance(d, yv, beta, spec.ridge_lambda);
  diag.converged = false;

  for (int iter = 1; iter <= spec.max_iterations; ++iter) {
    diag.iterations = iter;
    const Eigen::VectorXd eta = d * beta;
    Eigen::VectorXd w(n), z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = expit(eta[i]);
      const double var = std::max(mu * (1.0 - mu), 1e-10);
      w[i] = var;
      z[i] = eta[i] + (yv[i] - mu) / var;
    }
    const Eigen::MatrixXd gram = d.transpose() * w.asDiagonal() * d;
    const Eigen::VectorXd rhs = d.transpose() * w.cwiseProduct(z);
    Eigen::VectorXd proposal = solve_penalized(gram, rhs, spec.ridge_lambda, diag);

    double new_dev = penalized_deviance(d, yv, proposal, spec.ridge_lambda);
    for (int half = 0; half < 30 && !(new_dev <= dev) ; ++half) {
      proposal = 0.5 * (proposal + beta);
      new_dev = penalized_deviance(d, yv, proposal, spec.ridge_lambda);
    }
    beta = std::move(proposal);
    const double change = std::abs(new_dev - dev) / (std::abs(new_dev) + 0.1);
    dev = new_dev;
    if (change < spec.tolerance) {
      diag.converged = true;
      break;
    }
  }
  if (!diag.converged) diag.warnings.emplace_back("NonConvergence: IRLS hit the iteration limit");
  return std::make_shared<LinearModel>(std::move(beta), spec.interactions, family, true, std::move(diag));
}

// ---------------------------------------------------------------------------

// Histogram conditional density: bin probabilities from sequential
// binomial regressions P(bin = k | bin >= k, x).
class HistogramConditional final : public ConditionalDensity {
 public:
  HistogramConditional(const LearnerSpec& spec, const RowMatrix& x, std::span<const double> a) {
    const std::size_t bins = spec.bins;
    require(bins >= 2, ErrorCode::DomainError, "histogram density needs at least 2 bins");
    const auto [lo_it, hi_it] = std::minmax_element(a.begin(), a.end());
    lo_ = *lo_it;
    hi_ = *hi_it;
    require(hi_ > lo_, ErrorCode::DomainError, "continuous exposure has zero range");
    width_ = (hi_ - lo_) / static_cast<double>(bins);
    bins_ = bins;

    LearnerSpec hazard_spec = spec;
    if (hazard_spec.kind == LearnerKind::HistogramDensity) hazard_spec.kind = LearnerKind::LogisticGLM;

    std::vector<std::size_t> bin(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) bin[i] = bin_of(a[i]);

    for (std::size_t k = 0; k + 1 < bins; ++k) {
      std::vector<Eigen::Index> rows;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (bin[i] >= k) rows.push_back(static_cast<Eigen::Index>(i));
      if (rows.empty()) {
        hazards_.push_back(std::make_shared<ConstantRegression>(1.0));
        continue;
      }
      RowMatrix xs(static_cast<Eigen::Index>(rows.size()), x.cols());
      std::vector<double> ys(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        xs.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
        ys[r] = bin[static_cast<std::size_t>(rows[r])] == k ? 1.0 : 0.0;
      }
      auto fit = fit_regression(hazard_spec, xs, ys, Family::Binomial);
      for (const auto& w : fit->diagnostics().warnings) diagnostics_.warnings.push_back(w);
      hazards_.push_back(std::move(fit));
    }
    for (std::size_t k = 0; k <= bins; ++k) edges_.push_back(lo_ + width_ * static_cast<double>(k));
    edges_.back() = hi_;
  }

  double density(double a, std::span<const double> x) const override {
    if (a < lo_ || a > hi_) return 0.0;
    const std::size_t k = bin_of(a);
    double survive = 1.0;
    for (std::size_t j = 0; j < k; ++j) survive *= 1.0 - hazards_[j]->predict(x);
    const double h = k < hazards_.size() ? hazards_[k]->predict(x) : 1.0;
    return survive * h / width_;
  }

  void tabulate(std::span<const double> nodes, std::span<const double> x,
                std::span<double> out) const override {
    std::vector<double> mass(hazards_.size() + 1);
    double survive = 1.0;
    for (std::size_t k = 0; k < hazards_.size(); ++k) {
      const double h = hazards_[k]->predict(x);
      mass[k] = survive * h;
      survive *= 1.0 - h;
    }
    mass.back() = survive;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double a = nodes[i];
      out[i] = (a < lo_ || a > hi_) ? 0.0 : mass[bin_of(a)] / width_;
    }
  }

  std::vector<double> breakpoints() const override { return edges_; }

 private:
  std::size_t bin_of(double a) const {
    const double k = std::floor((a - lo_) / width_);
    if (k <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(k), bins_ - 1);
  }

  std::size_t bins_ = 2;
  double lo_ = 0.0;
  double hi_ = 0.0;
  double width_ = 1.0;
  std::vector<std::shared_ptr<const Regression>> hazards_;
  std::vector<double> edges_;
};

class UnstabilizedPhi final : public Regression {
 public:
  UnstabilizedPhi(std::shared_ptr<const Regression> inner, std::shared_ptr<const ConditionalDensity> g)
      : inner_(std::move(inner)), g_(std::move(g)) {}
  // x = [a, w...]
  double predict(std::span<const double> x) const override {
    return g_->density(x[0], x.subspan(1)) * inner_->predict(x);
  }

 private:
  std::shared_ptr<const Regression> inner_;
  std::shared_ptr<const ConditionalDensity> g_;
};

}  // namespace

std::shared_ptr<const Regression> fit_regression(const LearnerSpec& spec, const RowMatrix& x,
                                                 std::span<const double> y, Family family) {
  require(x.rows() >= 1 && static_cast<std::size_t>(x.rows()) == y.size(), ErrorCode::DomainError,
          "design rows and response length differ or are empty");
  if (family == Family::Binomial) {
    for (double v : y) require(v >= 0.0 && v <= 1.0, ErrorCode::DomainError, "binomial response outside [0,1]");
  }
  switch (spec.kind) {
    case LearnerKind::InterceptOnly: {
      const double mean = kernels::mean(y);
      return std::make_shared<ConstantRegression>(family == Family::Binomial ? clip_probability(mean) : mean);
    }
    case LearnerKind::SaturatedStratified:
      return std::make_shared<StratifiedRegression>(spec, x, y, family);
    case LearnerKind::LinearRidge:
      return fit_ridge(spec, x, y, family);
    case LearnerKind::LogisticGLM:
      if (family == Family::Binomial) return fit_logistic(spec, x, y, family);
      return fit_ridge(spec, x, y, family);
    case LearnerKind::HistogramDensity:
      break;
  }
  fail(ErrorCode::DomainError, "HistogramDensity is a density learner, not a regression");
}

std::shared_ptr<const ConditionalDensity> fit_exposure_mechanism(const LearnerSpec& spec,
                                                                 const RowMatrix& x,
                                                                 std::span<const double> a,
                                                                 ExposureKind kind) {
  if (kind == ExposureKind::Binary) {
    require(spec.kind != LearnerKind::HistogramDensity, ErrorCode::DomainError,
            "HistogramDensity applies to continuous exposures only");
    return std::make_shared<BinaryMass>(fit_regression(spec, x, a, Family::Binomial));
  }
  require(x.rows() >= 1 && static_cast<std::size_t>(x.rows()) == a.size(), ErrorCode::DomainError,
          "design rows and exposure length differ or are empty");
  return std::make_shared<HistogramConditional>(spec, x, a);
}

// ---------------------------------------------------------------------------

void outcome_features(double a, std::span<const double> z, std::span<const double> w,
                      std::vector<double>& out) {
  out.clear();
  out.push_back(a);
  out.insert(out.end(), z.begin(), z.end());
  out.insert(out.end(), w.begin(), w.end());
}

void exposure_features(std::span<const double> w, std::span<const double> z, std::vector<double>& out) {
  out.clear();
  out.insert(out.end(), w.begin(), w.end());
  out.insert(out.end(), z.begin(), z.end());
}

void phi_features(double a, std::span<const double> w, std::vector<double>& out) {
  out.clear();
  out.push_back(a);
  out.insert(out.end(), w.begin(), w.end());
}

RowMatrix outcome_design(const ObservedDataset& data) {
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto q = static_cast<Eigen::Index>(data.mediator_count());
  const auto p = static_cast<Eigen::Index>(data.covariate_count());
  RowMatrix x(n, 1 + q + p);
  x.col(0) = data.exposure();
  if (q > 0) x.middleCols(1, q) = data.mediators();
  if (p > 0) x.rightCols(p) = data.covariates();
  return x;
}

RowMatrix exposure_design(const ObservedDataset& data) {
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto q = static_cast<Eigen::Index>(data.mediator_count());
  const auto p = static_cast<Eigen::Index>(data.covariate_count());
  RowMatrix x(n, p + q);
  if (p > 0) x.leftCols(p) = data.covariates();
  if (q > 0) x.rightCols(q) = data.mediators();
  return x;
}

RowMatrix phi_design(const ObservedDataset& data) {
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto p = static_cast<Eigen::Index>(data.covariate_count());
  RowMatrix x(n, 1 + p);
  x.col(0) = data.exposure();
  if (p > 0) x.rightCols(p) = data.covariates();
  return x;
}

Family outcome_family(const ObservedDataset& data) {
  const auto& y = data.outcome();
  const bool binary = std::all_of(y.data(), y.data() + y.size(), [](double v) { return v == 0.0 || v == 1.0; });
  return binary ? Family::Binomial : Family::Gaussian;
}

PhiFit fit_phi(const NuisanceFits& fits, const ObservedDataset& data, const LearnerSpec& spec,
               const InterventionSpec& intervention, PhiForm form) {
  require(fits.g && fits.e && fits.m, ErrorCode::DomainError, "fit_phi needs g, e and m fitted first");
  const std::size_t n = data.n();
  std::vector<double> pseudo(n);
  std::vector<double> buf;
  PhiFit out;

  if (intervention.kind() == InterventionKind::IncrementalPropensity) {
    for (std::size_t i = 0; i < n; ++i) {
      outcome_features(1.0, data.z(i), data.w(i), buf);
      const double m1 = fits.m->predict(buf);
      buf[0] = 0.0;
      pseudo[i] = m1 - fits.m->predict(buf);
    }
    out.phi = fit_regression(spec, data.covariates(), pseudo, Family::Gaussian);
    return out;
  }

  const bool same_mechanism = !fits.has_mediators || fits.e == fits.g;
  const bool shift = intervention.kind() == InterventionKind::ShiftPolicy;
  const InterventionSpec resolved = intervention.with_default_bounds(data);
  std::vector<double> ebuf;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = data.a(i);
    const auto w = data.w(i);
    double ratio = 1.0;
    double inv_e = 1.0;
    if (!same_mechanism) {
      exposure_features(w, data.z(i), ebuf);
      const double e = std::max(fits.e->density(a, ebuf), fits.truncation_floor);
      inv_e = 1.0 / e;
      ratio = fits.g->density(a, w) * inv_e;
      if (ratio > 1.0 / fits.truncation_floor) ++out.extreme_weights;
    } else if (form == PhiForm::Unstabilized) {
      inv_e = 1.0 / std::max(fits.g->density(a, w), fits.truncation_floor);
    }
    const double target = shift ? interventions::apply_policy(a, resolved.bounds_at(w).lower, intervention.delta()) : a;
    outcome_features(target, data.z(i), w, buf);
    const double m = fits.m->predict(buf);
    pseudo[i] = (form == PhiForm::Stabilized ? ratio : inv_e) * m;
  }
  auto fit = fit_regression(spec, phi_design(data), pseudo, Family::Gaussian);
  if (form == PhiForm::Unstabilized) {
    out.phi = std::make_shared<UnstabilizedPhi>(std::move(fit), fits.g);
  } else {
    out.phi = std::move(fit);
  }
  return out;
}

}  // namespace stochmed::learners

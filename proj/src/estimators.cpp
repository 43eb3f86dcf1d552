#include "stochmed/estimators.hpp"

#include <cmath>

#include "stochmed/error.hpp"
#include "stochmed/inference.hpp"
#include "stochmed/interventions.hpp"
#include "stochmed/kernels.hpp"
#include "stochmed/learners.hpp"

namespace stochmed::estimators {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Substitution: return "sub";
    case EstimatorKind::Reweighted: return "ipw";
    case EstimatorKind::OneStep: return "onestep";
  }
  return "unknown";
}

EstimatorKind parse_estimator_kind(const std::string& text) {
  if (text == "sub") return EstimatorKind::Substitution;
  if (text == "ipw") return EstimatorKind::Reweighted;
  if (text == "onestep") return EstimatorKind::OneStep;
  fail(ErrorCode::ParseError, "unknown estimator '" + text + "'");
}

ExposureSupport support_for_fits(const ObservedDataset& data, const InterventionSpec& intervention,
                                 std::span<const NuisanceFits> fits, std::size_t points) {
  std::vector<double> breaks;
  if (data.exposure_kind() == ExposureKind::Continuous) {
    for (const auto& f : fits) {
      if (!f.g) continue;
      const auto b = f.g->breakpoints();
      breaks.insert(breaks.end(), b.begin(), b.end());
    }
  }
  return interventions::support_for(data, intervention, breaks, points);
}

double estimate_substitution(const ObservedDataset& data, const NuisanceFits& fits,
                             const InterventionSpec& intervention, const ExposureSupport& support) {
  require(fits.g && fits.m, ErrorCode::DomainError, "substitution needs g and m");
  std::vector<double> vals(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    const interventions::RowIntervention row(*fits.g, intervention, data.w(i), support);
    vals[i] = eif::eif_zw(*fits.m, row, data.z(i), data.w(i), support);
  }
  return kernels::mean(vals);
}

ReweightedResult estimate_reweighted(const ObservedDataset& data, const NuisanceFits& fits,
                                     const InterventionSpec& intervention, const ExposureSupport& support,
                                     double cap) {
  require(fits.g && fits.e, ErrorCode::DomainError, "reweighting needs g and e");
  const std::size_t n = data.n();
  std::vector<double> gd(n), e(n), zero(n, 0.0), out(n);
  const bool same = !fits.has_mediators || fits.e == fits.g;
  std::vector<double> buf;
  for (std::size_t i = 0; i < n; ++i) {
    const interventions::RowIntervention row(*fits.g, intervention, data.w(i), support);
    gd[i] = row.at(data.a(i));
    double ev;
    if (same) {
      ev = row.g_at(data.a(i));
    } else {
      learners::exposure_features(data.w(i), data.z(i), buf);
      ev = fits.e->density(data.a(i), buf);
    }
    e[i] = std::max(ev, fits.truncation_floor);
  }
  ReweightedResult r;
  r.capped = kernels::active().weighted_residual(gd.data(), e.data(), data.outcome().data(), zero.data(), cap,
                                                 out.data(), n);
  r.theta = kernels::mean(out);
  return r;
}

OneStepResult estimate_onestep(const ObservedDataset& data, const InterventionSpec& intervention,
                               const EstimatorOptions& options, const crossfit::FoldPlan& plan) {
  const auto resolved = intervention.with_default_bounds(data);
  resolved.validate_for(data);
  const auto cf = crossfit::crossfit_nuisances(data, resolved, options.fit, plan);
  const auto support = support_for_fits(data, resolved, cf.folds, options.quadrature_points);
  OneStepResult r;
  r.batch = eif::assemble_eif(data, cf.folds, cf.plan.assignment, resolved, support, options.eif);
  r.theta = r.batch.theta;
  r.sigma = std::sqrt(r.batch.sigma2);
  return r;
}

ThetaPath estimate_theta_path(const ObservedDataset& data, const InterventionSpec& intervention,
                              std::span<const double> deltas, const EstimatorOptions& options) {
  require(!deltas.empty(), ErrorCode::DomainError, "empty delta grid");
  const auto base_spec = intervention.with_default_bounds(data);
  const bool phi_per_delta = base_spec.kind() == InterventionKind::ShiftPolicy;

  std::vector<NuisanceFits> folds;
  std::vector<std::size_t> assignment;
  if (options.kind == EstimatorKind::OneStep) {
    const auto plan = crossfit::make_folds(data.n(), options.folds, options.seed);
    folds = crossfit::crossfit_base(data, options.fit, plan).folds;
    assignment = plan.assignment;
  } else {
    folds.push_back(crossfit::fit_base(data, options.fit));
  }

  auto add_phi = [&](const InterventionSpec& spec, std::vector<NuisanceFits>& target, std::size_t& extreme) {
    crossfit::CrossfitResult with;
    if (options.kind == EstimatorKind::OneStep) {
      crossfit::CrossfitResult base;
      base.plan.J = folds.size();
      base.plan.assignment = assignment;
      base.folds = folds;
      with = crossfit::crossfit_phi(base, data, spec, options.fit);
      extreme += with.extreme_weights;
      target = std::move(with.folds);
    } else {
      target = {crossfit::with_phi(folds[0], data, spec, options.fit, &extreme)};
    }
  };

  ThetaPath path;
  path.deltas.assign(deltas.begin(), deltas.end());
  std::vector<NuisanceFits> full;
  if (!phi_per_delta && !options.eif.zero_exposure_term) add_phi(base_spec, full, path.extreme_weights);
  if (options.eif.zero_exposure_term) full = folds;

  for (double d : deltas) {
    const auto spec = base_spec.with_delta(d);
    spec.validate_for(data);
    std::vector<NuisanceFits> per;
    if (phi_per_delta && !options.eif.zero_exposure_term) add_phi(spec, per, path.extreme_weights);
    const auto& use = phi_per_delta && !options.eif.zero_exposure_term ? per : full;
    const auto support = support_for_fits(data, spec, use, options.quadrature_points);
    auto batch = eif::assemble_eif(data, use, assignment, spec, support, options.eif);
    double theta = batch.theta;
    switch (options.kind) {
      case EstimatorKind::Substitution: theta = estimate_substitution(data, use[0], spec, support); break;
      case EstimatorKind::Reweighted: {
        const auto r = estimate_reweighted(data, use[0], spec, support, options.eif.weight_cap);
        theta = r.theta;
        path.capped += r.capped;
        break;
      }
      case EstimatorKind::OneStep: path.capped += batch.capped; break;
    }
    path.theta.push_back(theta);
    path.influence.push_back(std::move(batch.totals));
  }
  return path;
}

namespace {

double se_of(std::span<const double> values) {
  return std::sqrt(kernels::variance(values) / static_cast<double>(values.size()));
}

}  // namespace

Decomposition decompose_effects(const ObservedDataset& data, const InterventionSpec& intervention,
                                std::span<const double> deltas, const EstimatorOptions& options,
                                double alpha) {
  require(data.n() >= 1, ErrorCode::EmptyDataset, "dataset has no rows");
  const ThetaPath mediated = estimate_theta_path(data, intervention, deltas, options);
  const ThetaPath reduced = data.has_mediators()
                                ? estimate_theta_path(data.without_mediators(), intervention, deltas, options)
                                : mediated;
  const std::size_t n = data.n();
  const std::size_t k = deltas.size();
  const double ybar = data.outcome_mean();

  Decomposition out;
  auto& rep = out.report;
  rep.estimator = to_string(options.kind);
  rep.intervention = stochmed::to_string(intervention.kind());
  rep.exposure_kind = data.exposure_kind();
  rep.n = n;
  rep.outcome_mean = ybar;
  rep.alpha = alpha;
  rep.capped_weights = mediated.capped + (data.has_mediators() ? reduced.capped : 0);
  rep.seed = options.seed;
  if (rep.capped_weights > 0)
    rep.warnings.push_back("WeightOverflow: " + std::to_string(rep.capped_weights) + " weights capped at " +
                           std::to_string(options.eif.weight_cap));
  const std::size_t extreme = mediated.extreme_weights + (data.has_mediators() ? reduced.extreme_weights : 0);
  if (extreme > 0) rep.warnings.push_back("ExtremeWeight: " + std::to_string(extreme) + " g/e ratios exceed 1/floor");

  out.s_direct.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  std::vector<double> s(n), t(n), ind(n);
  double smin = INFINITY;
  double smax = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    EffectRow row;
    row.delta = deltas[c];
    row.theta = mediated.theta[c];
    row.psi = reduced.theta[c];
    row.direct = row.theta - ybar;
    row.total = row.psi - ybar;
    row.indirect = row.total - row.direct;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = mediated.influence[c][i] - data.y(i);
      t[i] = reduced.influence[c][i] - data.y(i);
      ind[i] = reduced.influence[c][i] - mediated.influence[c][i];
      out.s_direct(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = s[i];
    }
    row.se_direct = se_of(s);
    row.se_total = se_of(t);
    row.se_indirect = se_of(ind);
    const double sq = std::sqrt(static_cast<double>(n));
    row.ci_direct = inference::wald_ci(row.direct, row.se_direct * sq, n, alpha);
    row.ci_total = inference::wald_ci(row.total, row.se_total * sq, n, alpha);
    row.ci_indirect = inference::wald_ci(row.indirect, row.se_indirect * sq, n, alpha);
    smin = std::min(smin, row.se_direct * sq);
    smax = std::max(smax, row.se_direct * sq);
    rep.rows.push_back(row);
  }
  rep.sigma_min = smin;
  rep.sigma_max = smax;
  return out;
}

}  // namespace stochmed::estimators

#pragma once

// Regression and conditional-density learners for the nuisance functions,
// including the pseudo-outcome regression for phi.

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "stochmed/model.hpp"

namespace stochmed::learners {

enum class LearnerKind { SaturatedStratified, LogisticGLM, LinearRidge, HistogramDensity, InterceptOnly };
enum class Family { Gaussian, Binomial };

std::string to_string(LearnerKind kind);
LearnerKind parse_learner_kind(const std::string& text);

struct LearnerSpec {
  LearnerKind kind = LearnerKind::SaturatedStratified;
  // LogisticGLM / LinearRidge: penalty on non-intercept coefficients.
  double ridge_lambda = 0.0;
  // Histogram conditional densities for continuous exposures.
  std::size_t bins = 10;
  // IRLS controls.
  int max_iterations = 100;
  double tolerance = 1e-8;
  // Adds all pairwise products of the predictors to the GLM/ridge design.
  bool interactions = false;
  // SaturatedStratified, binomial family: (sum + c) / (count + 2c) per stratum.
  double pseudo_count = 0.0;
  // SaturatedStratified: if > 0, every stratum mean is shrunk toward the mean
  // of its parent stratum (the same predictors minus the last one) with this
  // many pseudo-observations.
  double shrinkage = 0.0;
  // SaturatedStratified: limit on observed joint strata.
  std::size_t max_strata = 256;
};

// Binomial predictions are clipped to [kProbabilityClip, 1 - kProbabilityClip].
inline constexpr double kProbabilityClip = 1e-6;

// Distinct values allowed per predictor column for SaturatedStratified.
inline constexpr std::size_t kMaxLevelsPerColumn = 32;

struct LearnerSet {
  LearnerSpec g;
  LearnerSpec e;
  LearnerSpec m;
  LearnerSpec phi;
};

std::shared_ptr<const Regression> fit_regression(const LearnerSpec& spec, const RowMatrix& x,
                                                 std::span<const double> y, Family family);

// g(a | x): binomial regression for binary exposures; for continuous
// exposures a histogram density whose bin probabilities come from
// sequential (hazard) binomial regressions fitted with `spec`.
std::shared_ptr<const ConditionalDensity> fit_exposure_mechanism(const LearnerSpec& spec,
                                                                 const RowMatrix& x,
                                                                 std::span<const double> a,
                                                                 ExposureKind kind);

// Stabilized: pseudo-outcome g/e * m regressed on (A, W).
// Unstabilized: m/e regressed on (A, W), multiplied back by g(a | w).
enum class PhiForm { Stabilized, Unstabilized };

struct PhiFit {
  std::shared_ptr<const Regression> phi;
  std::size_t extreme_weights = 0;  // rows whose g/e ratio exceeded 1 / floor
};

// Requires fits.g, fits.e and fits.m fitted on `data`.
PhiFit fit_phi(const NuisanceFits& fits, const ObservedDataset& data, const LearnerSpec& spec,
               const InterventionSpec& intervention, PhiForm form = PhiForm::Stabilized);

// Predictor layouts shared by fitting and evaluation.
//   m:   [a, z..., w...]
//   e:   [w..., z...]
//   phi: [a, w...], or [w...] for incremental propensity interventions
void outcome_features(double a, std::span<const double> z, std::span<const double> w,
                      std::vector<double>& out);
void exposure_features(std::span<const double> w, std::span<const double> z, std::vector<double>& out);
void phi_features(double a, std::span<const double> w, std::vector<double>& out);

RowMatrix outcome_design(const ObservedDataset& data);
RowMatrix exposure_design(const ObservedDataset& data);
RowMatrix phi_design(const ObservedDataset& data);

Family outcome_family(const ObservedDataset& data);

}  // namespace stochmed::learners

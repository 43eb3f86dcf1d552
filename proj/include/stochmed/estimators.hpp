#pragma once

// Substitution, reweighted and cross-fitted one-step estimators of theta(delta),
// and the direct / indirect / total decomposition.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "stochmed/crossfit.hpp"
#include "stochmed/eif.hpp"
#include "stochmed/model.hpp"
#include "stochmed/quadrature.hpp"

namespace stochmed::estimators {

enum class EstimatorKind { Substitution, Reweighted, OneStep };

std::string to_string(EstimatorKind kind);  // "sub", "ipw", "onestep"
EstimatorKind parse_estimator_kind(const std::string& text);

struct EstimatorOptions {
  EstimatorKind kind = EstimatorKind::OneStep;
  crossfit::FitOptions fit;
  std::size_t folds = crossfit::kDefaultFolds;
  std::uint64_t seed = 0;
  eif::EifOptions eif;
  std::size_t quadrature_points = kDefaultQuadraturePoints;
};

// Mean over rows of ∫ m(a, Z_i, W_i) g_delta(a | W_i) dκ(a).
double estimate_substitution(const ObservedDataset& data, const NuisanceFits& fits,
                             const InterventionSpec& intervention, const ExposureSupport& support);

struct ReweightedResult {
  double theta = 0.0;
  std::size_t capped = 0;
};

// Mean over rows of min(g_delta / e, cap) * Y.
ReweightedResult estimate_reweighted(const ObservedDataset& data, const NuisanceFits& fits,
                                     const InterventionSpec& intervention, const ExposureSupport& support,
                                     double cap = eif::kDefaultWeightCap);

struct OneStepResult {
  double theta = 0.0;
  double sigma = 0.0;
  eif::EifComponentsBatch batch;
};

OneStepResult estimate_onestep(const ObservedDataset& data, const InterventionSpec& intervention,
                               const EstimatorOptions& options, const crossfit::FoldPlan& plan);

// theta over a grid of deltas for one dataset, with influence values per delta.
// Nuisances are fitted once; phi is refitted per delta only for shift policies.
struct ThetaPath {
  std::vector<double> deltas;
  std::vector<double> theta;
  std::vector<std::vector<double>> influence;  // EIF totals at the fits used
  std::size_t capped = 0;
  std::size_t extreme_weights = 0;
};

ThetaPath estimate_theta_path(const ObservedDataset& data, const InterventionSpec& intervention,
                              std::span<const double> deltas, const EstimatorOptions& options);

struct Decomposition {
  EffectReport report;
  Eigen::MatrixXd s_direct;  // n x |grid|, S = D - Y for the direct effect
};

// Point estimates, influence-function SEs and Wald intervals per delta.
Decomposition decompose_effects(const ObservedDataset& data, const InterventionSpec& intervention,
                                std::span<const double> deltas, const EstimatorOptions& options,
                                double alpha = 0.05);

// Integration support covering every fold's exposure density breakpoints.
ExposureSupport support_for_fits(const ObservedDataset& data, const InterventionSpec& intervention,
                                 std::span<const NuisanceFits> fits, std::size_t points);

}  // namespace stochmed::estimators

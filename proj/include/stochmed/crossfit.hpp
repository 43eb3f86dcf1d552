#pragma once

// Fold partitioning and train-on-T_j / predict-on-V_j nuisance fitting.

#include <cstdint>
#include <memory>
#include <vector>

#include "stochmed/learners.hpp"
#include "stochmed/model.hpp"

namespace stochmed::crossfit {

inline constexpr std::size_t kDefaultFolds = 5;

struct FoldPlan {
  std::size_t J = kDefaultFolds;
  std::vector<std::size_t> assignment;  // fold index in [0, J) per observation
  std::uint64_t seed = 0;

  std::size_t n() const { return assignment.size(); }
  std::vector<std::size_t> validation(std::size_t j) const;
  std::vector<std::size_t> training(std::size_t j) const;
};

// Seeded shuffle, then round-robin: fold sizes differ by at most one.
FoldPlan make_folds(std::size_t n, std::size_t J, std::uint64_t seed);

struct FitOptions {
  learners::LearnerSet learners;
  double truncation_floor = 1e-3;
  learners::PhiForm phi_form = learners::PhiForm::Stabilized;
  // Randomized-trial mode: the exposure mechanism is known and not fitted.
  std::shared_ptr<const ConditionalDensity> known_g;
  unsigned threads = 1;
};

// g, e, m fitted on `train`. For data without mediators e is g and m is b(a, w).
NuisanceFits fit_base(const ObservedDataset& train, const FitOptions& options);

// Adds phi to a base fit (phi depends on delta only for shift policies).
NuisanceFits with_phi(const NuisanceFits& base, const ObservedDataset& train,
                      const InterventionSpec& intervention, const FitOptions& options,
                      std::size_t* extreme_weights = nullptr);

NuisanceFits fit_all(const ObservedDataset& train, const InterventionSpec& intervention,
                     const FitOptions& options);

struct CrossfitResult {
  FoldPlan plan;
  std::vector<NuisanceFits> folds;  // folds[j] trained without fold j
  std::size_t extreme_weights = 0;
};

// Per-fold base fits (no phi); evaluation at observation i uses folds[plan.assignment[i]].
CrossfitResult crossfit_base(const ObservedDataset& data, const FitOptions& options, const FoldPlan& plan);

// Fills phi into every fold of `base` for the given intervention.
CrossfitResult crossfit_phi(const CrossfitResult& base, const ObservedDataset& data,
                            const InterventionSpec& intervention, const FitOptions& options);

CrossfitResult crossfit_nuisances(const ObservedDataset& data, const InterventionSpec& intervention,
                                  const FitOptions& options, const FoldPlan& plan);

}  // namespace stochmed::crossfit

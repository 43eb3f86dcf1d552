#include "stochmed/crossfit.hpp"

#include <algorithm>
#include <exception>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "stochmed/error.hpp"

namespace stochmed::crossfit {

std::vector<std::size_t> FoldPlan::validation(std::size_t j) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == j) rows.push_back(i);
  return rows;
}

std::vector<std::size_t> FoldPlan::training(std::size_t j) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] != j) rows.push_back(i);
  return rows;
}

FoldPlan make_folds(std::size_t n, std::size_t J, std::uint64_t seed) {
  require(J >= 2, ErrorCode::DomainError, "cross-fitting needs at least 2 folds");
  require(J <= n, ErrorCode::DomainError,
          "fold count " + std::to_string(J) + " exceeds sample size " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw so the result does not depend on the
  // standard library's shuffle implementation.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t k = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[k]);
  }
  FoldPlan plan;
  plan.J = J;
  plan.seed = seed;
  plan.assignment.resize(n);
  for (std::size_t pos = 0; pos < n; ++pos) plan.assignment[order[pos]] = pos % J;
  return plan;
}

NuisanceFits fit_base(const ObservedDataset& train, const FitOptions& options) {
  NuisanceFits fits;
  fits.truncation_floor = options.truncation_floor;
  fits.has_mediators = train.has_mediators();
  const auto a = std::span<const double>(train.exposure().data(), train.n());
  const auto y = std::span<const double>(train.outcome().data(), train.n());

  fits.g = options.known_g ? options.known_g
                           : learners::fit_exposure_mechanism(options.learners.g, train.covariates(), a,
                                                              train.exposure_kind());
  if (fits.has_mediators) {
    fits.e = learners::fit_exposure_mechanism(options.learners.e, learners::exposure_design(train), a,
                                              train.exposure_kind());
  } else {
    fits.e = fits.g;
  }
  fits.m = learners::fit_regression(options.learners.m, learners::outcome_design(train), y,
                                    learners::outcome_family(train));
  return fits;
}

NuisanceFits with_phi(const NuisanceFits& base, const ObservedDataset& train,
                      const InterventionSpec& intervention, const FitOptions& options,
                      std::size_t* extreme_weights) {
  NuisanceFits fits = base;
  auto phi = learners::fit_phi(base, train, options.learners.phi, intervention, options.phi_form);
  fits.phi = std::move(phi.phi);
  if (extreme_weights) *extreme_weights += phi.extreme_weights;
  return fits;
}

NuisanceFits fit_all(const ObservedDataset& train, const InterventionSpec& intervention,
                     const FitOptions& options) {
  return with_phi(fit_base(train, options), train, intervention, options);
}

namespace {

// Runs job(j) for j in [0, J); exceptions are rethrown in fold order.
template <class Job>
void for_each_fold(std::size_t J, unsigned threads, Job job) {
  std::vector<std::exception_ptr> errors(J);
  auto guarded = [&](std::size_t j) {
    try {
      job(j);
    } catch (const Error& e) {
      errors[j] = std::make_exception_ptr(Error(e.code(), "fold " + std::to_string(j) + ": " + e.what()));
    } catch (...) {
      errors[j] = std::current_exception();
    }
  };
  const unsigned workers = std::min<unsigned>(threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads,
                                              static_cast<unsigned>(J));
  if (workers <= 1) {
    for (std::size_t j = 0; j < J; ++j) guarded(j);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t j = t; j < J; j += workers) guarded(j);
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

CrossfitResult crossfit_base(const ObservedDataset& data, const FitOptions& options, const FoldPlan& plan) {
  require(plan.n() == data.n(), ErrorCode::DomainError, "fold plan does not match the dataset size");
  CrossfitResult out;
  out.plan = plan;
  out.folds.resize(plan.J);
  for_each_fold(plan.J, options.threads, [&](std::size_t j) {
    const auto rows = plan.training(j);
    out.folds[j] = fit_base(data.subset(rows), options);
  });
  return out;
}

CrossfitResult crossfit_phi(const CrossfitResult& base, const ObservedDataset& data,
                            const InterventionSpec& intervention, const FitOptions& options) {
  CrossfitResult out;
  out.plan = base.plan;
  out.folds.resize(base.folds.size());
  std::vector<std::size_t> extreme(base.folds.size(), 0);
  for_each_fold(base.folds.size(), options.threads, [&](std::size_t j) {
    const auto rows = base.plan.training(j);
    out.folds[j] = with_phi(base.folds[j], data.subset(rows), intervention, options, &extreme[j]);
  });
  out.extreme_weights = std::accumulate(extreme.begin(), extreme.end(), std::size_t{0});
  return out;
}

CrossfitResult crossfit_nuisances(const ObservedDataset& data, const InterventionSpec& intervention,
                                  const FitOptions& options, const FoldPlan& plan) {
  return crossfit_phi(crossfit_base(data, options, plan), data, intervention, options);
}

}  // namespace stochmed::crossfit

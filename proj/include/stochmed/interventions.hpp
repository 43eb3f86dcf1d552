#pragma once

// Post-intervention exposure distributions g_delta(a | w) for the
// incremental propensity score, exponential tilt and shift-policy
// interventions.

#include <functional>
#include <span>
#include <vector>

#include "stochmed/model.hpp"
#include "stochmed/quadrature.hpp"

namespace stochmed::interventions {

// Largest |delta * a| exponentiated by the tilt before NormalizerOverflow.
inline constexpr double kTiltExponentCap = 30.0;

// delta' g / (delta' g + 1 - g), the post-intervention propensity after
// multiplying the odds of exposure by delta'.
double ips_gdelta(double g1w, double delta_prime);

struct TiltResult {
  std::vector<double> values;  // tilted density on the support nodes
  double normalizer = 1.0;     // c(w)
};

// a -> exp(delta a) g(a | w) c(w) evaluated on the support, where
// c(w) = 1 / ∫ exp(delta a) g(a | w) dκ(a).
TiltResult tilt_gdelta(std::span<const double> g_on_support, double delta,
                       const ExposureSupport& support);

// Two-piece shift policy density:
//   g(a) 1{l <= a <= l + delta} + g(a + delta) 1{l <= a <= u - delta}.
double shift_gdelta(const std::function<double(double)>& g, double lower, double upper,
                    double delta, double a);

// The policy map itself: a - delta above l + delta, unchanged otherwise.
double apply_policy(double a, double lower, double delta);

// g and g_delta for a single covariate row, tabulated on the support. On a
// discrete support the shift policy is the pushforward of g through the
// policy map. Holds references to its arguments.
class RowIntervention {
 public:
  RowIntervention(const ConditionalDensity& g, const InterventionSpec& spec,
                  std::span<const double> w, const ExposureSupport& support);

  // g_delta(a | w) at an arbitrary exposure value.
  double at(double a) const;
  double g_at(double a) const { return g_->density(a, w_); }

  std::span<const double> on_support() const { return gdelta_; }
  std::span<const double> g_on_support() const { return g_values_; }
  double normalizer() const { return normalizer_; }

 private:
  const ConditionalDensity* g_;
  const InterventionSpec* spec_;
  const ExposureSupport* support_;
  std::span<const double> w_;
  std::vector<double> g_values_;
  std::vector<double> gdelta_;
  double normalizer_ = 1.0;
  bool binary_ = false;
};

// Integration rule for a dataset: {0,1} for binary exposures, otherwise a
// trapezoid rule on [min(A) - |delta|, max(A) + |delta|] that respects the
// breakpoints of g and of the shift policy.
ExposureSupport support_for(const ObservedDataset& data, const InterventionSpec& spec,
                            std::span<const double> density_breakpoints = {},
                            std::size_t points = kDefaultQuadraturePoints);

}  // namespace stochmed::interventions

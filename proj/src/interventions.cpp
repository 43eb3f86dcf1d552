#include "stochmed/interventions.hpp"

#include <cmath>
#include <string>

#include "stochmed/error.hpp"

namespace stochmed::interventions {

double ips_gdelta(double g1w, double delta_prime) {
  require(g1w > 0.0 && g1w < 1.0, ErrorCode::DomainError, "propensity must lie in (0,1)");
  require(delta_prime > 0.0, ErrorCode::DomainError, "odds multiplier must be > 0");
  if (delta_prime == 1.0) return g1w;
  const double num = delta_prime * g1w;
  return num / (num + 1.0 - g1w);
}

TiltResult tilt_gdelta(std::span<const double> g_on_support, double delta,
                       const ExposureSupport& support) {
  require(g_on_support.size() == support.size(), ErrorCode::QuadratureError,
          "density tabulated on a different support");
  TiltResult out;
  out.values.assign(g_on_support.begin(), g_on_support.end());
  if (delta == 0.0) return out;

  for (std::size_t k = 0; k < support.size(); ++k) {
    if (g_on_support[k] <= 0.0) continue;
    const double expo = delta * support.nodes[k];
    if (std::abs(expo) > kTiltExponentCap) {
      fail(ErrorCode::NormalizerOverflow,
           "exp(delta * a) exceeds the overflow cap at a = " + std::to_string(support.nodes[k]) +
               "; rescale the exposure or reduce delta");
    }
    out.values[k] = std::exp(expo) * g_on_support[k];
  }
  const double mass = support.integrate(out.values);
  require(mass > 0.0 && std::isfinite(mass), ErrorCode::NormalizerOverflow,
          "tilted density has no finite positive mass");
  out.normalizer = 1.0 / mass;
  for (double& v : out.values) v *= out.normalizer;
  return out;
}

double shift_gdelta(const std::function<double(double)>& g, double lower, double upper,
                    double delta, double a) {
  require(lower < upper, ErrorCode::DomainError, "shift bounds must satisfy l < u");
  require(delta > 0.0 && delta < upper - lower, ErrorCode::DomainError,
          "shift magnitude must lie in (0, u - l)");
  double out = 0.0;
  if (lower <= a && a <= lower + delta) out += g(a);
  if (lower <= a && a <= upper - delta) out += g(a + delta);
  return out;
}

double apply_policy(double a, double lower, double delta) {
  return a > lower + delta ? a - delta : a;
}

namespace {

std::size_t node_index(const ExposureSupport& support, double a) {
  for (std::size_t k = 0; k < support.size(); ++k)
    if (support.nodes[k] == a) return k;
  return support.size();
}

}  // namespace

RowIntervention::RowIntervention(const ConditionalDensity& g, const InterventionSpec& spec,
                                 std::span<const double> w, const ExposureSupport& support)
    : g_(&g), spec_(&spec), support_(&support), w_(w) {
  g_values_.resize(support.size());
  g.tabulate(support.nodes, w, g_values_);
  binary_ = support.discrete && support.size() == 2 && support.nodes[0] == 0.0 && support.nodes[1] == 1.0;

  if (spec.is_identity()) {
    gdelta_ = g_values_;
    return;
  }
  switch (spec.kind()) {
    case InterventionKind::IncrementalPropensity: {
      require(binary_, ErrorCode::DomainError, "incremental propensity needs the {0,1} support");
      const double p = ips_gdelta(g_values_[1], spec.delta());
      gdelta_ = {1.0 - p, p};
      normalizer_ = 1.0 / (g_values_[0] + spec.delta() * g_values_[1]);
      break;
    }
    case InterventionKind::ExponentialTilt: {
      auto tilted = tilt_gdelta(g_values_, spec.delta(), support);
      gdelta_ = std::move(tilted.values);
      normalizer_ = tilted.normalizer;
      break;
    }
    case InterventionKind::ShiftPolicy: {
      const auto b = spec.bounds_at(w);
      gdelta_.assign(support.size(), 0.0);
      if (support.discrete) {
        // pushforward of g through the policy map
        for (std::size_t j = 0; j < support.size(); ++j) {
          const double target = apply_policy(support.nodes[j], b.lower, spec.delta());
          const std::size_t k = node_index(support, target);
          require(k < support.size(), ErrorCode::DomainError, "shifted exposure leaves the discrete support");
          gdelta_[k] += g_values_[j];
        }
        break;
      }
      auto gw = [this](double a) { return g_->density(a, w_); };
      for (std::size_t k = 0; k < support.size(); ++k) {
        gdelta_[k] = shift_gdelta(gw, b.lower, b.upper, spec.delta(), support.nodes[k]);
      }
      break;
    }
  }
}

double RowIntervention::at(double a) const {
  if (support_->discrete) {
    const std::size_t k = node_index(*support_, a);
    return k < gdelta_.size() ? gdelta_[k] : 0.0;
  }
  if (spec_->is_identity()) return g_at(a);
  switch (spec_->kind()) {
    case InterventionKind::IncrementalPropensity:
      return a == 1.0 ? gdelta_[1] : (a == 0.0 ? gdelta_[0] : 0.0);
    case InterventionKind::ExponentialTilt: {
      const double ga = g_at(a);
      return ga > 0.0 ? std::exp(spec_->delta() * a) * ga * normalizer_ : 0.0;
    }
    case InterventionKind::ShiftPolicy: {
      const auto b = spec_->bounds_at(w_);
      auto gw = [this](double v) { return g_->density(v, w_); };
      return shift_gdelta(gw, b.lower, b.upper, spec_->delta(), a);
    }
  }
  return 0.0;
}

ExposureSupport support_for(const ObservedDataset& data, const InterventionSpec& spec,
                            std::span<const double> density_breakpoints, std::size_t points) {
  if (data.exposure_kind() == ExposureKind::Binary) return ExposureSupport::binary();

  const auto& a = data.exposure();
  const double pad = std::abs(spec.delta());
  const double lo = a.minCoeff() - (spec.kind() == InterventionKind::IncrementalPropensity ? 0.0 : pad);
  const double hi = a.maxCoeff() + (spec.kind() == InterventionKind::IncrementalPropensity ? 0.0 : pad);

  std::vector<double> breaks(density_breakpoints.begin(), density_breakpoints.end());
  if (spec.kind() == InterventionKind::ShiftPolicy) {
    const auto resolved = spec.with_default_bounds(data);
    const auto b = resolved.bounds_at(data.w(0));
    const double d = spec.delta();
    for (double v : {b.lower, b.lower + d, b.upper - d, b.upper}) breaks.push_back(v);
    for (double v : density_breakpoints) breaks.push_back(v - d);
  }
  return ExposureSupport::trapezoid(lo, hi, points, breaks);
}

}  // namespace stochmed::interventions

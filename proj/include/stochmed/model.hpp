#pragma once

// Core data model shared by every other module: the observed dataset with
// its column roles, intervention specifications, fitted nuisance containers,
// and result records.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace stochmed {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ExposureKind { Binary, Continuous };

std::string to_string(ExposureKind kind);

// Raw column table as read from disk; absent cells are std::nullopt.
struct RawTable {
  std::vector<std::string> names;
  std::vector<std::vector<std::optional<double>>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  std::optional<std::size_t> index_of(const std::string& name) const;
};

struct ColumnRoles {
  std::vector<std::string> covariates;  // W
  std::string exposure;                 // A
  std::vector<std::string> mediators;   // Z
  std::string outcome;                  // Y
};

class ObservedDataset {
 public:
  ObservedDataset() = default;
  ObservedDataset(RowMatrix covariates, Eigen::VectorXd exposure, RowMatrix mediators,
                  Eigen::VectorXd outcome, ExposureKind kind);

  std::size_t n() const { return static_cast<std::size_t>(outcome_.size()); }
  std::size_t covariate_count() const { return static_cast<std::size_t>(covariates_.cols()); }
  std::size_t mediator_count() const { return static_cast<std::size_t>(mediators_.cols()); }
  bool has_mediators() const { return mediators_.cols() > 0; }
  ExposureKind exposure_kind() const { return kind_; }

  const RowMatrix& covariates() const { return covariates_; }
  const RowMatrix& mediators() const { return mediators_; }
  const Eigen::VectorXd& exposure() const { return exposure_; }
  const Eigen::VectorXd& outcome() const { return outcome_; }

  std::span<const double> w(std::size_t i) const {
    return {covariates_.data() + i * covariates_.cols(), static_cast<std::size_t>(covariates_.cols())};
  }
  std::span<const double> z(std::size_t i) const {
    return {mediators_.data() + i * mediators_.cols(), static_cast<std::size_t>(mediators_.cols())};
  }
  double a(std::size_t i) const { return exposure_[static_cast<Eigen::Index>(i)]; }
  double y(std::size_t i) const { return outcome_[static_cast<Eigen::Index>(i)]; }

  double outcome_mean() const;

  // Same units with the mediator matrix dropped (total-effect functional).
  ObservedDataset without_mediators() const;
  ObservedDataset subset(std::span<const std::size_t> rows) const;
  ObservedDataset with_outcome(Eigen::VectorXd outcome) const;

  std::vector<std::string> covariate_names;
  std::vector<std::string> mediator_names;
  std::string exposure_name = "A";
  std::string outcome_name = "Y";

 private:
  RowMatrix covariates_;
  Eigen::VectorXd exposure_;
  RowMatrix mediators_;
  Eigen::VectorXd outcome_;
  ExposureKind kind_ = ExposureKind::Binary;
};

// Binary iff every value is exactly 0 or 1.
ExposureKind infer_exposure_kind(std::span<const double> a);

ObservedDataset validate_dataset(const RawTable& raw, const ColumnRoles& roles,
                                 std::optional<ExposureKind> kind_override = std::nullopt);

// ---------------------------------------------------------------------------
// Interventions

enum class InterventionKind { IncrementalPropensity, ExponentialTilt, ShiftPolicy };

std::string to_string(InterventionKind kind);
InterventionKind parse_intervention_kind(const std::string& text);

struct SupportBounds {
  double lower = 0.0;
  double upper = 0.0;
};

// l(w), u(w) for a shift policy.
using BoundsFunction = std::function<SupportBounds(std::span<const double> w)>;

class InterventionSpec {
 public:
  static InterventionSpec incremental_propensity(double odds_multiplier);
  static InterventionSpec exponential_tilt(double delta);
  // Without explicit bounds the constant per-sample range of A is used
  // (resolved by `with_default_bounds`).
  static InterventionSpec shift_policy(double delta, std::optional<BoundsFunction> bounds = {});

  InterventionKind kind() const { return kind_; }
  double delta() const { return delta_; }

  // Tilt parameter for the two distributional kinds (log odds multiplier for IPS).
  double tilt_parameter() const;

  bool is_identity() const;
  bool has_bounds() const { return bounds_.has_value(); }
  SupportBounds bounds_at(std::span<const double> w) const;

  InterventionSpec with_delta(double delta) const;
  InterventionSpec with_default_bounds(const ObservedDataset& data) const;

  // Checks the exposure-kind and delta-range invariants against a dataset.
  void validate_for(const ObservedDataset& data) const;

 private:
  InterventionKind kind_ = InterventionKind::IncrementalPropensity;
  double delta_ = 1.0;
  std::optional<BoundsFunction> bounds_;
};

// ---------------------------------------------------------------------------
// Fitted nuisance functions

struct FitDiagnostics {
  bool converged = true;
  int iterations = 0;
  bool ridge_fallback = false;
  std::vector<std::string> warnings;
};

class Regression {
 public:
  virtual ~Regression() = default;
  virtual double predict(std::span<const double> x) const = 0;
  const FitDiagnostics& diagnostics() const { return diagnostics_; }

 protected:
  FitDiagnostics diagnostics_;
};

// Conditional density (continuous) or mass (discrete) of the exposure.
class ConditionalDensity {
 public:
  virtual ~ConditionalDensity() = default;
  virtual double density(double a, std::span<const double> x) const = 0;
  // density(nodes[k], x) for every node; overridden where per-row work can be shared.
  virtual void tabulate(std::span<const double> nodes, std::span<const double> x,
                        std::span<double> out) const {
    for (std::size_t k = 0; k < nodes.size(); ++k) out[k] = density(nodes[k], x);
  }
  // Discontinuities in a; quadrature rules place nodes on both sides.
  virtual std::vector<double> breakpoints() const { return {}; }
  const FitDiagnostics& diagnostics() const { return diagnostics_; }

 protected:
  FitDiagnostics diagnostics_;
};

// Wraps a probability p(x) = P(A = 1 | x) as a mass function on {0, 1}.
class BinaryMass final : public ConditionalDensity {
 public:
  explicit BinaryMass(std::shared_ptr<const Regression> probability);
  double density(double a, std::span<const double> x) const override;
  double probability(std::span<const double> x) const { return probability_->predict(x); }

 private:
  std::shared_ptr<const Regression> probability_;
};

// Callable-backed nuisances, used for known mechanisms (randomized trials)
// and for plugging exact functions into the estimators.
class FunctionRegression final : public Regression {
 public:
  explicit FunctionRegression(std::function<double(std::span<const double>)> f) : f_(std::move(f)) {}
  double predict(std::span<const double> x) const override { return f_(x); }

 private:
  std::function<double(std::span<const double>)> f_;
};

class FunctionDensity final : public ConditionalDensity {
 public:
  explicit FunctionDensity(std::function<double(double, std::span<const double>)> f,
                           std::vector<double> breaks = {})
      : f_(std::move(f)), breaks_(std::move(breaks)) {}
  double density(double a, std::span<const double> x) const override { return f_(a, x); }
  std::vector<double> breakpoints() const override { return breaks_; }

 private:
  std::function<double(double, std::span<const double>)> f_;
  std::vector<double> breaks_;
};

// Nuisance bundle for one training fold. Argument layouts:
//   g(a | w), e(a | w, z), m(a, z, w), phi(a, w) or phi(w) for IPS.
// With no mediators e is g and m is b(a, w).
struct NuisanceFits {
  std::shared_ptr<const ConditionalDensity> g;
  std::shared_ptr<const ConditionalDensity> e;
  std::shared_ptr<const Regression> m;
  std::shared_ptr<const Regression> phi;
  bool has_mediators = true;
  // Lower bound applied to g and e evaluations when they appear in a denominator.
  double truncation_floor = 1e-3;
};

// ---------------------------------------------------------------------------
// Result records

struct EifRecord {
  double dY = 0.0;
  double dA = 0.0;
  double dZW = 0.0;
  double total = 0.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct EffectRow {
  double delta = 0.0;
  double theta = 0.0;
  double psi = 0.0;  // total-effect functional, E[Y(A_delta)]
  double direct = 0.0;
  double indirect = 0.0;
  double total = 0.0;
  double se_direct = 0.0;
  double se_indirect = 0.0;
  double se_total = 0.0;
  Interval ci_direct;
  Interval ci_indirect;
  Interval ci_total;
  std::optional<Interval> band_direct;
};

struct UniformSummary {
  double critical_value = 0.0;
  double sup_statistic = 0.0;
  double sup_test_p = 1.0;
  std::size_t n_boot = 0;
  std::string multiplier;
  double alpha = 0.05;
};

struct EffectReport {
  int schema_version = 1;
  std::string version;
  std::string timestamp;
  std::string estimator;
  std::string intervention;
  ExposureKind exposure_kind = ExposureKind::Binary;
  std::size_t n = 0;
  double outcome_mean = 0.0;
  double alpha = 0.05;
  std::vector<EffectRow> rows;
  std::optional<UniformSummary> uniform;
  std::size_t capped_weights = 0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  std::vector<std::string> warnings;
  std::string config_json;  // resolved configuration, echoed verbatim
  std::uint64_t seed = 0;
};

}  // namespace stochmed

#include "stochmed/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "stochmed/error.hpp"
#include "stochmed/kernels.hpp"

namespace stochmed {

std::string to_string(ExposureKind kind) {
  return kind == ExposureKind::Binary ? "binary" : "continuous";
}

std::optional<std::size_t> RawTable::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

ObservedDataset::ObservedDataset(RowMatrix covariates, Eigen::VectorXd exposure, RowMatrix mediators,
                                 Eigen::VectorXd outcome, ExposureKind kind)
    : covariates_(std::move(covariates)),
      exposure_(std::move(exposure)),
      mediators_(std::move(mediators)),
      outcome_(std::move(outcome)),
      kind_(kind) {
  const auto n = outcome_.size();
  require(n >= 1, ErrorCode::EmptyDataset, "dataset has no rows");
  require(exposure_.size() == n && covariates_.rows() == n && mediators_.rows() == n,
          ErrorCode::DomainError, "dataset columns have unequal lengths");
  if (kind_ == ExposureKind::Binary) {
    for (Eigen::Index i = 0; i < n; ++i) {
      require(exposure_[i] == 0.0 || exposure_[i] == 1.0, ErrorCode::DomainError,
              "binary exposure contains a value outside {0,1}");
    }
  }
  for (Eigen::Index j = 0; j < covariates_.cols(); ++j) covariate_names.push_back("W" + std::to_string(j + 1));
  for (Eigen::Index j = 0; j < mediators_.cols(); ++j) mediator_names.push_back("Z" + std::to_string(j + 1));
}

double ObservedDataset::outcome_mean() const {
  return kernels::mean({outcome_.data(), n()});
}

ObservedDataset ObservedDataset::without_mediators() const {
  ObservedDataset out(covariates_, exposure_, RowMatrix(covariates_.rows(), 0), outcome_, kind_);
  out.covariate_names = covariate_names;
  out.mediator_names.clear();
  out.exposure_name = exposure_name;
  out.outcome_name = outcome_name;
  return out;
}

ObservedDataset ObservedDataset::subset(std::span<const std::size_t> rows) const {
  const auto m = static_cast<Eigen::Index>(rows.size());
  RowMatrix w(m, covariates_.cols());
  RowMatrix z(m, mediators_.cols());
  Eigen::VectorXd a(m), y(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto i = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]);
    w.row(r) = covariates_.row(i);
    z.row(r) = mediators_.row(i);
    a[r] = exposure_[i];
    y[r] = outcome_[i];
  }
  ObservedDataset out(std::move(w), std::move(a), std::move(z), std::move(y), kind_);
  out.covariate_names = covariate_names;
  out.mediator_names = mediator_names;
  out.exposure_name = exposure_name;
  out.outcome_name = outcome_name;
  return out;
}

ObservedDataset ObservedDataset::with_outcome(Eigen::VectorXd outcome) const {
  ObservedDataset out(covariates_, exposure_, mediators_, std::move(outcome), kind_);
  out.covariate_names = covariate_names;
  out.mediator_names = mediator_names;
  out.exposure_name = exposure_name;
  out.outcome_name = outcome_name;
  return out;
}

ExposureKind infer_exposure_kind(std::span<const double> a) {
  const bool binary = std::all_of(a.begin(), a.end(), [](double v) { return v == 0.0 || v == 1.0; });
  return binary ? ExposureKind::Binary : ExposureKind::Continuous;
}

ObservedDataset validate_dataset(const RawTable& raw, const ColumnRoles& roles,
                                 std::optional<ExposureKind> kind_override) {
  require(!roles.exposure.empty(), ErrorCode::RoleConflict, "no exposure column assigned");
  require(!roles.outcome.empty(), ErrorCode::RoleConflict, "no outcome column assigned");

  std::set<std::string> seen;
  auto claim = [&](const std::string& name) {
    require(seen.insert(name).second, ErrorCode::RoleConflict,
            "column '" + name + "' is assigned more than one role");
    const auto idx = raw.index_of(name);
    require(idx.has_value(), ErrorCode::RoleConflict, "column '" + name + "' not found in input");
    return *idx;
  };
  const std::size_t a_idx = claim(roles.exposure);
  const std::size_t y_idx = claim(roles.outcome);
  std::vector<std::size_t> w_idx, z_idx;
  for (const auto& name : roles.covariates) w_idx.push_back(claim(name));
  for (const auto& name : roles.mediators) z_idx.push_back(claim(name));

  const std::size_t n = raw.rows();
  require(n >= 1, ErrorCode::EmptyDataset, "input table has no data rows");

  auto cell = [&](std::size_t col, std::size_t row) {
    const auto& v = raw.columns[col][row];
    if (!v.has_value() || !std::isfinite(*v)) throw MissingValueError(row, raw.names[col]);
    return *v;
  };

  // first missing cell in reading order
  std::vector<std::size_t> used(w_idx);
  used.insert(used.end(), z_idx.begin(), z_idx.end());
  used.push_back(a_idx);
  used.push_back(y_idx);
  std::sort(used.begin(), used.end());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t col : used) cell(col, i);

  const auto rows = static_cast<Eigen::Index>(n);
  RowMatrix w(rows, static_cast<Eigen::Index>(w_idx.size()));
  RowMatrix z(rows, static_cast<Eigen::Index>(z_idx.size()));
  Eigen::VectorXd a(rows), y(rows);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    a[r] = cell(a_idx, i);
    y[r] = cell(y_idx, i);
    for (std::size_t j = 0; j < w_idx.size(); ++j) w(r, static_cast<Eigen::Index>(j)) = cell(w_idx[j], i);
    for (std::size_t j = 0; j < z_idx.size(); ++j) z(r, static_cast<Eigen::Index>(j)) = cell(z_idx[j], i);
  }

  const ExposureKind kind = kind_override.value_or(infer_exposure_kind({a.data(), n}));
  ObservedDataset data(std::move(w), std::move(a), std::move(z), std::move(y), kind);
  data.covariate_names = roles.covariates;
  data.mediator_names = roles.mediators;
  data.exposure_name = roles.exposure;
  data.outcome_name = roles.outcome;
  return data;
}

// ---------------------------------------------------------------------------

std::string to_string(InterventionKind kind) {
  switch (kind) {
    case InterventionKind::IncrementalPropensity: return "ips";
    case InterventionKind::ExponentialTilt: return "tilt";
    case InterventionKind::ShiftPolicy: return "shift";
  }
  return "unknown";
}

InterventionKind parse_intervention_kind(const std::string& text) {
  if (text == "ips") return InterventionKind::IncrementalPropensity;
  if (text == "tilt") return InterventionKind::ExponentialTilt;
  if (text == "shift") return InterventionKind::ShiftPolicy;
  fail(ErrorCode::ParseError, "unknown intervention '" + text + "' (expected ips, tilt or shift)");
}

InterventionSpec InterventionSpec::incremental_propensity(double odds_multiplier) {
  require(std::isfinite(odds_multiplier) && odds_multiplier > 0.0, ErrorCode::DomainError,
          "incremental propensity multiplier must be > 0");
  InterventionSpec s;
  s.kind_ = InterventionKind::IncrementalPropensity;
  s.delta_ = odds_multiplier;
  return s;
}

InterventionSpec InterventionSpec::exponential_tilt(double delta) {
  require(std::isfinite(delta), ErrorCode::DomainError, "tilt parameter must be finite");
  InterventionSpec s;
  s.kind_ = InterventionKind::ExponentialTilt;
  s.delta_ = delta;
  return s;
}

InterventionSpec InterventionSpec::shift_policy(double delta, std::optional<BoundsFunction> bounds) {
  require(std::isfinite(delta) && delta > 0.0, ErrorCode::DomainError, "shift magnitude must be > 0");
  InterventionSpec s;
  s.kind_ = InterventionKind::ShiftPolicy;
  s.delta_ = delta;
  s.bounds_ = std::move(bounds);
  return s;
}

double InterventionSpec::tilt_parameter() const {
  switch (kind_) {
    case InterventionKind::IncrementalPropensity: return std::log(delta_);
    case InterventionKind::ExponentialTilt: return delta_;
    case InterventionKind::ShiftPolicy: break;
  }
  fail(ErrorCode::DomainError, "shift policies have no tilt parameter");
}

bool InterventionSpec::is_identity() const {
  switch (kind_) {
    case InterventionKind::IncrementalPropensity: return delta_ == 1.0;
    case InterventionKind::ExponentialTilt: return delta_ == 0.0;
    case InterventionKind::ShiftPolicy: return false;
  }
  return false;
}

SupportBounds InterventionSpec::bounds_at(std::span<const double> w) const {
  require(bounds_.has_value(), ErrorCode::DomainError, "shift policy bounds are unresolved");
  return (*bounds_)(w);
}

InterventionSpec InterventionSpec::with_delta(double delta) const {
  switch (kind_) {
    case InterventionKind::IncrementalPropensity: return incremental_propensity(delta);
    case InterventionKind::ExponentialTilt: return exponential_tilt(delta);
    case InterventionKind::ShiftPolicy: return shift_policy(delta, bounds_);
  }
  return *this;
}

InterventionSpec InterventionSpec::with_default_bounds(const ObservedDataset& data) const {
  if (kind_ != InterventionKind::ShiftPolicy || bounds_.has_value()) return *this;
  const auto& a = data.exposure();
  const SupportBounds b{a.minCoeff(), a.maxCoeff()};
  InterventionSpec s = *this;
  s.bounds_ = [b](std::span<const double>) { return b; };
  return s;
}

void InterventionSpec::validate_for(const ObservedDataset& data) const {
  switch (kind_) {
    case InterventionKind::IncrementalPropensity:
      require(data.exposure_kind() == ExposureKind::Binary, ErrorCode::DomainError,
              "incremental propensity interventions require a binary exposure");
      break;
    case InterventionKind::ExponentialTilt: break;
    case InterventionKind::ShiftPolicy: {
      require(data.exposure_kind() == ExposureKind::Continuous, ErrorCode::DomainError,
              "shift policies require a continuous exposure");
      const InterventionSpec resolved = with_default_bounds(data);
      for (std::size_t i = 0; i < data.n(); ++i) {
        const auto b = resolved.bounds_at(data.w(i));
        require(b.lower < b.upper && delta_ < b.upper - b.lower, ErrorCode::DomainError,
                "shift magnitude must lie in (0, u(w) - l(w)) for every unit");
      }
      break;
    }
  }
}

// ---------------------------------------------------------------------------

BinaryMass::BinaryMass(std::shared_ptr<const Regression> probability)
    : probability_(std::move(probability)) {
  diagnostics_ = probability_->diagnostics();
}

double BinaryMass::density(double a, std::span<const double> x) const {
  const double p = probability_->predict(x);
  if (a == 1.0) return p;
  if (a == 0.0) return 1.0 - p;
  return 0.0;
}

}  // namespace stochmed

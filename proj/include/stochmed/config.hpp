#pragma once

// Run configuration: parsed from one JSON file, overridden by CLI flags,
// and echoed into every output.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "stochmed/estimators.hpp"
#include "stochmed/inference.hpp"
#include "stochmed/learners.hpp"
#include "stochmed/model.hpp"
#include "stochmed/sim.hpp"

namespace stochmed::config {

struct DeltaGrid {
  double lo = 0.5;
  double hi = 2.0;
  std::size_t k = 10;
};

// "LO:HI:K"
DeltaGrid parse_grid(const std::string& text);

struct RunConfig {
  std::string mode = "analyze";  // analyze | simulate | oracle
  std::string input;
  std::string output;

  ColumnRoles roles;
  std::optional<ExposureKind> exposure_kind;

  InterventionKind intervention = InterventionKind::IncrementalPropensity;
  std::optional<double> delta;
  std::optional<DeltaGrid> grid;
  // Shift policies: constant support bounds; defaults to the sample range of A.
  std::optional<double> shift_lower;
  std::optional<double> shift_upper;

  estimators::EstimatorKind estimator = estimators::EstimatorKind::OneStep;
  learners::LearnerSet learners = sim::default_learners();
  std::size_t folds = 5;
  double truncation_floor = 1e-3;
  double weight_cap = 1e4;
  std::size_t quadrature_points = kDefaultQuadraturePoints;
  learners::PhiForm phi_form = learners::PhiForm::Stabilized;
  // Known P(A = 1) for randomized trials; zeroes the exposure term.
  std::optional<double> known_propensity;

  std::size_t boot = 2000;
  inference::Multiplier multiplier = inference::Multiplier::Rademacher;
  double alpha = 0.05;

  std::uint64_t seed = 20200;
  unsigned threads = 1;

  // simulate
  std::vector<std::size_t> ns{400, 1600, 6400};
  std::size_t reps = 300;
  std::vector<std::string> misspecify;  // G, E, M; empty = the default arm set
  bool emit_data = false;
  std::size_t emit_n = 4900;
  sim::DgpVariant dgp = sim::DgpVariant::Standard;
};

RunConfig from_json(const nlohmann::json& j);
RunConfig from_file(const std::string& path);
nlohmann::ordered_json to_json(const RunConfig& c);

// The delta values to evaluate: the grid if set, else the single delta, else
// the intervention's default (0.5 for IPS odds, the identity otherwise).
std::vector<double> deltas_of(const RunConfig& c);

InterventionSpec intervention_of(const RunConfig& c, double delta);

estimators::EstimatorOptions estimator_options(const RunConfig& c);

sim::SimConfig sim_config(const RunConfig& c);

inference::UniformInferenceConfig uniform_config(const RunConfig& c);

nlohmann::ordered_json learner_json(const learners::LearnerSpec& s);
learners::LearnerSpec learner_from_json(const nlohmann::json& j, learners::LearnerSpec base);

}  // namespace stochmed::config

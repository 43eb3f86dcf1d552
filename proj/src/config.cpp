#include "stochmed/config.hpp"

#include <fstream>
#include <sstream>

#include "stochmed/error.hpp"

namespace stochmed::config {

DeltaGrid parse_grid(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  require(parts.size() == 3, ErrorCode::ParseError, "delta grid must look like LO:HI:K, got '" + text + "'");
  DeltaGrid g;
  try {
    std::size_t used = 0;
    g.lo = std::stod(parts[0], &used);
    require(used == parts[0].size(), ErrorCode::ParseError, "bad grid lower bound");
    g.hi = std::stod(parts[1], &used);
    require(used == parts[1].size(), ErrorCode::ParseError, "bad grid upper bound");
    const long k = std::stol(parts[2], &used);
    require(used == parts[2].size() && k >= 1, ErrorCode::ParseError, "grid size must be a positive integer");
    g.k = static_cast<std::size_t>(k);
  } catch (const std::logic_error&) {
    fail(ErrorCode::ParseError, "delta grid must look like LO:HI:K, got '" + text + "'");
  }
  require(g.hi >= g.lo, ErrorCode::DomainError, "delta grid needs LO <= HI");
  return g;
}

nlohmann::ordered_json learner_json(const learners::LearnerSpec& s) {
  return {{"kind", learners::to_string(s.kind)},
          {"ridge_lambda", s.ridge_lambda},
          {"bins", s.bins},
          {"max_iterations", s.max_iterations},
          {"tolerance", s.tolerance},
          {"interactions", s.interactions},
          {"pseudo_count", s.pseudo_count},
          {"shrinkage", s.shrinkage},
          {"max_strata", s.max_strata}};
}

learners::LearnerSpec learner_from_json(const nlohmann::json& j, learners::LearnerSpec s) {
  if (j.is_string()) {
    s.kind = learners::parse_learner_kind(j.get<std::string>());
    return s;
  }
  if (j.contains("kind")) s.kind = learners::parse_learner_kind(j.at("kind").get<std::string>());
  s.ridge_lambda = j.value("ridge_lambda", s.ridge_lambda);
  s.bins = j.value("bins", s.bins);
  s.max_iterations = j.value("max_iterations", s.max_iterations);
  s.tolerance = j.value("tolerance", s.tolerance);
  s.interactions = j.value("interactions", s.interactions);
  s.pseudo_count = j.value("pseudo_count", s.pseudo_count);
  s.shrinkage = j.value("shrinkage", s.shrinkage);
  s.max_strata = j.value("max_strata", s.max_strata);
  require(s.ridge_lambda >= 0.0, ErrorCode::DomainError, "ridge_lambda must be >= 0");
  require(s.shrinkage >= 0.0, ErrorCode::DomainError, "shrinkage must be >= 0");
  require(s.pseudo_count >= 0.0, ErrorCode::DomainError, "pseudo_count must be >= 0");
  return s;
}

RunConfig from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    c.mode = j.value("mode", c.mode);
    c.input = j.value("input", c.input);
    c.output = j.value("output", c.output);
    if (j.contains("roles")) {
      const auto& r = j.at("roles");
      c.roles.covariates = r.value("covariates", std::vector<std::string>{});
      c.roles.exposure = r.value("exposure", std::string{});
      c.roles.mediators = r.value("mediators", std::vector<std::string>{});
      c.roles.outcome = r.value("outcome", std::string{});
    }
    if (j.contains("exposure_kind") && !j.at("exposure_kind").is_null()) {
      const auto k = j.at("exposure_kind").get<std::string>();
      require(k == "binary" || k == "continuous", ErrorCode::ParseError, "exposure_kind must be binary or continuous");
      c.exposure_kind = k == "binary" ? ExposureKind::Binary : ExposureKind::Continuous;
    }
    if (j.contains("intervention")) c.intervention = parse_intervention_kind(j.at("intervention").get<std::string>());
    if (j.contains("delta") && !j.at("delta").is_null()) c.delta = j.at("delta").get<double>();
    if (j.contains("delta_grid") && !j.at("delta_grid").is_null()) {
      const auto& g = j.at("delta_grid");
      if (g.is_string()) {
        c.grid = parse_grid(g.get<std::string>());
      } else {
        c.grid = DeltaGrid{g.at("lo").get<double>(), g.at("hi").get<double>(), g.at("k").get<std::size_t>()};
      }
    }
    if (j.contains("shift_lower") && !j.at("shift_lower").is_null()) c.shift_lower = j.at("shift_lower").get<double>();
    if (j.contains("shift_upper") && !j.at("shift_upper").is_null()) c.shift_upper = j.at("shift_upper").get<double>();
    if (j.contains("estimator")) c.estimator = estimators::parse_estimator_kind(j.at("estimator").get<std::string>());
    if (j.contains("learners")) {
      const auto& l = j.at("learners");
      if (l.contains("g")) c.learners.g = learner_from_json(l.at("g"), c.learners.g);
      if (l.contains("e")) c.learners.e = learner_from_json(l.at("e"), c.learners.e);
      if (l.contains("m")) c.learners.m = learner_from_json(l.at("m"), c.learners.m);
      if (l.contains("phi")) c.learners.phi = learner_from_json(l.at("phi"), c.learners.phi);
    }
    c.folds = j.value("folds", c.folds);
    c.truncation_floor = j.value("truncation_floor", c.truncation_floor);
    c.weight_cap = j.value("weight_cap", c.weight_cap);
    c.quadrature_points = j.value("quadrature_points", c.quadrature_points);
    if (j.contains("phi_form")) {
      const auto f = j.at("phi_form").get<std::string>();
      require(f == "stabilized" || f == "unstabilized", ErrorCode::ParseError,
              "phi_form must be stabilized or unstabilized");
      c.phi_form = f == "stabilized" ? learners::PhiForm::Stabilized : learners::PhiForm::Unstabilized;
    }
    if (j.contains("known_propensity") && !j.at("known_propensity").is_null())
      c.known_propensity = j.at("known_propensity").get<double>();
    c.boot = j.value("boot", c.boot);
    if (j.contains("multiplier")) c.multiplier = inference::parse_multiplier(j.at("multiplier").get<std::string>());
    c.alpha = j.value("alpha", c.alpha);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.ns = j.value("ns", c.ns);
    c.reps = j.value("reps", c.reps);
    c.misspecify = j.value("misspecify", c.misspecify);
    c.emit_data = j.value("emit_data", c.emit_data);
    c.emit_n = j.value("emit_n", c.emit_n);
    if (j.contains("dgp")) {
      const auto d = j.at("dgp").get<std::string>();
      require(d == "standard" || d == "null-direct", ErrorCode::ParseError, "dgp must be standard or null-direct");
      c.dgp = d == "standard" ? sim::DgpVariant::Standard : sim::DgpVariant::NullDirect;
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("invalid configuration: ") + e.what());
  }
  require(c.alpha > 0.0 && c.alpha < 1.0, ErrorCode::DomainError, "alpha must lie in (0,1)");
  require(c.truncation_floor > 0.0 && c.truncation_floor < 1.0, ErrorCode::DomainError,
          "truncation_floor must lie in (0,1)");
  return c;
}

RunConfig from_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::ParseError, "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["mode"] = c.mode;
  j["input"] = c.input;
  j["output"] = c.output;
  j["roles"] = {{"covariates", c.roles.covariates},
                {"exposure", c.roles.exposure},
                {"mediators", c.roles.mediators},
                {"outcome", c.roles.outcome}};
  j["exposure_kind"] = c.exposure_kind ? nlohmann::ordered_json(to_string(*c.exposure_kind)) : nullptr;
  j["intervention"] = to_string(c.intervention);
  j["delta"] = c.delta ? nlohmann::ordered_json(*c.delta) : nullptr;
  j["delta_grid"] = c.grid ? nlohmann::ordered_json({{"lo", c.grid->lo}, {"hi", c.grid->hi}, {"k", c.grid->k}})
                           : nlohmann::ordered_json(nullptr);
  j["shift_lower"] = c.shift_lower ? nlohmann::ordered_json(*c.shift_lower) : nullptr;
  j["shift_upper"] = c.shift_upper ? nlohmann::ordered_json(*c.shift_upper) : nullptr;
  j["estimator"] = estimators::to_string(c.estimator);
  j["learners"] = {{"g", learner_json(c.learners.g)},
                   {"e", learner_json(c.learners.e)},
                   {"m", learner_json(c.learners.m)},
                   {"phi", learner_json(c.learners.phi)}};
  j["folds"] = c.folds;
  j["truncation_floor"] = c.truncation_floor;
  j["weight_cap"] = c.weight_cap;
  j["quadrature_points"] = c.quadrature_points;
  j["phi_form"] = c.phi_form == learners::PhiForm::Stabilized ? "stabilized" : "unstabilized";
  j["known_propensity"] = c.known_propensity ? nlohmann::ordered_json(*c.known_propensity) : nullptr;
  j["boot"] = c.boot;
  j["multiplier"] = inference::to_string(c.multiplier);
  j["alpha"] = c.alpha;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["ns"] = c.ns;
  j["reps"] = c.reps;
  j["misspecify"] = c.misspecify;
  j["emit_data"] = c.emit_data;
  j["emit_n"] = c.emit_n;
  j["dgp"] = sim::to_string(c.dgp);
  return j;
}

std::vector<double> deltas_of(const RunConfig& c) {
  if (c.grid) {
    if (c.intervention == InterventionKind::IncrementalPropensity)
      return inference::log_grid(c.grid->lo, c.grid->hi, c.grid->k);
    return inference::linear_grid(c.grid->lo, c.grid->hi, c.grid->k);
  }
  if (c.delta) return {*c.delta};
  switch (c.intervention) {
    case InterventionKind::IncrementalPropensity: return {0.5};
    case InterventionKind::ExponentialTilt: return {0.0};
    case InterventionKind::ShiftPolicy: break;
  }
  fail(ErrorCode::DomainError, "shift policies need an explicit --delta");
}

InterventionSpec intervention_of(const RunConfig& c, double delta) {
  switch (c.intervention) {
    case InterventionKind::IncrementalPropensity: return InterventionSpec::incremental_propensity(delta);
    case InterventionKind::ExponentialTilt: return InterventionSpec::exponential_tilt(delta);
    case InterventionKind::ShiftPolicy: {
      if (c.shift_lower || c.shift_upper) {
        require(c.shift_lower && c.shift_upper, ErrorCode::DomainError, "give both shift_lower and shift_upper");
        const SupportBounds b{*c.shift_lower, *c.shift_upper};
        return InterventionSpec::shift_policy(delta, [b](std::span<const double>) { return b; });
      }
      return InterventionSpec::shift_policy(delta);
    }
  }
  fail(ErrorCode::DomainError, "unknown intervention");
}

estimators::EstimatorOptions estimator_options(const RunConfig& c) {
  estimators::EstimatorOptions o;
  o.kind = c.estimator;
  o.folds = c.folds;
  o.seed = c.seed;
  o.quadrature_points = c.quadrature_points;
  o.eif.weight_cap = c.weight_cap;
  o.fit.learners = c.learners;
  o.fit.truncation_floor = c.truncation_floor;
  o.fit.phi_form = c.phi_form;
  o.fit.threads = c.threads;
  for (const auto& t : c.misspecify) {
    learners::LearnerSpec* target = t == "G" ? &o.fit.learners.g
                                  : t == "E" ? &o.fit.learners.e
                                  : t == "M" ? &o.fit.learners.m
                                             : nullptr;
    require(target != nullptr, ErrorCode::ParseError, "--misspecify takes G, E or M");
    target->kind = learners::LearnerKind::InterceptOnly;
  }
  if (c.known_propensity) {
    const double p = *c.known_propensity;
    require(p > 0.0 && p < 1.0, ErrorCode::DomainError, "known_propensity must lie in (0,1)");
    o.fit.known_g = std::make_shared<BinaryMass>(
        std::make_shared<FunctionRegression>([p](std::span<const double>) { return p; }));
    o.eif.zero_exposure_term = true;
  }
  return o;
}

sim::SimConfig sim_config(const RunConfig& c) {
  sim::SimConfig s;
  s.ns = c.ns;
  s.reps = c.reps;
  s.seed = c.seed;
  s.folds = c.folds;
  s.threads = c.threads;
  s.alpha = c.alpha;
  s.variant = c.dgp;
  s.learners = c.learners;
  if (c.delta) s.delta = *c.delta;
  if (!c.misspecify.empty()) {
    // the well-specified arms plus one efficient arm per toggle
    s.arms = {{estimators::EstimatorKind::Substitution, ""},
              {estimators::EstimatorKind::Reweighted, ""},
              {estimators::EstimatorKind::OneStep, ""}};
    for (const auto& t : c.misspecify) {
      require(t == "G" || t == "E" || t == "M", ErrorCode::ParseError, "--misspecify takes G, E or M");
      s.arms.push_back({estimators::EstimatorKind::OneStep, t});
    }
  }
  return s;
}

inference::UniformInferenceConfig uniform_config(const RunConfig& c) {
  inference::UniformInferenceConfig u;
  u.n_boot = c.boot;
  u.multiplier = c.multiplier;
  u.alpha = c.alpha;
  u.seed = c.seed;
  u.threads = c.threads;
  return u;
}

}  // namespace stochmed::config

// stochmed: analyze | simulate | oracle

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "stochmed/config.hpp"
#include "stochmed/error.hpp"
#include "stochmed/estimators.hpp"
#include "stochmed/inference.hpp"
#include "stochmed/report_io.hpp"
#include "stochmed/sim.hpp"

using namespace stochmed;

namespace {

struct Flags {
  std::string config;
  std::string input;
  std::string output;
  std::string intervention;
  std::optional<double> delta;
  std::string grid;
  std::string estimator;
  std::optional<std::size_t> folds;
  std::optional<std::size_t> boot;
  std::string multiplier;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool emit_data = false;
  std::vector<std::string> misspecify;
  std::vector<std::string> covariates;
  std::string exposure;
  std::vector<std::string> mediators;
  std::string outcome;
  std::optional<std::size_t> reps;
  std::vector<std::size_t> ns;
  std::string dgp;
  std::optional<double> alpha;
};

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

config::RunConfig resolve(const std::string& mode, const Flags& f) {
  config::RunConfig c = f.config.empty() ? config::RunConfig{} : config::from_file(f.config);
  c.mode = mode;
  if (!f.input.empty()) c.input = f.input;
  if (!f.output.empty()) c.output = f.output;
  if (!f.intervention.empty()) c.intervention = parse_intervention_kind(f.intervention);
  if (f.delta) {
    c.delta = f.delta;
    c.grid.reset();
  }
  if (!f.grid.empty()) c.grid = config::parse_grid(f.grid);
  if (!f.estimator.empty()) c.estimator = estimators::parse_estimator_kind(f.estimator);
  if (f.folds) c.folds = *f.folds;
  if (f.boot) c.boot = *f.boot;
  if (!f.multiplier.empty()) c.multiplier = inference::parse_multiplier(f.multiplier);
  if (f.seed) c.seed = *f.seed;
  if (f.threads) c.threads = *f.threads;
  if (f.emit_data) c.emit_data = true;
  if (!f.misspecify.empty()) c.misspecify = f.misspecify;
  if (!f.covariates.empty()) c.roles.covariates = f.covariates;
  if (!f.exposure.empty()) c.roles.exposure = f.exposure;
  if (!f.mediators.empty()) c.roles.mediators = f.mediators;
  if (!f.outcome.empty()) c.roles.outcome = f.outcome;
  if (f.reps) c.reps = *f.reps;
  if (!f.ns.empty()) c.ns = f.ns;
  if (!f.dgp.empty()) c.dgp = f.dgp == "standard" ? sim::DgpVariant::Standard : sim::DgpVariant::NullDirect;
  if (f.alpha) c.alpha = *f.alpha;
  return c;
}

// Unassigned roles fall back to the naming convention W*, A, Z*, Y.
ColumnRoles default_roles(ColumnRoles roles, const RawTable& raw) {
  const bool none = roles.covariates.empty() && roles.exposure.empty() && roles.mediators.empty() &&
                    roles.outcome.empty();
  if (roles.exposure.empty() && raw.index_of("A")) roles.exposure = "A";
  if (roles.outcome.empty() && raw.index_of("Y")) roles.outcome = "Y";
  if (none) {
    for (const auto& name : raw.names) {
      if (name.size() > 1 && name[0] == 'W') roles.covariates.push_back(name);
      if (name.size() > 1 && name[0] == 'Z') roles.mediators.push_back(name);
    }
  }
  return roles;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::ParseError, "cannot write '" + path + "'");
  out << text;
}

std::string strip_extension(const std::string& path) {
  for (const char* ext : {".json", ".csv"}) {
    const std::string e(ext);
    if (path.size() > e.size() && path.compare(path.size() - e.size(), e.size(), e) == 0)
      return path.substr(0, path.size() - e.size());
  }
  return path;
}

int cmd_analyze(const config::RunConfig& c) {
  require(!c.input.empty(), ErrorCode::ParseError, "analyze needs --input");
  const RawTable raw = io::read_csv_file(c.input);
  const ObservedDataset data = validate_dataset(raw, default_roles(c.roles, raw), c.exposure_kind);
  const auto deltas = config::deltas_of(c);
  const auto spec = config::intervention_of(c, deltas.front());
  auto dec = estimators::decompose_effects(data, spec, deltas, config::estimator_options(c), c.alpha);
  auto& rep = dec.report;
  rep.version = io::kVersion;
  rep.timestamp = timestamp();
  rep.config_json = config::to_json(c).dump();
  if (c.grid && c.intervention != InterventionKind::ShiftPolicy) {
    inference::attach_uniform(rep, dec.s_direct, config::uniform_config(c));
  } else if (c.grid) {
    rep.warnings.push_back("uniform inference is offered for tilt and incremental propensity interventions only");
  }
  write_text(c.output, io::to_json(rep).dump(2) + "\n");
  return 0;
}

int cmd_simulate(const config::RunConfig& c) {
  if (c.emit_data) {
    const auto data = sim::generate(c.emit_n, c.seed, c.dgp);
    std::ostringstream out;
    io::write_dataset_csv(out, data);
    write_text(c.output, out.str());
    return 0;
  }
  const auto result = sim::run_table1(config::sim_config(c));
  std::ostringstream csv;
  io::write_sim_csv(csv, result);
  auto j = io::to_json(result);
  j["config"] = config::to_json(c);
  j["seed"] = c.seed;
  if (c.output.empty()) {
    std::cout << csv.str();
  } else {
    const auto stem = strip_extension(c.output);
    write_text(stem + ".csv", csv.str());
    write_text(stem + ".json", j.dump(2) + "\n");
  }
  return 0;
}

int cmd_oracle(const config::RunConfig& c) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["version"] = io::kVersion;
  j["seed"] = c.seed;
  j["dgp"] = sim::to_string(c.dgp);
  j["intervention"] = to_string(c.intervention);
  auto rows = nlohmann::ordered_json::array();
  for (double d : config::deltas_of(c)) rows.push_back(io::to_json(sim::oracle_truth(config::intervention_of(c, d), c.dgp)));
  j["rows"] = std::move(rows);
  j["config"] = config::to_json(c);
  write_text(c.output, j.dump(2) + "\n");
  return 0;
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--output", f.output, "output path (stdout if omitted)");
  cmd->add_option("--intervention", f.intervention, "ips | tilt | shift")->check(CLI::IsMember({"ips", "tilt", "shift"}));
  cmd->add_option("--delta", f.delta, "intervention parameter");
  cmd->add_option("--delta-grid", f.grid, "LO:HI:K grid of deltas");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--threads", f.threads, "worker threads (0 = auto)");
  cmd->add_option("--alpha", f.alpha, "level of the intervals");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Direct and indirect effects of stochastic interventions"};
  app.require_subcommand(1);
  Flags f;

  auto* analyze = app.add_subcommand("analyze", "estimate effects from a CSV dataset");
  add_common(analyze, f);
  analyze->add_option("--input", f.input, "CSV dataset");
  analyze->add_option("--estimator", f.estimator, "sub | ipw | onestep")->check(CLI::IsMember({"sub", "ipw", "onestep"}));
  analyze->add_option("--folds", f.folds, "cross-fitting folds");
  analyze->add_option("--boot", f.boot, "multiplier bootstrap draws");
  analyze->add_option("--multiplier", f.multiplier, "rademacher | gaussian")
      ->check(CLI::IsMember({"rademacher", "gaussian"}));
  analyze->add_option("--misspecify", f.misspecify, "replace a nuisance learner by an intercept (G, E, M)")
      ->check(CLI::IsMember({"G", "E", "M"}));
  analyze->add_option("--covariates", f.covariates, "covariate columns")->delimiter(',');
  analyze->add_option("--exposure", f.exposure, "exposure column");
  analyze->add_option("--mediators", f.mediators, "mediator columns")->delimiter(',');
  analyze->add_option("--outcome", f.outcome, "outcome column");

  auto* simulate = app.add_subcommand("simulate", "replicate the simulation study");
  add_common(simulate, f);
  simulate->add_option("--folds", f.folds, "cross-fitting folds");
  simulate->add_option("--reps", f.reps, "replications per sample size");
  simulate->add_option("--ns", f.ns, "sample sizes")->delimiter(',');
  simulate->add_option("--misspecify", f.misspecify, "efficient arms with an intercept-only learner (G, E, M)")
      ->check(CLI::IsMember({"G", "E", "M"}));
  simulate->add_flag("--emit-data", f.emit_data, "write one generated dataset as CSV instead of running");
  simulate->add_option("--dgp", f.dgp, "standard | null-direct")->check(CLI::IsMember({"standard", "null-direct"}));

  auto* oracle = app.add_subcommand("oracle", "exact truth by enumeration");
  add_common(oracle, f);
  oracle->add_option("--dgp", f.dgp, "standard | null-direct")->check(CLI::IsMember({"standard", "null-direct"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << io::error_json("ParseError", e.what()) << "\n";
    return 2;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(resolve("analyze", f));
    if (simulate->parsed()) return cmd_simulate(resolve("simulate", f));
    return cmd_oracle(resolve("oracle", f));
  } catch (const Error& e) {
    std::cerr << io::error_json(std::string(to_string(e.code())), e.what()) << "\n";
    return is_input_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << io::error_json("InternalError", e.what()) << "\n";
    return 3;
  }
}

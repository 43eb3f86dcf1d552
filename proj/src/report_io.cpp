#include "stochmed/report_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "stochmed/error.hpp"

namespace stochmed::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
  if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan") return std::nullopt;
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto res = std::from_chars(cell.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end)
    fail(ErrorCode::ParseError,
         "non-numeric value '" + cell + "' at row " + std::to_string(row) + ", column '" + column + "'");
  return v;
}

nlohmann::ordered_json interval_json(const Interval& iv) { return {iv.lo, iv.hi}; }

Interval interval_from(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

RawTable read_csv(std::istream& in) {
  RawTable t;
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::EmptyDataset, "input has no header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);  // BOM
  t.names = split(line);
  for (const auto& name : t.names) require(!name.empty(), ErrorCode::ParseError, "empty column name in header");
  t.columns.resize(t.names.size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    require(cells.size() == t.names.size(), ErrorCode::ParseError,
            "row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " cells, expected " +
                std::to_string(t.names.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) t.columns[c].push_back(parse_cell(cells[c], row, t.names[c]));
    ++row;
  }
  return t;
}

RawTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::ParseError, "cannot open input '" + path + "'");
  return read_csv(in);
}

void write_dataset_csv(std::ostream& out, const ObservedDataset& data) {
  std::vector<std::string> header = data.covariate_names;
  for (std::size_t j = header.size(); j < data.covariate_count(); ++j) header.push_back("W" + std::to_string(j + 1));
  header.push_back(data.exposure_name);
  auto zn = data.mediator_names;
  for (std::size_t j = zn.size(); j < data.mediator_count(); ++j) zn.push_back("Z" + std::to_string(j + 1));
  header.insert(header.end(), zn.begin(), zn.end());
  header.push_back(data.outcome_name);
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    bool first = true;
    auto put = [&](double v) {
      out << (first ? "" : ",") << format_double(v);
      first = false;
    };
    for (double v : data.w(i)) put(v);
    put(data.a(i));
    for (double v : data.z(i)) put(v);
    put(data.y(i));
    out << '\n';
  }
}

nlohmann::ordered_json to_json(const EffectReport& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = r.schema_version;
  j["version"] = r.version;
  j["timestamp"] = r.timestamp;
  j["seed"] = r.seed;
  j["estimator"] = r.estimator;
  j["intervention"] = r.intervention;
  j["exposure_kind"] = to_string(r.exposure_kind);
  j["n"] = r.n;
  j["outcome_mean"] = r.outcome_mean;
  j["alpha"] = r.alpha;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json x;
    x["delta"] = row.delta;
    x["theta"] = row.theta;
    x["psi"] = row.psi;
    x["direct"] = row.direct;
    x["indirect"] = row.indirect;
    x["total"] = row.total;
    x["se_direct"] = row.se_direct;
    x["se_indirect"] = row.se_indirect;
    x["se_total"] = row.se_total;
    x["ci_direct"] = interval_json(row.ci_direct);
    x["ci_indirect"] = interval_json(row.ci_indirect);
    x["ci_total"] = interval_json(row.ci_total);
    if (row.band_direct) x["band_direct"] = interval_json(*row.band_direct);
    rows.push_back(std::move(x));
  }
  j["rows"] = std::move(rows);
  if (r.uniform) {
    const auto& u = *r.uniform;
    j["uniform"] = {{"critical_value", u.critical_value}, {"sup_statistic", u.sup_statistic},
                    {"sup_test_p", u.sup_test_p},         {"n_boot", u.n_boot},
                    {"multiplier", u.multiplier},         {"alpha", u.alpha}};
  }
  j["diagnostics"] = {{"capped_weights", r.capped_weights}, {"sigma_min", r.sigma_min}, {"sigma_max", r.sigma_max}};
  j["warnings"] = r.warnings;
  j["config"] = r.config_json.empty() ? nlohmann::ordered_json::object() : nlohmann::ordered_json::parse(r.config_json);
  return j;
}

EffectReport report_from_json(const nlohmann::json& j) {
  try {
    EffectReport r;
    r.schema_version = j.at("schema_version").get<int>();
    require(r.schema_version == 1, ErrorCode::ParseError, "unsupported report schema version");
    r.version = j.value("version", "");
    r.timestamp = j.value("timestamp", "");
    r.seed = j.value("seed", std::uint64_t{0});
    r.estimator = j.at("estimator").get<std::string>();
    r.intervention = j.at("intervention").get<std::string>();
    r.exposure_kind = j.at("exposure_kind").get<std::string>() == "binary" ? ExposureKind::Binary
                                                                          : ExposureKind::Continuous;
    r.n = j.at("n").get<std::size_t>();
    r.outcome_mean = j.at("outcome_mean").get<double>();
    r.alpha = j.at("alpha").get<double>();
    for (const auto& x : j.at("rows")) {
      EffectRow row;
      row.delta = x.at("delta").get<double>();
      row.theta = x.at("theta").get<double>();
      row.psi = x.at("psi").get<double>();
      row.direct = x.at("direct").get<double>();
      row.indirect = x.at("indirect").get<double>();
      row.total = x.at("total").get<double>();
      row.se_direct = x.at("se_direct").get<double>();
      row.se_indirect = x.at("se_indirect").get<double>();
      row.se_total = x.at("se_total").get<double>();
      row.ci_direct = interval_from(x.at("ci_direct"));
      row.ci_indirect = interval_from(x.at("ci_indirect"));
      row.ci_total = interval_from(x.at("ci_total"));
      if (x.contains("band_direct")) row.band_direct = interval_from(x.at("band_direct"));
      r.rows.push_back(row);
    }
    if (j.contains("uniform")) {
      const auto& u = j.at("uniform");
      UniformSummary s;
      s.critical_value = u.at("critical_value").get<double>();
      s.sup_statistic = u.at("sup_statistic").get<double>();
      s.sup_test_p = u.at("sup_test_p").get<double>();
      s.n_boot = u.at("n_boot").get<std::size_t>();
      s.multiplier = u.at("multiplier").get<std::string>();
      s.alpha = u.at("alpha").get<double>();
      r.uniform = s;
    }
    if (j.contains("diagnostics")) {
      const auto& d = j.at("diagnostics");
      r.capped_weights = d.value("capped_weights", std::size_t{0});
      r.sigma_min = d.value("sigma_min", 0.0);
      r.sigma_max = d.value("sigma_max", 0.0);
    }
    if (j.contains("warnings")) r.warnings = j.at("warnings").get<std::vector<std::string>>();
    if (j.contains("config")) r.config_json = j.at("config").dump();
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("malformed report: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const sim::OracleTruth& t) {
  return {{"delta", t.delta},   {"theta", t.theta},       {"psi", t.psi},     {"outcome_mean", t.outcome_mean},
          {"direct", t.direct}, {"indirect", t.indirect}, {"total", t.total}};
}

void write_sim_csv(std::ostream& out, const sim::SimResult& result) {
  out << "estimator,toggle,n,reps,bias,se,mse,n_mse,failed,coverage,theta_bias,theta_se,theta_mse,theta_n_mse\n";
  for (const auto& r : result.rows) {
    out << '"' << r.estimator << '"' << ',' << r.toggle << ',' << r.n << ',' << r.reps << ','
        << format_double(r.bias) << ',' << format_double(r.se) << ',' << format_double(r.mse) << ','
        << format_double(r.n_mse) << ',' << r.failed << ',' << format_double(r.coverage) << ','
        << format_double(r.theta_bias) << ',' << format_double(r.theta_se) << ',' << format_double(r.theta_mse)
        << ',' << format_double(r.theta_n_mse) << '\n';
  }
}

nlohmann::ordered_json to_json(const sim::SimResult& result) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["version"] = kVersion;
  j["truth"] = to_json(result.truth);
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"estimator", r.estimator},
                    {"toggle", r.toggle},
                    {"n", r.n},
                    {"reps", r.reps},
                    {"failed", r.failed},
                    {"bias", r.bias},
                    {"se", r.se},
                    {"mse", r.mse},
                    {"n_mse", r.n_mse},
                    {"coverage", r.coverage},
                    {"theta_bias", r.theta_bias},
                    {"theta_se", r.theta_se},
                    {"theta_mse", r.theta_mse},
                    {"theta_n_mse", r.theta_n_mse}});
  }
  j["rows"] = std::move(rows);
  return j;
}

std::string error_json(const std::string& code, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = {{"code", code}, {"message", message}};
  return j.dump();
}

}  // namespace stochmed::io

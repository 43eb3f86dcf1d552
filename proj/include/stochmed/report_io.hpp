#pragma once

// CSV ingestion and JSON / CSV output of reports and simulation tables.

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "stochmed/model.hpp"
#include "stochmed/sim.hpp"

namespace stochmed::io {

inline constexpr const char* kVersion = "0.3.1";

// Header row, comma separated, '.' decimal. Empty cells and NA/NaN are missing.
RawTable read_csv(std::istream& in);
RawTable read_csv_file(const std::string& path);

void write_dataset_csv(std::ostream& out, const ObservedDataset& data);

nlohmann::ordered_json to_json(const EffectReport& report);
EffectReport report_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const sim::OracleTruth& truth);

// Columns: estimator, toggle, n, reps, bias, se, mse, n_mse, plus failures,
// coverage and the theta(delta) metrics.
void write_sim_csv(std::ostream& out, const sim::SimResult& result);
nlohmann::ordered_json to_json(const sim::SimResult& result);

// {"error": {"code": ..., "message": ...}}
std::string error_json(const std::string& code, const std::string& message);

// Shortest round-trip text for a double; non-finite values become "nan"/"inf".
std::string format_double(double v);

}  // namespace stochmed::io

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lorenz/scanner.hpp"

namespace lorenz {

// Parses and strictly validates a model config document (schema_version 1).
// Unknown keys, missing fields and type mismatches raise validation_error
// with the offending field path.
ModelConfig parse_model_config(const nlohmann::json& doc);
ModelConfig load_model_config(const std::string& path);

nlohmann::json model_config_to_json(const ModelConfig& config);

// 17-significant-digit formatting used for every floating-point output.
std::string fmt_double(double v);

// Long-format CSV, one row per cell (gnuplot-ready):
// i1,i2,<axis1>,<axis2>,m1,m2,b,class,period,lyap1,lyap2,lyap3,drift,escape_iterate
std::string scan_to_csv(const GridSpec& grid, const std::vector<ScanCell>& cells);

nlohmann::json lyapunov_to_json(const LyapunovSpectrum& spec);
nlohmann::json attractor_report_to_json(const AttractorReport& report);
nlohmann::json domain_reports_to_json(const std::vector<DomainReport>& reports);
nlohmann::json ladder_to_json(const IndexLadder& ladder);

CaseTag parse_case_tag(const std::string& s);

} // namespace lorenz

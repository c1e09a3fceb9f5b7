#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "evoconv/gconv.hpp"

namespace evoconv::cli {

nlohmann::json to_json(const ConvergenceReport& r);

/// One row per (n, j): experiment, n, test_fn_index, pairing_error, oracle_gap.
std::string to_csv(const ConvergenceReport& r);

/// Human-readable table of the ladder, the verdict and the oracle values.
std::string summary_table(const ConvergenceReport& r);

/// Writes report.json, report.csv and summary.txt into `dir`, creating it if needed.
void write_reports(const ConvergenceReport& r, const std::filesystem::path& dir);

}  // namespace evoconv::cli

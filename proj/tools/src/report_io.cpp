#include "evoconv_cli/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace evoconv::cli {

namespace {

std::string num(double x, int precision = 6) {
    std::ostringstream out;
    out << std::setprecision(precision) << x;
    return out.str();
}

std::string ladder_label(double v) { return std::isinf(v) ? "limit" : num(v); }

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("write to '" + path.string() + "' failed");
}

}  // namespace

nlohmann::json to_json(const ConvergenceReport& r) {
    nlohmann::json j;
    j["name"] = r.experiment;
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : r.params) params[k] = v;
    j["params"] = params;
    j["ladder_name"] = r.ladder_name;
    j["n_values"] = r.n_values;
    j["pairing_errors"] = r.pairing_errors;
    j["max_errors"] = r.max_errors();
    j["oracle_gaps"] = r.oracle_gaps;
    j["oracle_gap_meaning"] = r.oracle_gap_meaning;
    j["fitted_rate"] = r.fitted_rate;
    j["verdict"] = to_string(r.verdict);
    j["expected"] = to_string(r.expected);
    j["limit"] = r.limit_description;
    nlohmann::json oracles = nlohmann::json::object();
    for (const auto& [k, v] : r.oracle_values) oracles[k] = v;
    j["oracle_values"] = oracles;
    nlohmann::json solves = nlohmann::json::array();
    for (const auto& s : r.solves) {
        solves.push_back({{"ladder_value", std::isinf(s.ladder_value) ? nlohmann::json("limit") : nlohmann::json(s.ladder_value)},
                          {"lattice_norm", s.lattice_norm},
                          {"bound_rhs", s.bound_rhs},
                          {"residual_norm", s.residual_norm},
                          {"f_norm", s.f_norm},
                          {"continuity_holds", s.holds}});
    }
    j["solves"] = solves;
    j["notes"] = r.notes;
    j["elapsed_seconds"] = r.elapsed_seconds;
    return j;
}

std::string to_csv(const ConvergenceReport& r) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "experiment,n,test_fn_index,pairing_error,oracle_gap\n";
    for (std::size_t i = 0; i < r.pairing_errors.size(); ++i) {
        const double gap = i < r.oracle_gaps.size() ? r.oracle_gaps[i] : std::nan("");
        for (std::size_t j = 0; j < r.pairing_errors[i].size(); ++j)
            out << r.experiment << ',' << r.n_values[i] << ',' << j << ',' << r.pairing_errors[i][j] << ',' << gap
                << '\n';
    }
    return out.str();
}

std::string summary_table(const ConvergenceReport& r) {
    std::ostringstream out;
    out << "experiment: " << r.experiment << "\n";
    for (const auto& [k, v] : r.params) out << "  " << k << " = " << v << "\n";
    out << "limit: " << r.limit_description << "\n\n";
    out << std::left << std::setw(12) << r.ladder_name << std::setw(18) << "max pairing err" << std::setw(18)
        << "oracle gap" << "continuity\n";
    const auto errors = r.max_errors();
    for (std::size_t i = 0; i < errors.size(); ++i) {
        const bool holds = i < r.solves.size() && r.solves[i].holds;
        out << std::setw(12) << ladder_label(r.n_values[i]) << std::setw(18) << num(errors[i]) << std::setw(18)
            << (i < r.oracle_gaps.size() ? num(r.oracle_gaps[i]) : "-") << (holds ? "ok" : "VIOLATED") << "\n";
    }
    out << "\noracle gap: " << r.oracle_gap_meaning << "\n";
    out << "fitted rate: " << num(r.fitted_rate, 4) << "\n";
    out << "verdict: " << to_string(r.verdict) << " (expected " << to_string(r.expected) << ")"
        << (r.matches_expectation() ? "" : "  MISMATCH") << "\n";
    out << "continuity estimate: " << (r.continuity_holds() ? "holds on every solve" : "VIOLATED") << "\n";
    if (!r.oracle_values.empty()) {
        out << "\noracle values:\n";
        std::size_t w = 0;
        for (const auto& [k, v] : r.oracle_values) w = std::max(w, k.size());
        for (const auto& [k, v] : r.oracle_values)
            out << "  " << std::setw(static_cast<int>(w) + 2) << k << num(v, 10) << "\n";
    }
    if (!r.notes.empty()) {
        out << "\nnotes:\n";
        for (const auto& n : r.notes) out << "  - " << n << "\n";
    }
    out << "\nelapsed: " << num(r.elapsed_seconds, 4) << " s\n";
    return out.str();
}

void write_reports(const ConvergenceReport& r, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
    write_file(dir / "report.json", to_json(r).dump(2) + "\n");
    write_file(dir / "report.csv", to_csv(r));
    write_file(dir / "summary.txt", summary_table(r));
}

}  // namespace evoconv::cli

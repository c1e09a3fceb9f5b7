#include "evoconv_cli/app.hpp"

#include <CLI11.hpp>

#include <ostream>

#include "evoconv_cli/config.hpp"
#include "evoconv_cli/report_io.hpp"

namespace evoconv::cli {

namespace {

int list(std::ostream& out) {
    std::size_t w = 0;
    for (const auto& e : list_experiments()) w = std::max(w, e.name.size());
    for (const auto& e : list_experiments()) {
        out << e.name << std::string(w + 2 - e.name.size(), ' ') << "[" << to_string(e.expected) << "] " << e.anchor
            << "\n";
    }
    return kExpected;
}

int run_one(const std::string& experiment, const std::string& config_path, const std::string& out_override,
            const std::vector<std::string>& sets, std::ostream& out) {
    ExperimentConfig cfg = ExperimentConfig::defaults(experiment);
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        set_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!out_override.empty()) cfg.out_dir = out_override;
    validate(cfg.settings);

    const ConvergenceReport report = run_experiment(cfg.settings);
    write_reports(report, cfg.out_dir);
    out << summary_table(report);
    out << "reports written to " << cfg.out_dir << "\n";
    return report.matches_expectation() ? kExpected : kUnexpectedVerdict;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"evoconv: evolutionary equations and G-convergence experiments"};
    app.require_subcommand(1);

    auto* list_cmd = app.add_subcommand("list", "List the experiments with their expected verdicts");
    auto* run_cmd = app.add_subcommand("run", "Run one experiment and write report.json, report.csv and summary.txt");
    std::string experiment, config_path, out_dir;
    std::vector<std::string> sets;
    run_cmd->add_option("experiment", experiment, "Experiment name (see 'evoconv list')")->required();
    run_cmd->add_option("--config", config_path, "key = value configuration file");
    run_cmd->add_option("--out", out_dir, "Output directory (default results/<experiment>)");
    run_cmd->add_option("--set", sets, "Override one key, e.g. --set N=64")->take_all();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExpected;
    } catch (const CLI::ParseError& e) {
        err << "evoconv: " << e.what() << "\n";
        return kUsageError;
    }

    try {
        if (*list_cmd) return list(out);
        return run_one(experiment, config_path, out_dir, sets, out);
    } catch (const PreconditionError& e) {
        err << "evoconv: " << e.what() << "\n";
        return kUsageError;
    } catch (const ConfigError& e) {
        err << "evoconv: " << e.what() << "\n";
        return kUsageError;
    } catch (const std::exception& e) {
        err << "evoconv: run failed: " << e.what() << "\n";
        return kUsageError;
    }
}

}  // namespace evoconv::cli

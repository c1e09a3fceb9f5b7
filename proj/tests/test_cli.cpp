#include <gtest/gtest.h>

#include <algorithm>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "evoconv_cli/app.hpp"
#include "evoconv_cli/config.hpp"
#include "evoconv_cli/report_io.hpp"

using namespace evoconv;
using namespace evoconv::cli;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "evoconv");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::path(::testing::TempDir()) / ("evoconv_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string config_path(const std::string& experiment) {
    return std::string(EVOCONV_CONFIG_DIR) + "/" + experiment + ".cfg";
}

}  // namespace

TEST(Config, ShippedConfigsMatchDefaults) {
    for (const auto& e : list_experiments()) {
        auto cfg = ExperimentConfig::defaults(e.name);
        apply_config_file(cfg, config_path(e.name));
        EXPECT_EQ(cfg, ExperimentConfig::defaults(e.name)) << e.name;
    }
}

TEST(Config, RoundTripIsIdentity) {
    for (const auto& e : list_experiments()) {
        const auto cfg = ExperimentConfig::defaults(e.name);
        EXPECT_EQ(parse_config(e.name, serialize(cfg)), cfg) << e.name;
    }
    auto cfg = ExperimentConfig::defaults("kelvin_voigt");
    set_value(cfg, "nu", "0.1");
    set_value(cfg, "dt", "0.003");
    set_value(cfg, "n_values", "3, 7.5, 1e-3");
    set_value(cfg, "coefficient", "0:1, 0.3333333333333333:2.5");
    set_value(cfg, "kernel_file", "kernels/my kernel.txt");
    set_value(cfg, "seed", "18446744073709551615");
    set_value(cfg, "threads", "3");
    set_value(cfg, "out", "out dir");
    const auto again = parse_config("kelvin_voigt", serialize(cfg));
    EXPECT_EQ(again, cfg);
    EXPECT_EQ(serialize(again), serialize(cfg));
}

TEST(Config, CommentsAndAliases) {
    const auto cfg = parse_config("singular_perturbation",
                                  "# comment\n\n eps_values = 0.1 ,0.05  # trailing\nlambda=2\n");
    EXPECT_EQ(cfg.settings.ladder, (std::vector<double>{0.1, 0.05}));
    EXPECT_EQ(cfg.settings.lambda, 2.0);
}

TEST(Config, Errors) {
    auto message = [](const std::string& text) {
        try {
            parse_config("mixed_type", text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        } catch (const PreconditionError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(message("nu = 1\ncolour = red\n").find("colour"), std::string::npos);
    EXPECT_NE(message("nu = 1\nno equals sign\n").find(":2:"), std::string::npos);
    EXPECT_NE(message("N = -4\n").find("N"), std::string::npos);
    EXPECT_NE(message("dt = fast\n").find("dt"), std::string::npos);
    EXPECT_NE(message("n_values = 4, x\n").find("n_values"), std::string::npos);
    EXPECT_NE(message("experiment = wave_1d\n").find("wave_1d"), std::string::npos);
    EXPECT_NE(message("coefficient = 0:1, 0.5\n").find("0.5"), std::string::npos);
    EXPECT_THROW(ExperimentConfig::defaults("heat"), PreconditionError);
}

TEST(Config, MissingFileNamesPath) {
    auto cfg = ExperimentConfig::defaults("mixed_type");
    try {
        apply_config_file(cfg, "/nonexistent/run.cfg");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/run.cfg"), std::string::npos);
    }
}

TEST(Cli, ListIsStable) {
    const auto a = invoke({"list"});
    const auto b = invoke({"list"});
    EXPECT_EQ(a.code, kExpected);
    EXPECT_EQ(a.out, b.out);
    for (const char* name : {"mixed_type", "kelvin_voigt", "singular_perturbation", "commutator_counterexample",
                             "compactness_counterexample"})
        EXPECT_NE(a.out.find(name), std::string::npos) << name;
}

TEST(Cli, UsageErrors) {
    const auto missing = invoke({"run", "mixed_type", "--config", "/nonexistent/run.cfg"});
    EXPECT_EQ(missing.code, kUsageError);
    EXPECT_NE(missing.err.find("/nonexistent/run.cfg"), std::string::npos);
    EXPECT_EQ(missing.err.find('\n'), missing.err.size() - 1);

    const auto unknown = invoke({"run", "heat"});
    EXPECT_EQ(unknown.code, kUsageError);
    EXPECT_NE(unknown.err.find("heat"), std::string::npos);

    EXPECT_EQ(invoke({"run", "mixed_type", "--set", "colour=red"}).code, kUsageError);
    EXPECT_EQ(invoke({"run", "mixed_type", "--set", "N"}).code, kUsageError);
    EXPECT_EQ(invoke({"run", "mixed_type", "--set", "N=100"}).code, kUsageError);
    EXPECT_EQ(invoke({}).code, kUsageError);
    EXPECT_EQ(invoke({"bogus"}).code, kUsageError);
    EXPECT_EQ(invoke({"run"}).code, kUsageError);
}

TEST(Cli, CompactnessCounterexampleWritesReports) {
    const auto dir = scratch("compactness");
    const auto r = invoke({"run", "compactness_counterexample", "--out", dir.string()});
    EXPECT_EQ(r.code, kExpected) << r.err;
    EXPECT_NE(r.out.find("refutes"), std::string::npos);
    for (const char* f : {"report.json", "report.csv", "summary.txt"}) EXPECT_TRUE(fs::exists(dir / f)) << f;

    const std::string csv = slurp(dir / "report.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "experiment,n,test_fn_index,pairing_error,oracle_gap");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 4 * 8);

    const auto json = nlohmann::json::parse(slurp(dir / "report.json"));
    EXPECT_EQ(json["name"], "compactness_counterexample");
    EXPECT_EQ(json["verdict"], "refutes");
    EXPECT_EQ(json["n_values"].size(), 4u);
    EXPECT_EQ(json["pairing_errors"].size(), 4u);
    EXPECT_TRUE(json.contains("params"));
    EXPECT_TRUE(json.contains("oracle_values"));
    EXPECT_TRUE(json.contains("fitted_rate"));

    const auto dir2 = scratch("compactness_again");
    EXPECT_EQ(invoke({"run", "compactness_counterexample", "--out", dir2.string()}).code, kExpected);
    EXPECT_EQ(slurp(dir2 / "report.csv"), csv);
}

TEST(Cli, MixedTypeWithShippedConfig) {
    const auto dir = scratch("mixed_type");
    const auto r = invoke({"run", "mixed_type", "--config", config_path("mixed_type"), "--out", dir.string()});
    EXPECT_EQ(r.code, kExpected) << r.err;
    EXPECT_EQ(nlohmann::json::parse(slurp(dir / "report.json"))["verdict"], "confirms");
}

TEST(Cli, UnexpectedVerdictExitCode) {
    // One ladder member cannot establish a decay, so the verdict is inconclusive.
    const auto dir = scratch("single");
    const auto r = invoke({"run", "mixed_type", "--out", dir.string(), "--set", "n_values=4", "N=32", "T=1",
                           "dt=0.03125"});
    EXPECT_EQ(r.code, kUnexpectedVerdict) << r.err;
    EXPECT_NE(r.out.find("inconclusive"), std::string::npos);
}

TEST(Cli, OverridesReachTheReport) {
    const auto dir = scratch("overrides");
    const auto r = invoke({"run", "compactness_counterexample", "--out", dir.string(), "--set", "n_values=8,16",
                           "N=64"});
    EXPECT_EQ(r.code, kExpected) << r.err;
    const auto json = nlohmann::json::parse(slurp(dir / "report.json"));
    EXPECT_EQ(json["n_values"], nlohmann::json({8.0, 16.0}));
}

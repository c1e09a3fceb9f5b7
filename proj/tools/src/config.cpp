#include "evoconv_cli/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace evoconv::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw ConfigError("key '" + key + "': '" + text + "' is not a number");
    return v;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    std::uint64_t v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw ConfigError("key '" + key + "': '" + text + "' is not a non-negative integer");
    return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(parse_double(key, item));
    if (out.empty()) throw ConfigError("key '" + key + "': expected a comma-separated list of numbers");
    return out;
}

std::string format_list(const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + format_double(xs[i]);
    return s;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(const std::string& experiment) {
    ExperimentConfig cfg;
    cfg.settings = default_settings(experiment);
    cfg.out_dir = "results/" + experiment;
    return cfg;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    const auto& x = a.settings;
    const auto& y = b.settings;
    return x.experiment == y.experiment && x.nu == y.nu && x.dt == y.dt && x.T == y.T && x.N == y.N &&
           x.ladder == y.ladder && x.coefficient == y.coefficient && x.kernel_file == y.kernel_file &&
           x.seed == y.seed && x.series_order == y.series_order && x.lambda == y.lambda && x.threads == y.threads &&
           a.out_dir == b.out_dir;
}

void set_value(ExperimentConfig& cfg, const std::string& key, const std::string& raw) {
    auto& s = cfg.settings;
    const std::string value = trim(raw);
    if (key == "experiment") {
        if (value != s.experiment)
            throw ConfigError("config names experiment '" + value + "' but the command runs '" + s.experiment + "'");
    } else if (key == "nu") {
        s.nu = parse_double(key, value);
    } else if (key == "dt") {
        s.dt = parse_double(key, value);
    } else if (key == "T") {
        s.T = parse_double(key, value);
    } else if (key == "N") {
        s.N = parse_unsigned(key, value);
    } else if (key == "n_values" || key == "eps_values" || key == "ladder") {
        s.ladder = parse_list(key, value);
    } else if (key == "coefficient") {
        if (value != "preset" && value != "constant") Piecewise::parse(value);
        s.coefficient = value;
    } else if (key == "kernel_file") {
        s.kernel_file = value;
    } else if (key == "seed") {
        s.seed = parse_unsigned(key, value);
    } else if (key == "series_order") {
        s.series_order = parse_unsigned(key, value);
    } else if (key == "lambda") {
        s.lambda = parse_double(key, value);
    } else if (key == "threads") {
        s.threads = parse_unsigned(key, value);
    } else if (key == "out") {
        cfg.out_dir = value;
    } else {
        throw ConfigError("unknown key '" + key +
                          "'; valid keys: experiment nu dt T N n_values eps_values coefficient kernel_file seed "
                          "series_order lambda threads out");
    }
}

void apply_config_text(ExperimentConfig& cfg, const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value', got '" + trim(line) +
                              "'");
        try {
            set_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const Error& e) {
            throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    apply_config_text(cfg, text.str(), path);
}

std::string serialize(const ExperimentConfig& cfg) {
    const auto& s = cfg.settings;
    std::ostringstream out;
    out << "experiment = " << s.experiment << "\n"
        << "nu = " << format_double(s.nu) << "\n"
        << "dt = " << format_double(s.dt) << "\n"
        << "T = " << format_double(s.T) << "\n"
        << "N = " << s.N << "\n"
        << (s.experiment == "singular_perturbation" ? "eps_values" : "n_values") << " = " << format_list(s.ladder)
        << "\n"
        << "coefficient = " << s.coefficient << "\n"
        << "kernel_file = " << s.kernel_file << "\n"
        << "seed = " << s.seed << "\n"
        << "series_order = " << s.series_order << "\n"
        << "lambda = " << format_double(s.lambda) << "\n"
        << "threads = " << s.threads << "\n"
        << "out = " << cfg.out_dir << "\n";
    return out.str();
}

ExperimentConfig parse_config(const std::string& experiment, const std::string& text) {
    ExperimentConfig cfg = ExperimentConfig::defaults(experiment);
    apply_config_text(cfg, text);
    return cfg;
}

}  // namespace evoconv::cli

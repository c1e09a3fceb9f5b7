#pragma once

#include <string>
#include <vector>

#include "evoconv/gconv.hpp"

namespace evoconv::cli {

/// Malformed configuration text or an unknown key.
class ConfigError : public Error {
public:
    using Error::Error;
};

struct ExperimentConfig {
    ExperimentSettings settings;
    std::string out_dir;

    /// Default settings of `experiment` writing to results/<experiment>.
    static ExperimentConfig defaults(const std::string& experiment);
};

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// Sets one key. Accepts n_values and eps_values as aliases for the ladder.
void set_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Applies "key = value" lines on top of `cfg`. '#' starts a comment; lists are comma separated.
void apply_config_text(ExperimentConfig& cfg, const std::string& text, const std::string& source = "<config>");

/// Reads a config file; throws ConfigError naming the path when it cannot be read.
void apply_config_file(ExperimentConfig& cfg, const std::string& path);

/// Every key, one per line, in a form apply_config_text reads back bit-exactly.
std::string serialize(const ExperimentConfig& cfg);

ExperimentConfig parse_config(const std::string& experiment, const std::string& text);

}  // namespace evoconv::cli

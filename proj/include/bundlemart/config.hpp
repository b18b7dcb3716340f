#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bundlemart {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat TOML subset: `key = value` lines with strings, integers, floats, booleans and (possibly
/// multi-line) arrays of those; `#` comments. Tables are rejected. Throws ConfigError with a line number.
nlohmann::json parse_toml(const std::string& text);

std::vector<std::string> experiment_names();

struct ExperimentConfig {
    std::string experiment = "bm-check";
    /// Empty selects the experiment's default model.
    std::string model;
    double dt = 1e-2;
    double horizon = 1.0;
    int n_paths = 1000;
    std::uint64_t seed = 1;
    double fd_step = 1e-3;
    double resolution = 0.02;
    /// Unset: 2 sqrt(dim dt).
    std::optional<double> merge_radius;
    std::string output_dir = "bundlemart-out";
    /// 0: BUNDLEMART_THREADS or hardware concurrency.
    int threads = 0;
    std::string method = "reflection";
    std::string scheme = "euler";
    /// Start point in the first chart; empty selects the experiment's default.
    std::vector<double> x0;
    std::vector<double> y0;
    /// Section family parameters (scan coefficients, Hopf |xi| values); empty selects defaults.
    std::vector<double> family;
    int pairs = 0;

    std::string resolved_model() const;
    nlohmann::json to_json() const;
};

std::string default_model(const std::string& experiment);

struct Diagnostic {
    std::string field;
    std::string message;
};

struct ParsedConfig {
    ExperimentConfig config;
    std::vector<Diagnostic> diagnostics;
};

/// Reads known keys, reporting unknown keys and type mismatches; never throws on content.
ParsedConfig config_from_json(const nlohmann::json& j);
/// TOML text to config; syntax errors become diagnostics.
ParsedConfig parse_config(const std::string& toml_text);

/// Range and compatibility checks (experiment and model known, numeric fields positive, ...).
std::vector<Diagnostic> validate(const ExperimentConfig& config);

}  // namespace bundlemart

#pragma once

#include "bundlemart/config.hpp"
#include "bundlemart/paths.hpp"

#include <map>
#include <string>
#include <vector>

namespace bundlemart {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

enum class RunStatus { Completed, ConfigError, NumericalFailure };
std::string to_string(RunStatus s);
/// 0 completed (whatever the verdicts), 2 configuration error, 3 numerical failure.
int exit_code(RunStatus s);

struct VerdictRecord {
    std::string label;
    DriftVerdict verdict;
};

/// A measured value against its oracle. relation: "near" (|value - expected| <= tolerance),
/// "at_least" (value >= expected), "at_most" (value <= expected).
struct OracleCheck {
    std::string name;
    double value = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    std::string relation = "near";
    bool pass = false;
};

OracleCheck near_check(std::string name, double value, double expected, double tolerance);
OracleCheck at_least_check(std::string name, double value, double bound);
OracleCheck at_most_check(std::string name, double value, double bound);

struct RunReport {
    ExperimentConfig config;
    RunStatus status = RunStatus::Completed;
    std::string error;
    std::vector<VerdictRecord> verdicts;
    std::vector<OracleCheck> oracles;
    /// Experiment-specific rows (scan tables, coupling probabilities, ...).
    nlohmann::json tables = nlohmann::json::object();
    /// CSV file name -> contents.
    std::map<std::string, std::string> files;
    double wall_time = 0.0;

    bool oracles_pass() const;
    /// verdicts, oracles and tables only: identical across reruns of one config.
    nlohmann::json results_json() const;
    nlohmann::json to_json() const;
};

/// Runs the configured experiment. Never throws: invalid configurations and numerical failures are
/// reported through status and error, with whatever results were produced before the failure.
RunReport run(const ExperimentConfig& config);

/// Writes report.json and the CSV files into config.output_dir; returns the written paths.
std::vector<std::string> write_outputs(const RunReport& report);

}  // namespace bundlemart

#pragma once

// Experiment configuration: a key = value text format with dotted sections
// (scenario.*, filter.*, baseline.*, mc.*, output.*). Unset keys take their
// defaults; unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mpslam/filter.hpp"
#include "mpslam/simulator.hpp"

namespace mpslam {

struct McConfig {
    int runs = 1;
    std::uint64_t base_seed = 1;
    int threads = 1;
};

struct OutputConfig {
    std::filesystem::path dir = "results";
    bool csv = true;
    bool json = true;
    bool per_run = true;
    bool trace = false;
};

struct ExperimentConfig {
    ScenarioSpec scenario;
    FilterConfig filter;  ///< noise, detection and clutter mirror the scenario
    PriorStds prior;
    bool filter_enabled = true;
    std::vector<int> particles;
    int baseline_runs = 0;  ///< 0: same as mc.runs
    McConfig mc;
    OutputConfig output;
    /// Effective key/value pairs including defaults.
    std::map<std::string, std::string> resolved;
};

/// Environment variable that, when set, replaces the directory relative
/// output paths are resolved against.
inline constexpr const char* kOutputRootEnv = "MPSLAM_OUTPUT_ROOT";

/// Every accepted key with its default value.
const std::map<std::string, std::string>& config_defaults();

/// Parses and validates. Throws ConfigError (syntax, unknown keys, bad
/// values), DomainError (out-of-range parameters) or GeometryError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Builds a configuration from key/value overrides on top of the defaults.
ExperimentConfig make_config(const std::map<std::string, std::string>& overrides);

/// Output directory after applying the output-root override.
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg);

/// The resolved configuration in the input format.
std::string format_config(const ExperimentConfig& cfg);

/// Scenario of realization r (seed base_seed + r).
ScenarioSpec scenario_for_run(const ExperimentConfig& cfg, int r);

}  // namespace mpslam

#pragma once

// Monte-Carlo orchestration of the sigma-point filter and the particle
// baselines, aggregation of metrics and persistence of results.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mpslam/config.hpp"
#include "mpslam/metrics.hpp"

namespace mpslam {

inline constexpr int kSummarySchemaVersion = 1;

struct RunOutput {
    RunRecord record;
    std::string trace_csv;  ///< filled when output.trace is set
};

/// One realization of the sigma-point filter (particles == 0) or of the
/// particle baseline. Numerical failures mark the record failed instead of
/// throwing.
RunOutput run_realization(const ExperimentConfig& cfg, int r, int particles, bool trace = false);

struct AlgorithmResult {
    std::string name;  ///< "sp" or "pf<N>"
    int particles = 0;
    std::vector<RunOutput> runs;
};

struct AlgorithmSummary {
    std::string name;
    int runs = 0;
    int failed = 0;
    int lost = 0;
    double lost_rate = 0.0;
    double mean_step_seconds = 0.0;
    double final_error_below_10cm = 0.0;  ///< fraction of all runs
    double mean_ospa_last20 = 0.0;        ///< against all VAs, non-lost runs
    double mean_detected_last20 = 0.0;    ///< true VAs matched within 1 m
    std::optional<double> olos_rmse_median;
    RmseSeries rmse;
    std::vector<double> ospa_all;
    std::vector<double> ospa_visible;
    std::vector<double> cardinality_all;
    std::vector<double> cardinality_visible;
};

std::string algorithm_name(int particles);

/// Runs every configured algorithm over its realizations on mc.threads
/// workers. Results are ordered by realization index regardless of threads.
std::vector<AlgorithmResult> run_experiment(const ExperimentConfig& cfg);

AlgorithmSummary summarize(const AlgorithmResult& result);

/// Writes per-run CSVs, aggregate metric CSVs, runtime.csv and summary.json
/// into `dir` according to cfg.output.
void write_results(const ExperimentConfig& cfg, const std::vector<AlgorithmResult>& results,
                   const std::filesystem::path& dir);

/// Writes measurements.csv (all realizations, with a leading run column) and
/// trajectory.csv for the configured scenario.
void write_simulation(const ExperimentConfig& cfg, const std::filesystem::path& dir);

}  // namespace mpslam

#pragma once

// Evaluation: agent RMSE and error eCDF, OSPA between estimated and true VA
// maps, cardinality error and lost-track bookkeeping.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mpslam/geometry.hpp"
#include "mpslam/state.hpp"

namespace mpslam {

struct StepRecord {
    AgentState truth;
    AgentState estimate;
    std::vector<Point> map;           ///< declared VAs (PA excluded)
    std::vector<Point> visible_vas;   ///< true VAs visible at this step
    std::vector<Point> all_vas;       ///< every true first-order VA
    bool los = true;                  ///< PA visible at this step
    double seconds = 0.0;             ///< wall-clock duration of the filter step

    [[nodiscard]] double position_error() const { return (estimate.position - truth.position).norm(); }
};

struct RunRecord {
    std::uint64_t seed = 0;
    std::vector<StepRecord> steps;
    bool failed = false;   ///< numerical failure or weight collapse
    std::string failure;
    bool lost = false;
};

/// Final-step error above which a realization counts as a lost track.
inline constexpr double kLostTrackThreshold = 1.0;

/// Marks the run lost when it failed or its final error exceeds `threshold`.
bool is_lost(const RunRecord& run, double threshold = kLostTrackThreshold);

/// Minimum total cost of assigning every row to a distinct column of a
/// rows <= cols cost matrix. `assignment[i]` receives row i's column.
double optimal_assignment(const Eigen::MatrixXd& cost, std::vector<int>* assignment = nullptr);

/// OSPA distance with cutoff c and order p; two empty sets give 0.
double ospa(const std::vector<Point>& x, const std::vector<Point>& y, double c = 5.0, double p = 2.0);

/// Number of points of `truth` matched to an estimate within `radius` under
/// the cost-optimal assignment.
int matched_count(const std::vector<Point>& estimate, const std::vector<Point>& truth, double radius);

struct RmseSeries {
    std::vector<double> values;  ///< per step
    int runs_used = 0;
    int runs_excluded = 0;       ///< lost or failed
};

/// Per-step RMSE of the position error over runs; lost runs are excluded.
RmseSeries rmse(const std::vector<RunRecord>& records);

/// Right-continuous empirical CDF.
class Ecdf {
public:
    explicit Ecdf(std::vector<double> samples);

    /// Fraction of samples <= threshold.
    [[nodiscard]] double operator()(double threshold) const;
    [[nodiscard]] const std::vector<double>& sorted() const { return sorted_; }

private:
    std::vector<double> sorted_;
};

/// Throws DomainError on an empty sample.
Ecdf ecdf(std::vector<double> errors);

int cardinality_error(const std::vector<Point>& map, const std::vector<Point>& truth);

enum class MapTruth { kVisible, kAll };

/// Per-step mean over runs; lost runs are excluded.
std::vector<double> mean_ospa(const std::vector<RunRecord>& records, MapTruth truth, double c = 5.0, double p = 2.0);
std::vector<double> mean_cardinality_error(const std::vector<RunRecord>& records, MapTruth truth);

}  // namespace mpslam

#include "mpslam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mpslam/errors.hpp"

namespace mpslam {

namespace {

constexpr int kExhaustiveLimit = 6;

double exhaustive_assignment(const Eigen::MatrixXd& cost, std::vector<int>* assignment) {
    const int rows = static_cast<int>(cost.rows());
    const int cols = static_cast<int>(cost.cols());
    std::vector<int> perm(static_cast<std::size_t>(cols));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_perm = perm;
    do {
        double total = 0.0;
        for (int i = 0; i < rows; ++i) total += cost(i, perm[static_cast<std::size_t>(i)]);
        if (total < best) {
            best = total;
            best_perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (assignment) assignment->assign(best_perm.begin(), best_perm.begin() + rows);
    return best;
}

// Shortest augmenting path Hungarian method on a rows <= cols matrix.
double hungarian(const Eigen::MatrixXd& cost, std::vector<int>* assignment) {
    const int n = static_cast<int>(cost.rows());
    const int m = static_cast<int>(cost.cols());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= m; ++j)
        if (p[j] != 0) row_to_col[static_cast<std::size_t>(p[j] - 1)] = j - 1;
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += cost(i, row_to_col[static_cast<std::size_t>(i)]);
    if (assignment) *assignment = std::move(row_to_col);
    return total;
}

Eigen::MatrixXd distance_matrix(const std::vector<Point>& x, const std::vector<Point>& y) {
    Eigen::MatrixXd d(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < y.size(); ++j)
            d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (x[i] - y[j]).norm();
    return d;
}

}  // namespace

bool is_lost(const RunRecord& run, double threshold) {
    if (run.failed || run.steps.empty()) return true;
    return !(run.steps.back().position_error() <= threshold);
}

double optimal_assignment(const Eigen::MatrixXd& cost, std::vector<int>* assignment) {
    if (cost.rows() > cost.cols()) throw ShapeError("optimal_assignment: more rows than columns");
    if (cost.rows() == 0) {
        if (assignment) assignment->clear();
        return 0.0;
    }
    if (cost.cols() <= kExhaustiveLimit) return exhaustive_assignment(cost, assignment);
    return hungarian(cost, assignment);
}

double ospa(const std::vector<Point>& x, const std::vector<Point>& y, double c, double p) {
    if (!(c > 0.0) || !(p >= 1.0)) throw DomainError("ospa: requires c > 0 and p >= 1");
    const std::vector<Point>& small = x.size() <= y.size() ? x : y;
    const std::vector<Point>& large = x.size() <= y.size() ? y : x;
    const std::size_t m = small.size();
    const std::size_t n = large.size();
    if (n == 0) return 0.0;
    const Eigen::MatrixXd cost = distance_matrix(small, large).cwiseMin(c).array().pow(p).matrix();
    const double total = optimal_assignment(cost) + std::pow(c, p) * static_cast<double>(n - m);
    return std::pow(total / static_cast<double>(n), 1.0 / p);
}

int matched_count(const std::vector<Point>& estimate, const std::vector<Point>& truth, double radius) {
    if (estimate.empty() || truth.empty()) return 0;
    const bool est_rows = estimate.size() <= truth.size();
    const Eigen::MatrixXd d = est_rows ? distance_matrix(estimate, truth) : distance_matrix(truth, estimate);
    // Cap distances so that far pairs do not distort the matching of near ones.
    const Eigen::MatrixXd cost = d.cwiseMin(2.0 * radius).array().square().matrix();
    std::vector<int> assign;
    optimal_assignment(cost, &assign);
    int count = 0;
    for (std::size_t i = 0; i < assign.size(); ++i)
        if (d(static_cast<Eigen::Index>(i), assign[i]) <= radius) ++count;
    return count;
}

RmseSeries rmse(const std::vector<RunRecord>& records) {
    RmseSeries out;
    std::vector<double> sum;
    for (const auto& run : records) {
        if (run.lost || run.failed) {
            ++out.runs_excluded;
            continue;
        }
        if (sum.empty()) sum.assign(run.steps.size(), 0.0);
        if (run.steps.size() != sum.size()) throw ShapeError("rmse: runs have different lengths");
        for (std::size_t n = 0; n < run.steps.size(); ++n) {
            const double e = run.steps[n].position_error();
            sum[n] += e * e;
        }
        ++out.runs_used;
    }
    out.values.resize(sum.size());
    for (std::size_t n = 0; n < sum.size(); ++n) out.values[n] = std::sqrt(sum[n] / out.runs_used);
    return out;
}

Ecdf::Ecdf(std::vector<double> samples) : sorted_(std::move(samples)) {
    if (sorted_.empty()) throw DomainError("ecdf: empty sample");
    std::sort(sorted_.begin(), sorted_.end());
}

double Ecdf::operator()(double threshold) const {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), threshold);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

Ecdf ecdf(std::vector<double> errors) { return Ecdf(std::move(errors)); }

int cardinality_error(const std::vector<Point>& map, const std::vector<Point>& truth) {
    return std::abs(static_cast<int>(map.size()) - static_cast<int>(truth.size()));
}

namespace {

template <class F>
std::vector<double> mean_over_runs(const std::vector<RunRecord>& records, F&& per_step) {
    std::vector<double> sum;
    int used = 0;
    for (const auto& run : records) {
        if (run.lost || run.failed) continue;
        if (sum.empty()) sum.assign(run.steps.size(), 0.0);
        if (run.steps.size() != sum.size()) throw ShapeError("metrics: runs have different lengths");
        for (std::size_t n = 0; n < run.steps.size(); ++n) sum[n] += per_step(run.steps[n]);
        ++used;
    }
    for (auto& s : sum) s /= used;
    return sum;
}

}  // namespace

std::vector<double> mean_ospa(const std::vector<RunRecord>& records, MapTruth truth, double c, double p) {
    return mean_over_runs(records, [&](const StepRecord& s) {
        return ospa(s.map, truth == MapTruth::kVisible ? s.visible_vas : s.all_vas, c, p);
    });
}

std::vector<double> mean_cardinality_error(const std::vector<RunRecord>& records, MapTruth truth) {
    return mean_over_runs(records, [&](const StepRecord& s) {
        return static_cast<double>(cardinality_error(s.map, truth == MapTruth::kVisible ? s.visible_vas : s.all_vas));
    });
}

}  // namespace mpslam

#pragma once

// Gaussian-belief arithmetic shared by all message computations: sigma
// points, the unscented transform, mixture collapsing, Gaussian products and
// Kalman prediction/update.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mpslam/errors.hpp"

namespace mpslam {

/// Mean and covariance of a Gaussian approximation of some PDF.
struct GaussianBelief {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    GaussianBelief() = default;
    /// Throws ShapeError when the dimensions disagree.
    GaussianBelief(Eigen::VectorXd mean, Eigen::MatrixXd cov);

    [[nodiscard]] Eigen::Index dim() const { return mean.size(); }

    /// Symmetric within `tol` (relative) and eigenvalues >= -tol * trace.
    [[nodiscard]] bool satisfies_invariants(double tol = 1e-9) const;
};

/// Scaled unscented transform parameters. An unset kappa means 3 - dim.
struct UtParams {
    double alpha = 1.0;
    double beta = 2.0;
    std::optional<double> kappa;

    [[nodiscard]] double kappa_for(Eigen::Index dim) const {
        return kappa ? *kappa : 3.0 - static_cast<double>(dim);
    }
    [[nodiscard]] double lambda_for(Eigen::Index dim) const {
        const double n = static_cast<double>(dim);
        return alpha * alpha * (n + kappa_for(dim)) - n;
    }
};

/// 2n+1 sigma points stored column-wise; column 0 is the source mean.
struct SigmaPointSet {
    Eigen::MatrixXd points;
    Eigen::VectorXd mean_weights;
    Eigen::VectorXd cov_weights;

    [[nodiscard]] Eigen::Index size() const { return points.cols(); }
    [[nodiscard]] Eigen::Index dim() const { return points.rows(); }
};

struct UtResult {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    Eigen::MatrixXd cross;  ///< source x output
};

/// Bit i set means output component i is an angle.
using AngleMask = std::uint32_t;

struct WeightedGaussian {
    double weight;
    GaussianBelief belief;
};

/// Lower-triangular factor L with L L^T = cov. Zero pivots are tolerated so
/// that positive semi-definite block-diagonal covariances factor blockwise.
/// Throws FactorizationError on a pivot below -tol * trace.
Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& cov, double tol = 1e-9);

void symmetrize(Eigen::MatrixXd& m);

/// Symmetrizes and, if the matrix is not positive definite, clips negative
/// eigenvalues to a jitter of 1e-12 * trace.
void repair_psd(Eigen::MatrixXd& m);

SigmaPointSet sigma_points(const GaussianBelief& g, const UtParams& params = {});

/// Unscented transform of precomputed sigma points. `f` maps a column of
/// `sp.points` to an output vector; every output must have the same size.
template <class F>
UtResult unscented_transform(const SigmaPointSet& sp, const Eigen::VectorXd& source_mean, F&& f) {
    const Eigen::Index count = sp.size();
    Eigen::VectorXd first = f(sp.points.col(0));
    const Eigen::Index out_dim = first.size();
    Eigen::MatrixXd outputs(out_dim, count);
    outputs.col(0) = first;
    for (Eigen::Index i = 1; i < count; ++i) {
        Eigen::VectorXd t = f(sp.points.col(i));
        if (t.size() != out_dim) throw ShapeError("unscented_transform: inconsistent output dimension");
        outputs.col(i) = t;
    }
    UtResult r;
    r.mean = outputs * sp.mean_weights;
    const Eigen::MatrixXd dt = outputs.colwise() - r.mean;
    const Eigen::MatrixXd ds = sp.points.colwise() - source_mean;
    r.cov = dt * sp.cov_weights.asDiagonal() * dt.transpose();
    r.cross = ds * sp.cov_weights.asDiagonal() * dt.transpose();
    symmetrize(r.cov);
    return r;
}

template <class F>
UtResult unscented_transform(const GaussianBelief& g, F&& f, const UtParams& params = {}) {
    return unscented_transform(sigma_points(g, params), g.mean, std::forward<F>(f));
}

/// Collapses a Gaussian mixture to one Gaussian with identical first two
/// moments. Weights are normalized internally.
GaussianBelief moment_match(std::span<const WeightedGaussian> components);

/// Normalized product of Gaussian densities (precisions add).
GaussianBelief gaussian_product(std::span<const GaussianBelief> factors);

GaussianBelief kf_predict(const GaussianBelief& g, const Eigen::MatrixXd& transition,
                          const Eigen::MatrixXd& process_noise);

double log_gaussian_density(const Eigen::VectorXd& residual, const Eigen::MatrixXd& cov);
double gaussian_density(const Eigen::VectorXd& residual, const Eigen::MatrixXd& cov);

struct StackedPosterior {
    GaussianBelief posterior;
    double evidence = 0.0;
};

/// Kalman update of a (stacked) state from an unscented transform of its
/// measurement function. The gain and posterior covariance do not depend on
/// the measurement value, so one object serves every candidate measurement.
class InnovationUpdate {
public:
    InnovationUpdate(const GaussianBelief& prior, const Eigen::MatrixXd& meas_cov, const UtResult& ut,
                     AngleMask angles = 0);

    /// z minus the predicted measurement, angle components wrapped.
    [[nodiscard]] Eigen::VectorXd innovation(const Eigen::VectorXd& z) const;
    [[nodiscard]] double log_evidence(const Eigen::VectorXd& z) const;
    [[nodiscard]] double evidence(const Eigen::VectorXd& z) const;
    [[nodiscard]] Eigen::VectorXd posterior_mean(const Eigen::VectorXd& z) const;
    [[nodiscard]] const Eigen::MatrixXd& posterior_cov() const { return post_cov_; }
    [[nodiscard]] StackedPosterior apply(const Eigen::VectorXd& z) const;

    [[nodiscard]] const Eigen::MatrixXd& innovation_cov() const { return innovation_cov_; }
    [[nodiscard]] const Eigen::MatrixXd& gain() const { return gain_; }

private:
    Eigen::VectorXd prior_mean_;
    Eigen::VectorXd predicted_;
    Eigen::MatrixXd innovation_cov_;
    Eigen::LLT<Eigen::MatrixXd> innovation_llt_;
    Eigen::MatrixXd gain_;
    Eigen::MatrixXd post_cov_;
    double log_norm_ = 0.0;
    AngleMask angles_ = 0;
};

/// One-shot form of InnovationUpdate: posterior and the evidence
/// N(z; predicted mean, predicted cov + meas_cov).
StackedPosterior kf_update_stacked(const GaussianBelief& joint, const Eigen::VectorXd& z,
                                   const Eigen::MatrixXd& meas_cov, const UtResult& ut, AngleMask angles = 0);

}  // namespace mpslam

#include "mpslam/gaussmath.hpp"

#include <cmath>
#include <numbers>

#include "mpslam/angles.hpp"

namespace mpslam {

GaussianBelief::GaussianBelief(Eigen::VectorXd m, Eigen::MatrixXd c) : mean(std::move(m)), cov(std::move(c)) {
    if (cov.rows() != mean.size() || cov.cols() != mean.size())
        throw ShapeError("GaussianBelief: mean has dimension " + std::to_string(mean.size()) +
                         " but covariance is " + std::to_string(cov.rows()) + "x" + std::to_string(cov.cols()));
}

bool GaussianBelief::satisfies_invariants(double tol) const {
    if (cov.rows() != mean.size() || cov.cols() != mean.size()) return false;
    if (!mean.allFinite() || !cov.allFinite()) return false;
    const double scale = std::max(cov.cwiseAbs().maxCoeff(), 1e-300);
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > tol * scale) return false;
    if (mean.size() == 0) return true;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (cov + cov.transpose()),
                                                             Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff() >= -tol * std::max(cov.trace(), 1e-300);
}

void symmetrize(Eigen::MatrixXd& m) {
    m = 0.5 * (m + m.transpose()).eval();
}

void repair_psd(Eigen::MatrixXd& m) {
    symmetrize(m);
    if (m.size() == 0) return;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) return;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    Eigen::VectorXd values = eig.eigenvalues();
    if (values.minCoeff() >= 0.0) return;
    const double trace = values.cwiseMax(0.0).sum();
    const double jitter = 1e-12 * (trace > 0.0 ? trace : 1.0);
    for (Eigen::Index i = 0; i < values.size(); ++i)
        if (values[i] < 0.0) values[i] = jitter;
    m = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
    symmetrize(m);
}

Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& cov, double tol) {
    const Eigen::Index n = cov.rows();
    if (cov.cols() != n) throw ShapeError("psd_cholesky: matrix is not square");
    if (!cov.allFinite()) throw FactorizationError("psd_cholesky: non-finite covariance");
    const double trace = cov.diagonal().cwiseAbs().sum();
    const double zero_pivot = 1e-15 * (trace > 0.0 ? trace : 1.0);
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double d = cov(j, j) - l.row(j).head(j).squaredNorm();
        if (d > zero_pivot) {
            const double ljj = std::sqrt(d);
            l(j, j) = ljj;
            for (Eigen::Index i = j + 1; i < n; ++i)
                l(i, j) = (cov(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
        } else if (d < -tol * (trace > 0.0 ? trace : 1.0)) {
            throw FactorizationError("psd_cholesky: covariance is not positive semi-definite (pivot " +
                                     std::to_string(d) + ")");
        }
    }
    return l;
}

SigmaPointSet sigma_points(const GaussianBelief& g, const UtParams& params) {
    const Eigen::Index n = g.dim();
    const double lambda = params.lambda_for(n);
    const double spread = static_cast<double>(n) + lambda;
    if (!(spread > 0.0)) throw DomainError("sigma_points: n + lambda must be positive");
    const Eigen::MatrixXd l = psd_cholesky(g.cov);
    const double scale = std::sqrt(spread);

    SigmaPointSet sp;
    sp.points.resize(n, 2 * n + 1);
    sp.points.col(0) = g.mean;
    for (Eigen::Index i = 0; i < n; ++i) {
        sp.points.col(1 + i) = g.mean + scale * l.col(i);
        sp.points.col(1 + n + i) = g.mean - scale * l.col(i);
    }
    sp.mean_weights = Eigen::VectorXd::Constant(2 * n + 1, 0.5 / spread);
    sp.cov_weights = sp.mean_weights;
    sp.mean_weights[0] = lambda / spread;
    sp.cov_weights[0] = lambda / spread + (1.0 - params.alpha * params.alpha + params.beta);
    return sp;
}

GaussianBelief moment_match(std::span<const WeightedGaussian> components) {
    if (components.empty()) throw DegenerateMixtureError("moment_match: empty mixture");
    const Eigen::Index n = components.front().belief.dim();
    double total = 0.0;
    for (const auto& c : components) {
        if (c.belief.dim() != n) throw ShapeError("moment_match: components differ in dimension");
        if (c.weight < 0.0 || !std::isfinite(c.weight)) throw DomainError("moment_match: invalid weight");
        total += c.weight;
    }
    if (!(total > 0.0)) throw DegenerateMixtureError("moment_match: all weights are zero");
    if (components.size() == 1) return components.front().belief;

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (const auto& c : components) mean += (c.weight / total) * c.belief.mean;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (const auto& c : components) {
        if (c.weight == 0.0) continue;
        const Eigen::VectorXd d = c.belief.mean - mean;
        cov += (c.weight / total) * (c.belief.cov + d * d.transpose());
    }
    symmetrize(cov);
    return {std::move(mean), std::move(cov)};
}

GaussianBelief gaussian_product(std::span<const GaussianBelief> factors) {
    if (factors.empty()) throw ShapeError("gaussian_product: no factors");
    const Eigen::Index n = factors.front().dim();
    Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd info = Eigen::VectorXd::Zero(n);
    for (const auto& f : factors) {
        if (f.dim() != n) throw ShapeError("gaussian_product: factors differ in dimension");
        Eigen::LLT<Eigen::MatrixXd> llt(f.cov);
        if (llt.info() != Eigen::Success) throw FactorizationError("gaussian_product: singular factor covariance");
        const Eigen::MatrixXd p = llt.solve(Eigen::MatrixXd::Identity(n, n));
        precision += p;
        info += p * f.mean;
    }
    symmetrize(precision);
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) throw FactorizationError("gaussian_product: singular total precision");
    Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(n, n));
    symmetrize(cov);
    Eigen::VectorXd mean = llt.solve(info);
    return {std::move(mean), std::move(cov)};
}

GaussianBelief kf_predict(const GaussianBelief& g, const Eigen::MatrixXd& transition,
                          const Eigen::MatrixXd& process_noise) {
    const Eigen::Index n = g.dim();
    if (transition.cols() != n || process_noise.rows() != transition.rows() ||
        process_noise.cols() != transition.rows())
        throw ShapeError("kf_predict: inconsistent dimensions");
    Eigen::MatrixXd cov = transition * g.cov * transition.transpose() + process_noise;
    symmetrize(cov);
    return {transition * g.mean, std::move(cov)};
}

double log_gaussian_density(const Eigen::VectorXd& residual, const Eigen::MatrixXd& cov) {
    if (cov.rows() != residual.size() || cov.cols() != residual.size())
        throw ShapeError("log_gaussian_density: inconsistent dimensions");
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw FactorizationError("log_gaussian_density: singular covariance");
    const Eigen::VectorXd w = llt.matrixL().solve(residual);
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return -0.5 * (w.squaredNorm() + log_det + static_cast<double>(residual.size()) * std::log(2.0 * std::numbers::pi));
}

double gaussian_density(const Eigen::VectorXd& residual, const Eigen::MatrixXd& cov) {
    return std::exp(log_gaussian_density(residual, cov));
}

InnovationUpdate::InnovationUpdate(const GaussianBelief& prior, const Eigen::MatrixXd& meas_cov,
                                   const UtResult& ut, AngleMask angles)
    : prior_mean_(prior.mean), predicted_(ut.mean), angles_(angles) {
    const Eigen::Index m = ut.mean.size();
    if (meas_cov.rows() != m || meas_cov.cols() != m || ut.cross.rows() != prior.dim() || ut.cross.cols() != m)
        throw ShapeError("InnovationUpdate: inconsistent dimensions");
    innovation_cov_ = ut.cov + meas_cov;
    symmetrize(innovation_cov_);
    innovation_llt_.compute(innovation_cov_);
    if (innovation_llt_.info() != Eigen::Success)
        throw FactorizationError("InnovationUpdate: singular innovation covariance");
    gain_ = innovation_llt_.solve(ut.cross.transpose()).transpose();
    post_cov_ = prior.cov - gain_ * innovation_cov_ * gain_.transpose();
    repair_psd(post_cov_);
    const double log_det = 2.0 * innovation_llt_.matrixLLT().diagonal().array().log().sum();
    log_norm_ = -0.5 * (log_det + static_cast<double>(m) * std::log(2.0 * std::numbers::pi));
}

Eigen::VectorXd InnovationUpdate::innovation(const Eigen::VectorXd& z) const {
    if (z.size() != predicted_.size()) throw ShapeError("InnovationUpdate: measurement dimension mismatch");
    Eigen::VectorXd r = z - predicted_;
    for (Eigen::Index i = 0; i < r.size(); ++i)
        if (angles_ & (AngleMask{1} << i)) r[i] = wrap_angle(r[i]);
    return r;
}

double InnovationUpdate::log_evidence(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd w = innovation_llt_.matrixL().solve(innovation(z));
    return log_norm_ - 0.5 * w.squaredNorm();
}

double InnovationUpdate::evidence(const Eigen::VectorXd& z) const { return std::exp(log_evidence(z)); }

Eigen::VectorXd InnovationUpdate::posterior_mean(const Eigen::VectorXd& z) const {
    return prior_mean_ + gain_ * innovation(z);
}

StackedPosterior InnovationUpdate::apply(const Eigen::VectorXd& z) const {
    return {GaussianBelief(posterior_mean(z), post_cov_), evidence(z)};
}

StackedPosterior kf_update_stacked(const GaussianBelief& joint, const Eigen::VectorXd& z,
                                   const Eigen::MatrixXd& meas_cov, const UtResult& ut, AngleMask angles) {
    return InnovationUpdate(joint, meas_cov, ut, angles).apply(z);
}

}  // namespace mpslam

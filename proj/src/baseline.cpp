#include "mpslam/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mpslam/angles.hpp"
#include "mpslam/errors.hpp"
#include "mpslam/rng.hpp"

namespace mpslam {

namespace {

constexpr std::uint64_t kPropagateStream = 0x50524F50ULL;
constexpr std::uint64_t kResampleStream = 0x52455341ULL;
constexpr std::uint64_t kSampleStream = 0x53414D50ULL;
constexpr Eigen::Index kAgentDim = AgentState::kDim;

// Per-particle association weights beta[i][m] (m >= 1) of one PBO. The PBO
// belief is pushed through the measurement function with a 2-D unscented
// transform conditioned on each particle.
Eigen::MatrixXd particle_beta(const ParticleCloud& cloud, const PboHypothesis& pbo,
                              std::span<const Measurement> measurements, const Point& pa, const FilterConfig& cfg) {
    const Eigen::Index n = cloud.size();
    const auto m_count = static_cast<Eigen::Index>(measurements.size());
    Eigen::MatrixXd beta(n, m_count);
    if (m_count == 0) return beta;
    const SigmaPointSet sp = sigma_points(pbo.belief, cfg.ut);
    const Eigen::Matrix3d meas_cov = cfg.noise.covariance();
    const double scale = pbo.existence * cfg.detection.p_detect / clutter_intensity(cfg);
    const bool reflected = !pbo.is_pa;
    const Eigen::Index count = sp.size();
    Eigen::Matrix<double, 3, Eigen::Dynamic> t(3, count);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Point p = cloud.states.col(i).head<2>();
        const double heading = cloud.states(4, i);
        for (Eigen::Index s = 0; s < count; ++s) {
            t.col(s) = predict_measurement(p, heading, sp.points.col(s), pa, reflected);
            if (s > 0) {
                t(1, s) = t(1, 0) + wrap_angle(t(1, s) - t(1, 0));
                t(2, s) = t(2, 0) + wrap_angle(t(2, s) - t(2, 0));
            }
        }
        const Eigen::Vector3d mean = t * sp.mean_weights;
        const Eigen::Matrix<double, 3, Eigen::Dynamic> d = t.colwise() - mean;
        const Eigen::Matrix3d s_cov = d * sp.cov_weights.asDiagonal() * d.transpose() + meas_cov;
        const Eigen::LLT<Eigen::Matrix3d> llt(s_cov);
        const Eigen::Matrix3d l = llt.matrixL();
        const double log_norm = -1.5 * std::log(2.0 * std::numbers::pi) - std::log(l.diagonal().prod());
        for (Eigen::Index m = 0; m < m_count; ++m) {
            Eigen::Vector3d r = measurements[static_cast<std::size_t>(m)].z - mean;
            r[1] = wrap_angle(r[1]);
            r[2] = wrap_angle(r[2]);
            const Eigen::Vector3d w = llt.matrixL().solve(r);
            beta(i, m) = scale * std::exp(log_norm - 0.5 * w.squaredNorm());
        }
    }
    return beta;
}

}  // namespace

void ParticleCloud::validate(double tol) const {
    if (states.rows() != kAgentDim || states.cols() < 1) throw ShapeError("particle cloud: expected 5 x N, N >= 1");
    if (weights.size() != states.cols()) throw ShapeError("particle cloud: weight count mismatch");
    if ((weights.array() < 0.0).any()) throw DomainError("particle cloud: negative weight");
    if (std::abs(weights.sum() - 1.0) > tol) throw DomainError("particle cloud: weights are not normalized");
}

GaussianBelief ParticleCloud::gaussian() const {
    Eigen::VectorXd mean = states * weights;
    const double c = (states.row(4).array().cos().matrix() * weights).value();
    const double s = (states.row(4).array().sin().matrix() * weights).value();
    mean[4] = std::atan2(s, c);
    Eigen::MatrixXd d = states.colwise() - mean;
    for (Eigen::Index i = 0; i < d.cols(); ++i) d(4, i) = wrap_angle(d(4, i));
    Eigen::MatrixXd cov = d * weights.asDiagonal() * d.transpose();
    repair_psd(cov);
    return {std::move(mean), std::move(cov)};
}

double effective_sample_size(const Eigen::VectorXd& weights) {
    const double sq = weights.squaredNorm();
    return sq > 0.0 ? weights.sum() * weights.sum() / sq : 0.0;
}

std::vector<int> systematic_resample(const Eigen::VectorXd& weights, double u) {
    const Eigen::Index n = weights.size();
    std::vector<int> idx(static_cast<std::size_t>(n));
    const double total = weights.sum();
    double cumulative = weights[0] / total;
    Eigen::Index j = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double target = (static_cast<double>(i) + u) / static_cast<double>(n);
        while (target > cumulative && j < n - 1) cumulative += weights[++j] / total;
        idx[static_cast<std::size_t>(i)] = static_cast<int>(j);
    }
    return idx;
}

ParticleCloud sample_cloud(const GaussianBelief& prior, int n, std::uint64_t seed) {
    if (n < 1) throw DomainError("particle count must be at least 1");
    if (prior.dim() != kAgentDim) throw ShapeError("sample_cloud: prior must be 5-dimensional");
    const Eigen::MatrixXd l = psd_cholesky(prior.cov);
    ParticleCloud cloud;
    cloud.states.resize(kAgentDim, n);
    cloud.weights = Eigen::VectorXd::Constant(n, 1.0 / n);
    for (int i = 0; i < n; ++i) {
        CounterStream rng(derive_seed({seed, kSampleStream, static_cast<std::uint64_t>(i)}));
        Eigen::VectorXd e(kAgentDim);
        for (Eigen::Index d = 0; d < kAgentDim; ++d) e[d] = rng.normal();
        cloud.states.col(i) = prior.mean + l * e;
        cloud.states(4, i) = wrap_angle(cloud.states(4, i));
    }
    return cloud;
}

void propagate(ParticleCloud& cloud, const MotionModel& motion, std::uint64_t seed) {
    const Eigen::MatrixXd l = psd_cholesky(motion.process_noise);
    cloud.states = motion.transition * cloud.states;
    Eigen::VectorXd e(kAgentDim);
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        CounterStream rng(derive_seed({seed, kPropagateStream, static_cast<std::uint64_t>(i)}));
        for (Eigen::Index d = 0; d < kAgentDim; ++d) e[d] = rng.normal();
        cloud.states.col(i) += l * e;
        cloud.states(4, i) = wrap_angle(cloud.states(4, i));
    }
}

void reweight(ParticleCloud& cloud, const Eigen::VectorXd& log_likelihood) {
    Eigen::ArrayXd logw = cloud.weights.array().log() + log_likelihood.array();
    double peak = -std::numeric_limits<double>::infinity();
    for (double v : logw)
        if (std::isfinite(v)) peak = std::max(peak, v);
    if (!std::isfinite(peak)) throw TrackLossError("all particle weights vanished");
    Eigen::ArrayXd w = (logw - peak).exp();
    for (Eigen::Index i = 0; i < w.size(); ++i)
        if (!std::isfinite(w[i])) w[i] = 0.0;
    const double sum = w.sum();
    if (!(sum > 0.0)) throw TrackLossError("all particle weights vanished");
    cloud.weights = (w / sum).matrix();
}

ParticleDiagnostics maybe_resample(ParticleCloud& cloud, std::uint64_t seed) {
    ParticleDiagnostics diag;
    diag.ess = effective_sample_size(cloud.weights);
    const auto n = static_cast<double>(cloud.size());
    if (diag.ess >= n / 2.0) return diag;
    Rng rng(derive_seed({seed, kResampleStream}));
    const std::vector<int> idx = systematic_resample(cloud.weights, rng.uniform());
    Eigen::MatrixXd states(cloud.states.rows(), cloud.states.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) states.col(static_cast<Eigen::Index>(i)) = cloud.states.col(idx[i]);
    cloud.states = std::move(states);
    cloud.weights.setConstant(1.0 / n);
    diag.resampled = true;
    return diag;
}

ParticleFilterState particle_initialize(const GaussianBelief& prior, int n_particles, const FilterConfig& cfg) {
    const FilterState sp = initialize(prior, cfg);
    ParticleFilterState s;
    s.cloud = sample_cloud(prior, n_particles, cfg.seed);
    s.pbos = sp.pbos;
    s.next_label = sp.next_label;
    return s;
}

ParticleFilterState particle_step(const ParticleFilterState& state, const MeasurementSet& measurements,
                                  const FilterConfig& cfg, ParticleDiagnostics* diagnostics) {
    const auto step_key = static_cast<std::uint64_t>(state.step);
    ParticleFilterState out;
    out.step = state.step + 1;
    out.next_label = state.next_label;
    out.cloud = state.cloud;
    std::vector<std::vector<PboHypothesis>> pbos = state.pbos;
    if (state.step > 0) {
        propagate(out.cloud, cfg.motion, derive_seed({cfg.seed, step_key}));
        FilterState shell;
        shell.agent = out.cloud.gaussian();
        shell.pbos = std::move(pbos);
        pbos = predict(shell, cfg).pbos;
    }

    // The shared PBO bank is conditioned on the weighted agent mean.
    const GaussianBelief cloud_belief = out.cloud.gaussian();
    const GaussianBelief predicted(cloud_belief.mean, Eigen::MatrixXd::Zero(kAgentDim, kAgentDim));
    const std::size_t anchors = pbos.size();
    std::vector<AnchorEvaluation> evals(anchors);
    Eigen::VectorXd log_lik = Eigen::VectorXd::Zero(out.cloud.size());
    for (std::size_t j = 0; j < anchors; ++j) {
        std::span<const Measurement> meas;
        if (j < measurements.per_anchor.size()) meas = measurements.per_anchor[j];
        const Point& pa = cfg.pa_positions[j];
        AnchorEvaluation& ev = evals[j];
        ev = evaluate_anchor(predicted, pbos[j], meas, pa, cfg, state.step, static_cast<int>(j));

        // Replace the Gaussian-agent association weights by their particle
        // averages and rerun the association.
        const auto k_count = static_cast<Eigen::Index>(pbos[j].size());
        const auto m_count = static_cast<Eigen::Index>(meas.size());
        std::vector<Eigen::MatrixXd> per_particle(static_cast<std::size_t>(k_count));
        AssociationInput in;
        in.beta.resize(k_count, m_count + 1);
        in.xi.resize(m_count);
        for (Eigen::Index m = 0; m < m_count; ++m) in.xi[m] = ev.fresh[static_cast<std::size_t>(m)].xi;
        for (Eigen::Index k = 0; k < k_count; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            per_particle[ku] = particle_beta(out.cloud, pbos[j][ku], meas, pa, cfg);
            in.beta(k, 0) = ev.legacy[ku].beta[0];
            if (m_count > 0) in.beta.row(k).tail(m_count) = (out.cloud.weights.transpose() * per_particle[ku]);
            if (!(in.beta.row(k).sum() > 0.0)) in.beta(k, 0) = 1.0;
            ev.legacy[ku].beta = in.beta.row(k).transpose();
        }
        ev.association = loopy_da(in, cfg.da);

        for (Eigen::Index k = 0; k < k_count; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            Eigen::VectorXd factor = Eigen::VectorXd::Constant(out.cloud.size(), in.beta(k, 0));
            if (m_count > 0) factor += per_particle[ku] * ev.association.nu.col(k);
            log_lik.array() += factor.array().log();
        }
    }

    reweight(out.cloud, log_lik);
    const ParticleDiagnostics diag = maybe_resample(out.cloud, derive_seed({cfg.seed, step_key, 1}));
    if (diagnostics) *diagnostics = diag;

    const Eigen::VectorXd posterior_mean = out.cloud.gaussian().mean;
    out.pbos.resize(anchors);
    for (std::size_t j = 0; j < anchors; ++j) {
        std::span<const Measurement> meas;
        if (j < measurements.per_anchor.size()) meas = measurements.per_anchor[j];
        out.pbos[j] = update_pbos(pbos[j], evals[j], meas, cfg.pa_positions[j], posterior_mean, cfg, out.next_label,
                                  nullptr);
    }
    return out;
}

Estimate particle_estimate(const ParticleFilterState& state, const FilterConfig& cfg) {
    FilterState view;
    view.agent = state.cloud.gaussian();
    view.pbos = state.pbos;
    return estimate(view, cfg);
}

}  // namespace mpslam

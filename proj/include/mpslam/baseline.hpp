#pragma once

// Particle-based MP-SLAM baseline. The agent belief is a weighted particle
// cloud; PBOs stay Gaussian in one shared bank. Association weights are
// evaluated per particle with the same beta/xi/loopy-DA machinery as the
// sigma-point filter.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mpslam/filter.hpp"

namespace mpslam {

struct ParticleCloud {
    Eigen::MatrixXd states;   ///< 5 x N, one AgentState vector per column
    Eigen::VectorXd weights;  ///< N, normalized

    [[nodiscard]] Eigen::Index size() const { return states.cols(); }

    /// Throws ShapeError / DomainError when the invariants do not hold.
    void validate(double tol = 1e-9) const;

    /// Weighted mean (circular mean for the heading) and covariance.
    [[nodiscard]] GaussianBelief gaussian() const;
};

struct ParticleFilterState {
    ParticleCloud cloud;
    std::vector<std::vector<PboHypothesis>> pbos;
    int step = 0;
    int next_label = 1;
};

struct ParticleDiagnostics {
    double ess = 0.0;  ///< effective sample size after reweighting
    bool resampled = false;
};

double effective_sample_size(const Eigen::VectorXd& weights);

/// Systematic resampling with offset u in [0, 1); returns N parent indices.
std::vector<int> systematic_resample(const Eigen::VectorXd& weights, double u);

/// Draws N particles from `prior` with uniform weights.
ParticleCloud sample_cloud(const GaussianBelief& prior, int n, std::uint64_t seed);

/// Moves every particle through the motion model with sampled process noise;
/// particle i uses its own counter-based stream.
void propagate(ParticleCloud& cloud, const MotionModel& motion, std::uint64_t seed);

/// Adds `log_likelihood` to the log weights and renormalizes. Throws
/// TrackLossError when every weight vanishes.
void reweight(ParticleCloud& cloud, const Eigen::VectorXd& log_likelihood);

/// Resamples (systematically) when the ESS drops below N/2.
ParticleDiagnostics maybe_resample(ParticleCloud& cloud, std::uint64_t seed);

ParticleFilterState particle_initialize(const GaussianBelief& prior, int n_particles, const FilterConfig& cfg);

/// One recursion: propagation (skipped on the first step), per-particle
/// association-marginalized reweighting, resampling and the shared PBO bank
/// update.
ParticleFilterState particle_step(const ParticleFilterState& state, const MeasurementSet& measurements,
                                  const FilterConfig& cfg, ParticleDiagnostics* diagnostics = nullptr);

Estimate particle_estimate(const ParticleFilterState& state, const FilterConfig& cfg);

}  // namespace mpslam

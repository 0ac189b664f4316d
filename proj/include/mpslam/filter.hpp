#pragma once

// Sigma-point sum-product recursion for multipath-based SLAM. Every message
// is kept Gaussian: the agent belief, each PBO's positional belief, the
// stacked agent+PBO evidence of each measurement and the birth proposal of
// each new PBO.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mpslam/association.hpp"
#include "mpslam/gaussmath.hpp"
#include "mpslam/geometry.hpp"
#include "mpslam/models.hpp"

namespace mpslam {

/// How the per-PBO agent beliefs are combined into the agent posterior.
enum class FusionRule {
    /// Plain product of the matched per-PBO posteriors.
    kProduct,
    /// Product of the predicted belief with each per-PBO message, obtained
    /// by dividing the predicted belief out of the matched posterior; the
    /// message precision is clipped to be positive semi-definite.
    kExtrinsic,
};

struct FilterConfig {
    DetectionModel detection;
    double p_declare = 0.5;  ///< p_de
    double p_prune = 1e-4;   ///< p_pr
    BirthModel birth;
    ClutterModel clutter;
    int importance_samples = 10;
    DaOptions da;
    UtParams ut;
    MeasurementNoise noise;
    MotionModel motion = build_motion(1.0, 9e-4, 0.00761543549466839);  // (5 deg)^2
    double sigma_reg = 0.01;      ///< PA position regularization std (m)
    double va_drift_std = 0.0;    ///< per-step VA random-walk std (m)
    FusionRule fusion = FusionRule::kExtrinsic;
    std::uint64_t seed = 0;       ///< importance-sampling streams
    std::vector<Point> pa_positions;

    /// Throws DomainError on out-of-range parameters.
    void validate() const;
};

struct FilterState {
    GaussianBelief agent;
    /// Per anchor; element 0 is always the PA hypothesis.
    std::vector<std::vector<PboHypothesis>> pbos;
    int step = 0;
    int next_label = 1;
};

struct MapEntry {
    Point position;
    double existence = 0.0;
    int anchor = 0;
    int label = 0;
    bool is_pa = false;
};

struct Estimate {
    AgentState agent;
    std::vector<MapEntry> map;
};

struct LegacyEvaluation {
    GaussianBelief joint;        ///< stacked [agent; PBO] prior
    InnovationUpdate update;     ///< stacked Kalman update, shared across measurements
    Eigen::VectorXd evidence;    ///< beta_part per measurement
    Eigen::VectorXd beta;        ///< M+1 association weights, [0] missed detection
};

struct NewEvaluation {
    double xi = 1.0;
    GaussianBelief proposal;
    /// All importance samples fell outside the birth disc.
    bool degenerate = false;
};

struct StepDiagnostics {
    int legacy_pbos = 0;
    int new_pbos = 0;
    int pruned = 0;
    int da_iterations = 0;
    bool da_converged = true;
    int degenerate_births = 0;
};

/// PA hypotheses (existence 1) around `agent_prior`.
FilterState initialize(const GaussianBelief& agent_prior, const FilterConfig& cfg);

FilterState predict(const FilterState& state, const FilterConfig& cfg);

/// Evidence of every measurement under PBO `pbo` given the predicted agent.
/// One unscented transform of the stacked state serves all measurements.
LegacyEvaluation evaluate_legacy(const GaussianBelief& agent, const PboHypothesis& pbo,
                                 std::span<const Measurement> measurements, const Point& pa,
                                 const FilterConfig& cfg);

/// New-PBO weight xi of measurement `z` by importance sampling from a birth
/// proposal built from agent and measurement sigma points. `stream` selects
/// the deterministic sample stream.
NewEvaluation evaluate_new(const GaussianBelief& agent, const Eigen::Vector3d& z, const Point& pa,
                           const FilterConfig& cfg, std::uint64_t stream);

/// Association, belief calculation, fusion, birth and pruning for one step.
FilterState update(const FilterState& predicted, const MeasurementSet& measurements, const FilterConfig& cfg,
                   StepDiagnostics* diagnostics = nullptr);

/// predict (skipped on the first step) followed by update.
FilterState step(const FilterState& state, const MeasurementSet& measurements, const FilterConfig& cfg,
                 StepDiagnostics* diagnostics = nullptr);

Estimate estimate(const FilterState& state, const FilterConfig& cfg);

// Building blocks shared with the particle baseline ------------------------

/// Everything computed for one anchor before the agent belief is fused.
struct AnchorEvaluation {
    std::vector<LegacyEvaluation> legacy;
    std::vector<NewEvaluation> fresh;
    AssociationOutput association;
};

AnchorEvaluation evaluate_anchor(const GaussianBelief& agent, std::span<const PboHypothesis> pbos,
                                 std::span<const Measurement> measurements, const Point& pa,
                                 const FilterConfig& cfg, int step, int anchor);

/// Agent belief of one legacy PBO: the association-weighted mixture of the
/// predicted belief and the stacked-update agent blocks, moment matched.
GaussianBelief matched_agent_belief(const GaussianBelief& agent, const LegacyEvaluation& eval,
                                    std::span<const Measurement> measurements, const Eigen::MatrixXd& eta,
                                    Eigen::Index row);

GaussianBelief fuse_agent(const GaussianBelief& agent, std::span<const GaussianBelief> matched,
                          FusionRule rule);

/// Legacy PBO update, new-PBO creation and pruning for one anchor.
std::vector<PboHypothesis> update_pbos(std::span<const PboHypothesis> pbos, const AnchorEvaluation& eval,
                                       std::span<const Measurement> measurements, const Point& pa,
                                       const Eigen::VectorXd& agent_mean, const FilterConfig& cfg,
                                       int& next_label, StepDiagnostics* diagnostics);

/// Clutter intensity mu_fa * f_fa, floored so that mu_fa = 0 remains usable.
double clutter_intensity(const FilterConfig& cfg);

}  // namespace mpslam

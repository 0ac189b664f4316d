#pragma once

// Probabilistic models: agent motion, PBO survival and birth, the factorized
// measurement likelihood, clutter and detection.

#include <vector>

#include <Eigen/Core>

#include "mpslam/gaussmath.hpp"
#include "mpslam/geometry.hpp"
#include "mpslam/state.hpp"

namespace mpslam {

/// Constant-velocity model with stochastic acceleration; the heading is a
/// random walk.
struct MotionModel {
    Eigen::MatrixXd transition;     ///< A, 5x5
    Eigen::MatrixXd process_noise;  ///< C_x, 5x5
    double dt = 1.0;
    double accel_var = 0.0;    ///< sigma_a^2
    double heading_var = 0.0;  ///< sigma_kappa^2 per second
};

/// Throws DomainError for dt <= 0 or negative variances.
MotionModel build_motion(double dt, double accel_var, double heading_var);

struct MeasurementNoise {
    double sigma_range = 0.1;
    double sigma_aoa = 0.0349065850398866;  // 2 deg
    double sigma_aod = 0.0349065850398866;

    void validate() const;
    [[nodiscard]] Eigen::Matrix3d covariance() const;
};

/// Uniform false-alarm density on [0, max_range] x (-pi, pi] x (-pi, pi].
struct ClutterModel {
    double mean_count = 5.0;
    double max_range = 15.0;

    [[nodiscard]] double density() const;
    /// mu_fa * f_fa(z), the clutter intensity.
    [[nodiscard]] double intensity() const { return mean_count * density(); }
};

/// Poisson birth of new PBOs, uniform on a disc around the PA.
struct BirthModel {
    double mean_count = 0.1;
    double radius = 15.0;

    [[nodiscard]] double density() const;
};

struct DetectionModel {
    double p_detect = 0.95;
    double p_survive = 0.999;

    void validate() const;
};

/// Potential birth object: positional belief plus existence probability.
struct PboHypothesis {
    GaussianBelief belief;
    double existence = 0.0;
    int anchor = 0;
    int label = 0;
    bool is_pa = false;
};

struct Measurement {
    Eigen::Vector3d z = Eigen::Vector3d::Zero();  ///< range, AOA, AOD
    /// Ground-truth origin for auditing: -1 clutter, 0 LOS, w+1 reflection on wall w.
    int origin = -1;
};

struct MeasurementSet {
    int step = 0;
    std::vector<std::vector<Measurement>> per_anchor;
};

/// Measurement components 1 and 2 are angles.
inline constexpr AngleMask kMeasurementAngles = 0b110;

/// Product of the three univariate Gaussian factors at wrapped innovations.
double lhf(const Eigen::Vector3d& z, const AgentState& x, const VirtualAnchor& va, const Point& pa,
           const MeasurementNoise& noise);

/// mu_fa = n_samples * exp(-gamma^2), gamma a linear amplitude threshold.
double clutter_rate(int n_samples, double gamma);

PboHypothesis survival_transition(const PboHypothesis& pbo, double p_survive, const Eigen::MatrixXd& drift);

}  // namespace mpslam

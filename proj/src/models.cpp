#include "mpslam/models.hpp"

#include <cmath>
#include <numbers>

#include "mpslam/angles.hpp"
#include "mpslam/errors.hpp"

namespace mpslam {

MotionModel build_motion(double dt, double accel_var, double heading_var) {
    if (!(dt > 0.0)) throw DomainError("build_motion: dt must be positive");
    if (accel_var < 0.0 || heading_var < 0.0) throw DomainError("build_motion: negative noise variance");
    MotionModel m;
    m.dt = dt;
    m.accel_var = accel_var;
    m.heading_var = heading_var;
    m.transition = Eigen::MatrixXd::Identity(5, 5);
    m.transition(0, 2) = dt;
    m.transition(1, 3) = dt;

    const double q_pp = std::pow(dt, 4) / 4.0 * accel_var;
    const double q_pv = std::pow(dt, 3) / 2.0 * accel_var;
    const double q_vv = dt * dt * accel_var;
    m.process_noise = Eigen::MatrixXd::Zero(5, 5);
    for (int axis = 0; axis < 2; ++axis) {
        m.process_noise(axis, axis) = q_pp;
        m.process_noise(axis, axis + 2) = q_pv;
        m.process_noise(axis + 2, axis) = q_pv;
        m.process_noise(axis + 2, axis + 2) = q_vv;
    }
    m.process_noise(4, 4) = heading_var * dt;
    return m;
}

void MeasurementNoise::validate() const {
    if (!(sigma_range > 0.0 && sigma_aoa > 0.0 && sigma_aod > 0.0))
        throw DomainError("measurement noise standard deviations must be positive");
}

Eigen::Matrix3d MeasurementNoise::covariance() const {
    return Eigen::Vector3d(sigma_range * sigma_range, sigma_aoa * sigma_aoa, sigma_aod * sigma_aod).asDiagonal();
}

double ClutterModel::density() const {
    return 1.0 / (max_range * 4.0 * std::numbers::pi * std::numbers::pi);
}

double BirthModel::density() const { return 1.0 / (std::numbers::pi * radius * radius); }

void DetectionModel::validate() const {
    if (!(p_detect > 0.0 && p_detect <= 1.0)) throw DomainError("p_d must lie in (0, 1]");
    if (!(p_survive > 0.0 && p_survive <= 1.0)) throw DomainError("p_s must lie in (0, 1]");
}

namespace {

double normal_pdf(double r, double sigma) {
    return std::exp(-0.5 * r * r / (sigma * sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

double lhf(const Eigen::Vector3d& z, const AgentState& x, const VirtualAnchor& va, const Point& pa,
           const MeasurementNoise& noise) {
    const Eigen::Vector3d h = predict_measurement(x.position, x.heading, va.position, pa, va.order > 0);
    return normal_pdf(z[0] - h[0], noise.sigma_range) * normal_pdf(wrap_angle(z[1] - h[1]), noise.sigma_aoa) *
           normal_pdf(wrap_angle(z[2] - h[2]), noise.sigma_aod);
}

double clutter_rate(int n_samples, double gamma) {
    if (gamma < 0.0) throw DomainError("clutter_rate: threshold must be nonnegative");
    return static_cast<double>(n_samples) * std::exp(-gamma * gamma);
}

PboHypothesis survival_transition(const PboHypothesis& pbo, double p_survive, const Eigen::MatrixXd& drift) {
    PboHypothesis out = pbo;
    out.existence = p_survive * pbo.existence;
    if (drift.size() != 0) out.belief.cov += drift;
    return out;
}

}  // namespace mpslam

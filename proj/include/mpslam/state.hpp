#pragma once

#include <Eigen/Core>

namespace mpslam {

/// Agent state [p_x, p_y, v_x, v_y, heading]; heading in (-pi, pi].
struct AgentState {
    static constexpr Eigen::Index kDim = 5;

    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
    double heading = 0.0;

    [[nodiscard]] Eigen::VectorXd to_vector() const;
    static AgentState from_vector(const Eigen::Ref<const Eigen::VectorXd>& v);
};

}  // namespace mpslam

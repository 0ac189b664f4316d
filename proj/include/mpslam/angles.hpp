#pragma once

#include <cmath>
#include <numbers>

namespace mpslam {

/// Maps an angle to (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(a + std::numbers::pi, two_pi);
    if (w < 0.0) w += two_pi;
    w -= std::numbers::pi;
    // fmod maps +pi to -pi; the interval is open at -pi
    return w <= -std::numbers::pi ? std::numbers::pi : w;
}

inline constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace mpslam

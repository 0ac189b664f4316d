#pragma once

// Mirror-source environment model. Each reflecting wall turns a physical
// anchor (PA) into a virtual anchor (VA); measurements are range, angle of
// arrival at the agent (relative to its heading) and angle of departure at
// the PA.

#include <vector>

#include <Eigen/Core>

#include "mpslam/state.hpp"

namespace mpslam {

using Point = Eigen::Vector2d;

struct Segment {
    Point a;
    Point b;
    /// Non-reflecting segments only obstruct propagation.
    bool reflective = true;

    [[nodiscard]] double length() const { return (b - a).norm(); }
};

struct BoundingBox {
    Point min = Point::Zero();
    Point max = Point::Zero();

    [[nodiscard]] bool contains(const Point& p, double tol = 1e-9) const {
        return (p.array() >= min.array() - tol).all() && (p.array() <= max.array() + tol).all();
    }
};

struct Environment {
    std::vector<Segment> walls;
    std::vector<Point> pa_positions;
    BoundingBox bounds;

    /// Throws GeometryError on zero-length walls or PAs outside the bounds.
    void validate() const;
};

struct VirtualAnchor {
    Point position = Point::Zero();
    int anchor = 0;     ///< index of the PA it mirrors
    int wall = -1;      ///< generating wall, -1 for the PA itself
    int order = 0;      ///< reflection order; 0 is the PA
};

/// Reflection of `pa` across the infinite line through `wall`.
Point mirror_va(const Point& pa, const Segment& wall);

/// (range, AOA, AOD) of the path agent <- VA. Throws GeometryError when the
/// agent coincides with the VA or the PA.
Eigen::Vector3d measurement_fn(const AgentState& x, const VirtualAnchor& va, const Point& pa);

/// Non-throwing kernel of measurement_fn used inside the filters. For a
/// reflected path the reflecting line is the perpendicular bisector of the PA
/// and the VA, so only the VA position is needed.
Eigen::Vector3d predict_measurement(const Point& agent, double heading, const Point& va, const Point& pa,
                                    bool reflected);

/// Inverts range and AOA into a VA position. Throws DomainError if z[0] <= 0.
Point birth_map(const AgentState& x, const Eigen::Vector3d& z);

/// Kernel form of birth_map without the domain check.
inline Point birth_point(const Point& agent, double heading, double range, double aoa);

bool visibility(const AgentState& x, const VirtualAnchor& va, const Environment& env);

/// The PA itself (order 0) followed by one first-order VA per reflecting wall.
std::vector<VirtualAnchor> enumerate_vas(const Environment& env, int anchor);

/// True if the closed segments [p, q] and [a, b] intersect. With `strict`,
/// touching at either segment's endpoints does not count.
bool segments_intersect(const Point& p, const Point& q, const Point& a, const Point& b, bool strict);

// ---------------------------------------------------------------------------

inline Point birth_point(const Point& agent, double heading, double range, double aoa) {
    const double angle = heading + aoa;
    return agent + range * Point(std::cos(angle), std::sin(angle));
}

}  // namespace mpslam

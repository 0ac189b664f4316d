#include "mpslam/geometry.hpp"

#include <cmath>
#include <string>

#include "mpslam/angles.hpp"
#include "mpslam/errors.hpp"

namespace mpslam {

Eigen::VectorXd AgentState::to_vector() const {
    Eigen::VectorXd v(kDim);
    v << position, velocity, heading;
    return v;
}

AgentState AgentState::from_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
    AgentState s;
    s.position = v.head<2>();
    s.velocity = v.segment<2>(2);
    s.heading = wrap_angle(v[4]);
    return s;
}

void Environment::validate() const {
    for (std::size_t i = 0; i < walls.size(); ++i)
        if (!(walls[i].length() > 0.0)) throw GeometryError("wall " + std::to_string(i) + " has zero length");
    for (std::size_t j = 0; j < pa_positions.size(); ++j)
        if (!bounds.contains(pa_positions[j]))
            throw GeometryError("physical anchor " + std::to_string(j) + " lies outside the room bounds");
}

Point mirror_va(const Point& pa, const Segment& wall) {
    const Eigen::Vector2d dir = wall.b - wall.a;
    const double len2 = dir.squaredNorm();
    if (!(len2 > 0.0)) throw GeometryError("mirror_va: degenerate wall");
    const Eigen::Vector2d rel = pa - wall.a;
    const Point foot = wall.a + (rel.dot(dir) / len2) * dir;
    return 2.0 * foot - pa;
}

Eigen::Vector3d predict_measurement(const Point& agent, double heading, const Point& va, const Point& pa,
                                    bool reflected) {
    const Eigen::Vector2d to_va = va - agent;
    Point departing = agent;
    if (reflected) {
        const Eigen::Vector2d axis = va - pa;
        const double n = axis.norm();
        if (n > 1e-12) {
            const Eigen::Vector2d u = axis / n;
            const Point mid = 0.5 * (pa + va);
            departing = agent - 2.0 * (agent - mid).dot(u) * u;
        }
    }
    const Eigen::Vector2d from_pa = departing - pa;
    return {to_va.norm(), wrap_angle(std::atan2(to_va.y(), to_va.x()) - heading),
            std::atan2(from_pa.y(), from_pa.x())};
}

Eigen::Vector3d measurement_fn(const AgentState& x, const VirtualAnchor& va, const Point& pa) {
    if ((x.position - va.position).norm() < 1e-12) throw GeometryError("measurement_fn: agent coincides with VA");
    if ((x.position - pa).norm() < 1e-12) throw GeometryError("measurement_fn: agent coincides with PA");
    return predict_measurement(x.position, x.heading, va.position, pa, va.order > 0);
}

Point birth_map(const AgentState& x, const Eigen::Vector3d& z) {
    if (!(z[0] > 0.0)) throw DomainError("birth_map: range must be positive");
    return birth_point(x.position, x.heading, z[0], z[1]);
}

namespace {

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

// Parameters (s along p->q, t along a->b) of the intersection of two lines,
// false if parallel.
bool line_params(const Point& p, const Point& q, const Point& a, const Point& b, double& s, double& t) {
    const Eigen::Vector2d r = q - p;
    const Eigen::Vector2d d = b - a;
    const double denom = cross2(r, d);
    if (std::abs(denom) < 1e-15 * (r.norm() * d.norm() + 1e-300)) return false;
    const Eigen::Vector2d ap = a - p;
    s = cross2(ap, d) / denom;
    t = cross2(ap, r) / denom;
    return true;
}

// Whether any wall except `skip` blocks the segment [p, q].
bool blocked(const Point& p, const Point& q, const Environment& env, int skip) {
    for (int w = 0; w < static_cast<int>(env.walls.size()); ++w) {
        if (w == skip) continue;
        if (segments_intersect(p, q, env.walls[w].a, env.walls[w].b, true)) return true;
    }
    return false;
}

}  // namespace

bool segments_intersect(const Point& p, const Point& q, const Point& a, const Point& b, bool strict) {
    double s = 0.0;
    double t = 0.0;
    if (!line_params(p, q, a, b, s, t)) return false;
    const double eps = strict ? 1e-9 : -1e-12;
    return s > eps && s < 1.0 - eps && t > eps && t < 1.0 - eps;
}

bool visibility(const AgentState& x, const VirtualAnchor& va, const Environment& env) {
    const Point& pa = env.pa_positions.at(static_cast<std::size_t>(va.anchor));
    if (va.order == 0) return !blocked(x.position, pa, env, -1);
    const Segment& wall = env.walls.at(static_cast<std::size_t>(va.wall));
    double s = 0.0;
    double t = 0.0;
    if (!line_params(x.position, va.position, wall.a, wall.b, s, t)) return false;
    if (s < 0.0 || s > 1.0 || t < 0.0 || t > 1.0) return false;
    const Point reflection = x.position + s * (va.position - x.position);
    return !blocked(x.position, reflection, env, va.wall) && !blocked(reflection, pa, env, va.wall);
}

std::vector<VirtualAnchor> enumerate_vas(const Environment& env, int anchor) {
    const Point& pa = env.pa_positions.at(static_cast<std::size_t>(anchor));
    std::vector<VirtualAnchor> vas;
    vas.push_back({pa, anchor, -1, 0});
    for (int w = 0; w < static_cast<int>(env.walls.size()); ++w) {
        if (!env.walls[w].reflective) continue;
        vas.push_back({mirror_va(pa, env.walls[w]), anchor, w, 1});
    }
    return vas;
}

}  // namespace mpslam

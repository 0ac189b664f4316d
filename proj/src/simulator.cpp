#include "mpslam/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "mpslam/angles.hpp"
#include "mpslam/errors.hpp"
#include "mpslam/rng.hpp"

namespace mpslam {

namespace {

constexpr std::uint64_t kMeasurementStream = 0x4D45415355ULL;
constexpr std::uint64_t kPriorStream = 0x5052494FULL;

Point catmull_rom(const Point& p0, const Point& p1, const Point& p2, const Point& p3, double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    return 0.5 * ((2.0 * p1) + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3);
}

}  // namespace

std::vector<Segment> room_walls(double width, double height) {
    return {{Point(0, 0), Point(width, 0)},
            {Point(width, 0), Point(width, height)},
            {Point(width, height), Point(0, height)},
            {Point(0, height), Point(0, 0)}};
}

std::vector<Point> default_waypoints(double width, double height) {
    // Unit-room coordinates scaled to the room.
    const double u[8][2] = {{0.808, 0.5},   {0.738, 0.747}, {0.5, 0.84},    {0.262, 0.76},
                            {0.192, 0.5},   {0.246, 0.253}, {0.5, 0.16},    {0.754, 0.24}};
    std::vector<Point> w;
    for (const auto& p : u) w.emplace_back(p[0] * width, p[1] * height);
    return w;
}

Segment default_obstacle(double width, double height) {
    return {Point(3.3 / 6.5 * width, 3.2 / 7.5 * height), Point(4.2 / 6.5 * width, 3.9 / 7.5 * height), false};
}

std::vector<AgentState> loop_trajectory(const std::vector<Point>& waypoints, int n_steps, double dt, double speed) {
    if (waypoints.size() < 3) throw GeometryError("trajectory needs at least 3 waypoints");
    if (n_steps < 1) throw DomainError("n_steps must be at least 1");
    if (!(speed > 0.0)) throw DomainError("speed must be positive");
    const std::size_t n = waypoints.size();
    constexpr int kSub = 200;
    std::vector<Point> dense;
    dense.reserve(n * kSub + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const Point& p0 = waypoints[(i + n - 1) % n];
        const Point& p1 = waypoints[i];
        const Point& p2 = waypoints[(i + 1) % n];
        const Point& p3 = waypoints[(i + 2) % n];
        for (int s = 0; s < kSub; ++s) dense.push_back(catmull_rom(p0, p1, p2, p3, static_cast<double>(s) / kSub));
    }
    dense.push_back(dense.front());
    std::vector<double> arc(dense.size(), 0.0);
    for (std::size_t i = 1; i < dense.size(); ++i) arc[i] = arc[i - 1] + (dense[i] - dense[i - 1]).norm();
    const double total = arc.back();

    const auto point_at = [&](double s) -> Point {
        s = std::fmod(s, total);
        if (s < 0) s += total;
        const auto it = std::upper_bound(arc.begin(), arc.end(), s);
        const std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - arc.begin()), dense.size() - 1);
        const std::size_t lo = hi - 1;
        const double span = arc[hi] - arc[lo];
        const double t = span > 0 ? (s - arc[lo]) / span : 0.0;
        return dense[lo] + t * (dense[hi] - dense[lo]);
    };
    const double ds = speed * dt;
    std::vector<AgentState> traj(static_cast<std::size_t>(n_steps));
    for (int k = 0; k < n_steps; ++k) {
        const double s = ds * k;
        AgentState x;
        x.position = point_at(s);
        x.velocity = (point_at(s + ds) - point_at(s - ds)) / (2.0 * dt);
        x.heading = std::atan2(x.velocity.y(), x.velocity.x());
        traj[static_cast<std::size_t>(k)] = x;
    }
    return traj;
}

Scenario build_scenario(const ScenarioSpec& spec) {
    if (!(spec.room_width > 0.0 && spec.room_height > 0.0)) throw GeometryError("room dimensions must be positive");
    if (!(spec.dt > 0.0)) throw DomainError("dt must be positive");
    if (spec.experiment != 1 && spec.experiment != 2) throw DomainError("experiment must be 1 or 2");
    if (spec.pa_positions.empty()) throw GeometryError("at least one PA is required");
    spec.noise.validate();
    spec.detection.validate();
    if (spec.clutter.mean_count < 0.0) throw DomainError("mu_fa must be nonnegative");
    if (!(spec.clutter.max_range > 0.0)) throw DomainError("clutter range must be positive");

    Scenario s;
    s.env.walls = spec.walls.empty() && !spec.walls_explicit ? room_walls(spec.room_width, spec.room_height) : spec.walls;
    for (auto seg : spec.obstacles) {
        seg.reflective = false;
        s.env.walls.push_back(seg);
    }
    if (spec.experiment == 2 && spec.walls_explicit && spec.walls.empty())
        throw GeometryError("experiment 2 requires room walls but the wall list is empty");
    if (spec.experiment == 2 && spec.obstacles.empty())
        throw GeometryError("experiment 2 requires at least one obstructing wall");
    s.env.pa_positions = spec.pa_positions;
    s.env.bounds = {Point(0, 0), Point(spec.room_width, spec.room_height)};
    s.env.validate();

    const auto waypoints = spec.waypoints.empty() ? default_waypoints(spec.room_width, spec.room_height)
                                                  : spec.waypoints;
    s.trajectory = loop_trajectory(waypoints, spec.n_steps, spec.dt, spec.speed);
    for (const auto& x : s.trajectory)
        if (!s.env.bounds.contains(x.position)) throw GeometryError("trajectory leaves the room");
    for (std::size_t j = 0; j < s.env.pa_positions.size(); ++j)
        s.vas.push_back(enumerate_vas(s.env, static_cast<int>(j)));

    s.noise = spec.noise;
    s.clutter = spec.clutter;
    s.detection = spec.detection;
    s.rf = spec.rf;
    s.dt = spec.dt;
    s.experiment = spec.experiment;
    s.seed = spec.seed;
    return s;
}

std::vector<VirtualAnchor> visible_vas(const Scenario& scenario, int n, int anchor) {
    const AgentState& x = scenario.trajectory.at(static_cast<std::size_t>(n));
    std::vector<VirtualAnchor> out;
    for (const auto& va : scenario.vas.at(static_cast<std::size_t>(anchor)))
        if (visibility(x, va, scenario.env)) out.push_back(va);
    return out;
}

MeasurementSet generate_measurements(const Scenario& scenario, int n) {
    if (n < 0 || n >= static_cast<int>(scenario.trajectory.size()))
        throw DomainError("generate_measurements: step out of range");
    const AgentState& x = scenario.trajectory[static_cast<std::size_t>(n)];
    MeasurementSet set;
    set.step = n;
    set.per_anchor.resize(scenario.vas.size());
    for (std::size_t j = 0; j < scenario.vas.size(); ++j) {
        Rng rng(derive_seed({scenario.seed, kMeasurementStream, static_cast<std::uint64_t>(n), j}));
        const Point& pa = scenario.env.pa_positions[j];
        auto& out = set.per_anchor[j];
        for (const auto& va : scenario.vas[j]) {
            // Draw unconditionally so the stream layout is independent of visibility.
            const bool detected = rng.bernoulli(scenario.detection.p_detect);
            const Eigen::Vector3d noise(rng.normal() * scenario.noise.sigma_range,
                                        rng.normal() * scenario.noise.sigma_aoa,
                                        rng.normal() * scenario.noise.sigma_aod);
            if (!detected || !visibility(x, va, scenario.env)) continue;
            Eigen::Vector3d z = measurement_fn(x, va, pa) + noise;
            z[1] = wrap_angle(z[1]);
            z[2] = wrap_angle(z[2]);
            out.push_back({z, va.order == 0 ? 0 : va.wall + 1});
        }
        const int clutter = rng.poisson(scenario.clutter.mean_count);
        for (int c = 0; c < clutter; ++c) {
            const double d = rng.uniform(0.0, scenario.clutter.max_range);
            const double aoa = wrap_angle(rng.uniform(-std::numbers::pi, std::numbers::pi));
            const double aod = wrap_angle(rng.uniform(-std::numbers::pi, std::numbers::pi));
            out.push_back({Eigen::Vector3d(d, aoa, aod), -1});
        }
        for (std::size_t i = out.size(); i > 1; --i) {
            const auto k = static_cast<std::size_t>(rng.next() % i);
            std::swap(out[i - 1], out[k]);
        }
    }
    return set;
}

std::vector<MeasurementSet> generate_all_measurements(const Scenario& scenario) {
    std::vector<MeasurementSet> all;
    all.reserve(scenario.trajectory.size());
    for (int n = 0; n < static_cast<int>(scenario.trajectory.size()); ++n)
        all.push_back(generate_measurements(scenario, n));
    return all;
}

GaussianBelief draw_initial_prior(const AgentState& truth, const PriorStds& stds, std::uint64_t seed) {
    Rng rng(derive_seed({seed, kPriorStream}));
    AgentState m = truth;
    m.position += Point(rng.normal(), rng.normal()) * stds.position;
    m.velocity += Point(rng.normal(), rng.normal()) * stds.velocity;
    m.heading = wrap_angle(m.heading + rng.normal() * stds.heading);
    Eigen::VectorXd var(5);
    var << stds.position * stds.position, stds.position * stds.position, stds.velocity * stds.velocity,
        stds.velocity * stds.velocity, stds.heading * stds.heading;
    return {m.to_vector(), var.asDiagonal()};
}

void write_measurements_csv(std::ostream& os, const std::vector<MeasurementSet>& sets) {
    os << "n,j,z_d,z_aoa,z_aod,origin_label\n";
    char buf[160];
    for (const auto& set : sets) {
        for (std::size_t j = 0; j < set.per_anchor.size(); ++j) {
            for (const auto& m : set.per_anchor[j]) {
                std::snprintf(buf, sizeof buf, "%d,%zu,%.17g,%.17g,%.17g,%d\n", set.step, j, m.z[0], m.z[1], m.z[2],
                              m.origin);
                os << buf;
            }
        }
    }
}

}  // namespace mpslam

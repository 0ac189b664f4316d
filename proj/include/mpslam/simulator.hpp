#pragma once

// Synthetic scenarios: room geometry, a smooth closed agent trajectory and
// per-step measurement sets (detections of visible VAs plus clutter).

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mpslam/gaussmath.hpp"
#include "mpslam/geometry.hpp"
#include "mpslam/models.hpp"
#include "mpslam/state.hpp"

namespace mpslam {

/// Radio parameters kept as scenario metadata; noise stds are configured
/// directly in MeasurementNoise.
struct RfMetadata {
    double carrier_hz = 6e9;
    double bandwidth_hz = 500e6;
    double rolloff = 0.6;
    std::string array = "3x3";
    double tx_power_db = 40.0;        ///< received power at 1 m
    double reflection_loss_db = 3.0;
    double threshold_db = 9.0;        ///< detection threshold gamma
};

struct ScenarioSpec {
    int experiment = 1;
    double room_width = 6.5;
    double room_height = 7.5;
    std::vector<Point> pa_positions{Point(2.6, 4.6)};
    /// Reflecting walls; empty means the four walls of the rectangular room.
    std::vector<Segment> walls;
    /// The wall list was given explicitly (an explicit empty list is kept empty).
    bool walls_explicit = false;
    /// Additional non-reflecting obstructions.
    std::vector<Segment> obstacles;
    /// Closed-loop waypoints; empty means the default loop.
    std::vector<Point> waypoints;
    int n_steps = 100;
    double dt = 1.0;
    double speed = 0.15;  ///< m/s along the loop; one lap of the default loop per 100 s
    MeasurementNoise noise;
    ClutterModel clutter;
    DetectionModel detection;
    RfMetadata rf;
    std::uint64_t seed = 1;
};

struct Scenario {
    Environment env;
    /// First-order VAs per anchor; element 0 is the PA.
    std::vector<std::vector<VirtualAnchor>> vas;
    std::vector<AgentState> trajectory;
    MeasurementNoise noise;
    ClutterModel clutter;
    DetectionModel detection;
    RfMetadata rf;
    double dt = 1.0;
    int experiment = 1;
    std::uint64_t seed = 1;
};

/// Rectangular room walls (bottom, right, top, left).
std::vector<Segment> room_walls(double width, double height);

/// Default loop of 8 waypoints inside a room of the given size.
std::vector<Point> default_waypoints(double width, double height);

/// Default Ex. 2 obstruction, placed so the LOS to the default PA is
/// blocked along part of the loop.
Segment default_obstacle(double width, double height);

/// Closed Catmull-Rom spline through `waypoints`, traversed at constant
/// `speed` (wrapping around the loop) and sampled every dt. Velocities by
/// central differences, heading along the velocity.
std::vector<AgentState> loop_trajectory(const std::vector<Point>& waypoints, int n_steps, double dt, double speed);

/// Throws GeometryError on inconsistent geometry (including Ex. 2 without
/// walls) and DomainError on invalid model parameters.
Scenario build_scenario(const ScenarioSpec& spec);

/// Measurements of step n, deterministic in (scenario.seed, n).
MeasurementSet generate_measurements(const Scenario& scenario, int n);

std::vector<MeasurementSet> generate_all_measurements(const Scenario& scenario);

/// Visible VAs (PA included) of anchor `anchor` at step n.
std::vector<VirtualAnchor> visible_vas(const Scenario& scenario, int n, int anchor);

struct PriorStds {
    double position = 0.1;
    double velocity = 0.01;
    double heading = 0.17453292519943295;  // 10 deg
};

/// Filter prior: mean drawn around the true initial state, covariance
/// diag(stds^2).
GaussianBelief draw_initial_prior(const AgentState& truth, const PriorStds& stds, std::uint64_t seed);

/// CSV with header n,j,z_d,z_aoa,z_aod,origin_label.
void write_measurements_csv(std::ostream& os, const std::vector<MeasurementSet>& sets);

}  // namespace mpslam

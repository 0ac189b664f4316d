#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mpslam/angles.hpp"
#include "mpslam/errors.hpp"
#include "mpslam/simulator.hpp"

using namespace mpslam;

namespace {

ScenarioSpec ex2_spec() {
    ScenarioSpec s;
    s.experiment = 2;
    s.obstacles = {default_obstacle(s.room_width, s.room_height)};
    return s;
}

}  // namespace

TEST(BuildScenario, RectangularRoomHasFourVas) {
    const Scenario sc = build_scenario(ScenarioSpec{});
    ASSERT_EQ(sc.vas.size(), 1u);
    ASSERT_EQ(sc.vas[0].size(), 5u);
    int first_order = 0;
    for (const auto& va : sc.vas[0]) first_order += va.order == 1 ? 1 : 0;
    EXPECT_EQ(first_order, 4);
}

TEST(BuildScenario, TrajectoryStaysInsideRoom) {
    const Scenario sc = build_scenario(ScenarioSpec{});
    ASSERT_EQ(sc.trajectory.size(), 100u);
    for (const auto& x : sc.trajectory) {
        EXPECT_TRUE(sc.env.bounds.contains(x.position));
        EXPECT_NEAR(x.velocity.norm(), 0.15, 0.02);
    }
}

TEST(BuildScenario, ExperimentOneKeepsLosThroughout) {
    const Scenario sc = build_scenario(ScenarioSpec{});
    for (int n = 0; n < static_cast<int>(sc.trajectory.size()); ++n)
        EXPECT_TRUE(visibility(sc.trajectory[static_cast<std::size_t>(n)], sc.vas[0][0], sc.env)) << n;
}

TEST(BuildScenario, ExperimentTwoObstructsLosAtTimes) {
    const Scenario sc = build_scenario(ex2_spec());
    int blocked = 0;
    for (const auto& x : sc.trajectory) blocked += visibility(x, sc.vas[0][0], sc.env) ? 0 : 1;
    EXPECT_GT(blocked, 0);
    EXPECT_LT(blocked, static_cast<int>(sc.trajectory.size()));
}

TEST(BuildScenario, ExperimentTwoWithoutWallsIsAGeometryError) {
    ScenarioSpec s = ex2_spec();
    s.walls_explicit = true;
    s.walls.clear();
    EXPECT_THROW(build_scenario(s), GeometryError);
    ScenarioSpec no_obstacle;
    no_obstacle.experiment = 2;
    EXPECT_THROW(build_scenario(no_obstacle), GeometryError);
}

TEST(GenerateMeasurements, NoiselessLimitReproducesMeasurementFunction) {
    ScenarioSpec s;
    s.detection.p_detect = 1.0;
    s.clutter.mean_count = 0.0;
    s.noise.sigma_range = s.noise.sigma_aoa = s.noise.sigma_aod = 1e-15;
    const Scenario sc = build_scenario(s);
    for (int n = 0; n < 20; ++n) {
        const auto set = generate_measurements(sc, n);
        const auto vis = visible_vas(sc, n, 0);
        ASSERT_EQ(set.per_anchor[0].size(), vis.size());
        for (const auto& m : set.per_anchor[0]) {
            const VirtualAnchor& va = m.origin == 0 ? sc.vas[0][0] : sc.vas[0][static_cast<std::size_t>(m.origin)];
            const Eigen::Vector3d h = measurement_fn(sc.trajectory[static_cast<std::size_t>(n)], va,
                                                     sc.env.pa_positions[0]);
            EXPECT_NEAR(m.z[0], h[0], 1e-12);
            EXPECT_NEAR(wrap_angle(m.z[1] - h[1]), 0.0, 1e-12);
            EXPECT_NEAR(wrap_angle(m.z[2] - h[2]), 0.0, 1e-12);
        }
    }
}

TEST(GenerateMeasurements, ClutterCountMatchesMean) {
    ScenarioSpec s;
    s.n_steps = 10000;
    s.clutter.mean_count = 5.0;
    const Scenario sc = build_scenario(s);
    long clutter = 0;
    for (int n = 0; n < s.n_steps; ++n) {
        const MeasurementSet set = generate_measurements(sc, n);
        for (const auto& m : set.per_anchor[0]) clutter += m.origin < 0 ? 1 : 0;
    }
    const double mean = static_cast<double>(clutter) / s.n_steps;
    EXPECT_NEAR(mean, 5.0, 0.25);
}

TEST(GenerateMeasurements, ResidualStatistics) {
    ScenarioSpec s;
    s.n_steps = 4000;
    s.clutter.mean_count = 0.0;
    const Scenario sc = build_scenario(s);
    Eigen::Vector3d sum = Eigen::Vector3d::Zero(), sq = Eigen::Vector3d::Zero();
    long count = 0;
    for (int n = 0; n < s.n_steps; ++n) {
        const MeasurementSet set = generate_measurements(sc, n);
        for (const auto& m : set.per_anchor[0]) {
            const VirtualAnchor& va = m.origin == 0 ? sc.vas[0][0] : sc.vas[0][static_cast<std::size_t>(m.origin)];
            Eigen::Vector3d r = m.z - measurement_fn(sc.trajectory[static_cast<std::size_t>(n)], va,
                                                     sc.env.pa_positions[0]);
            r[1] = wrap_angle(r[1]);
            r[2] = wrap_angle(r[2]);
            sum += r;
            sq += r.cwiseProduct(r);
            ++count;
        }
    }
    ASSERT_GE(count, 10000);
    const Eigen::Vector3d mean = sum / count;
    const Eigen::Vector3d stds = (sq / count - mean.cwiseProduct(mean)).cwiseSqrt();
    const Eigen::Vector3d cfg(s.noise.sigma_range, s.noise.sigma_aoa, s.noise.sigma_aod);
    for (int i = 0; i < 3; ++i) {
        EXPECT_LT(std::abs(mean[i]), 4.0 * cfg[i] / std::sqrt(static_cast<double>(count)));
        EXPECT_NEAR(stds[i] / cfg[i], 1.0, 0.1);
    }
}

TEST(GenerateMeasurements, OccludedVasNeverDetected) {
    const Scenario sc = build_scenario(ex2_spec());
    for (int n = 0; n < static_cast<int>(sc.trajectory.size()); ++n) {
        const auto& x = sc.trajectory[static_cast<std::size_t>(n)];
        const MeasurementSet set = generate_measurements(sc, n);
        for (const auto& m : set.per_anchor[0]) {
            if (m.origin < 0) continue;
            const VirtualAnchor& va = m.origin == 0 ? sc.vas[0][0] : sc.vas[0][static_cast<std::size_t>(m.origin)];
            EXPECT_TRUE(visibility(x, va, sc.env));
        }
    }
}

TEST(GenerateMeasurements, DeterministicStreams) {
    const Scenario a = build_scenario(ScenarioSpec{});
    const Scenario b = build_scenario(ScenarioSpec{});
    std::ostringstream sa, sb;
    write_measurements_csv(sa, generate_all_measurements(a));
    write_measurements_csv(sb, generate_all_measurements(b));
    EXPECT_EQ(sa.str(), sb.str());
    // Steps can be generated out of order.
    const auto late = generate_measurements(a, 57);
    const auto all = generate_all_measurements(a);
    ASSERT_EQ(late.per_anchor[0].size(), all[57].per_anchor[0].size());
    for (std::size_t i = 0; i < late.per_anchor[0].size(); ++i)
        EXPECT_EQ(late.per_anchor[0][i].z, all[57].per_anchor[0][i].z);
    EXPECT_EQ(sa.str().substr(0, 34), "n,j,z_d,z_aoa,z_aod,origin_label\n0");
}

TEST(InitialPrior, HasConfiguredSpread) {
    const Scenario sc = build_scenario(ScenarioSpec{});
    const auto g = draw_initial_prior(sc.trajectory[0], PriorStds{}, 7);
    EXPECT_NEAR(g.cov(0, 0), 0.01, 1e-15);
    EXPECT_NEAR(g.cov(2, 2), 1e-4, 1e-15);
    EXPECT_NEAR(g.cov(4, 4), std::pow(deg2rad(10.0), 2), 1e-15);
    EXPECT_LT((g.mean.head<2>() - sc.trajectory[0].position).norm(), 1.0);
}

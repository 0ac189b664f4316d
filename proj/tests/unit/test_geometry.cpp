#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mpslam/angles.hpp"
#include "mpslam/errors.hpp"
#include "mpslam/geometry.hpp"

using namespace mpslam;

namespace {

AgentState agent_at(double x, double y, double heading) {
    AgentState s;
    s.position = Point(x, y);
    s.heading = heading;
    return s;
}

}  // namespace

TEST(MirrorVa, ReflectsAcrossHorizontalAxis) {
    const Point r = mirror_va(Point(1, 2), {Point(-1, 0), Point(3, 0)});
    EXPECT_NEAR(r.x(), 1.0, 1e-15);
    EXPECT_NEAR(r.y(), -2.0, 1e-15);
}

TEST(MirrorVa, PointOnWallIsFixed) {
    const Point p(1.5, 1.5);
    EXPECT_LE((mirror_va(p, {Point(0, 0), Point(3, 3)}) - p).norm(), 1e-15);
}

TEST(MirrorVa, VerticalWall) {
    const Point r = mirror_va(Point(0, 0), {Point(3, -1), Point(3, 5)});
    EXPECT_NEAR(r.x(), 6.0, 1e-15);
    EXPECT_NEAR(r.y(), 0.0, 1e-15);
}

TEST(MirrorVa, DegenerateWallThrows) {
    EXPECT_THROW(mirror_va(Point(0, 0), {Point(1, 1), Point(1, 1)}), GeometryError);
}

TEST(MirrorVa, IsAnInvolution) {
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 1000; ++i) {
        const Segment wall{Point(u(gen), u(gen)), Point(u(gen), u(gen))};
        const Point p(u(gen), u(gen));
        EXPECT_LE((mirror_va(mirror_va(p, wall), wall) - p).norm(), 1e-12);
    }
}

TEST(MeasurementFn, LosExample) {
    const VirtualAnchor pa{Point(0, 0), 0, -1, 0};
    const auto z = measurement_fn(agent_at(1, 0, 0), pa, Point(0, 0));
    EXPECT_NEAR(z[0], 1.0, 1e-15);
    EXPECT_NEAR(std::abs(z[1]), std::numbers::pi, 1e-15);
    EXPECT_NEAR(z[2], 0.0, 1e-15);
}

TEST(MeasurementFn, FirstOrderDistance) {
    const Point pa(0, 2);
    const Segment wall{Point(-5, 0), Point(5, 0)};
    const VirtualAnchor va{mirror_va(pa, wall), 0, 0, 1};
    EXPECT_NEAR(va.position.y(), -2.0, 1e-15);
    const auto z = measurement_fn(agent_at(4, 2, 0.3), va, pa);
    EXPECT_NEAR(z[0], std::sqrt(32.0), 1e-12);
}

TEST(MeasurementFn, AodPointsAtMirroredAgent) {
    // PA above a floor wall y = 0, agent to the right; the departing ray
    // heads downward towards the reflection point.
    const Point pa(0, 2);
    const Segment wall{Point(-5, 0), Point(5, 0)};
    const VirtualAnchor va{mirror_va(pa, wall), 0, 0, 1};
    const auto z = measurement_fn(agent_at(4, 2, 0.0), va, pa);
    // Mirrored agent (4, -2); from the PA the direction is (4, -4).
    EXPECT_NEAR(z[2], std::atan2(-4.0, 4.0), 1e-12);
    // Arrival from the VA at (0, -2): direction (-4, -4).
    EXPECT_NEAR(z[1], std::atan2(-4.0, -4.0), 1e-12);
}

TEST(MeasurementFn, HeadingRotationShiftsAoaOnly) {
    const Point pa(1, 1);
    const VirtualAnchor va{mirror_va(pa, {Point(0, 3), Point(5, 3)}), 0, 0, 1};
    const auto z0 = measurement_fn(agent_at(2, 0.5, 0.2), va, pa);
    const auto z1 = measurement_fn(agent_at(2, 0.5, 0.2 + 0.7), va, pa);
    EXPECT_NEAR(z0[0], z1[0], 1e-15);
    EXPECT_NEAR(z0[2], z1[2], 1e-15);
    EXPECT_NEAR(wrap_angle(z1[1] - z0[1] + 0.7), 0.0, 1e-12);
}

TEST(MeasurementFn, CoincidentPointsThrow) {
    const VirtualAnchor pa{Point(1, 1), 0, -1, 0};
    EXPECT_THROW(measurement_fn(agent_at(1, 1, 0), pa, Point(1, 1)), GeometryError);
}

TEST(BirthMap, PolarExamples) {
    const Point a = birth_map(agent_at(0, 0, 0), Eigen::Vector3d(2, 0, 0.4));
    EXPECT_NEAR(a.x(), 2.0, 1e-15);
    EXPECT_NEAR(a.y(), 0.0, 1e-15);
    const Point b = birth_map(agent_at(0, 0, std::numbers::pi / 2), Eigen::Vector3d(1, 0, 0));
    EXPECT_NEAR(b.x(), 0.0, 1e-15);
    EXPECT_NEAR(b.y(), 1.0, 1e-15);
    EXPECT_THROW(birth_map(agent_at(0, 0, 0), Eigen::Vector3d(0, 0, 0)), DomainError);
}

TEST(BirthMap, RoundTripOverRandomConfigurations) {
    std::mt19937_64 gen(42);
    std::uniform_real_distribution<double> u(-8.0, 8.0);
    std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
    for (int i = 0; i < 1000; ++i) {
        const Point pa(u(gen), u(gen));
        const Segment wall{Point(u(gen), u(gen)), Point(u(gen), u(gen))};
        const bool reflected = i % 2 == 1;
        const VirtualAnchor va{reflected ? mirror_va(pa, wall) : pa, 0, reflected ? 0 : -1, reflected ? 1 : 0};
        const AgentState x = agent_at(u(gen), u(gen), ang(gen));
        if ((x.position - va.position).norm() < 1e-3) continue;
        const Point back = birth_map(x, measurement_fn(x, va, pa));
        EXPECT_LE((back - va.position).norm(), 1e-10);
    }
}

TEST(Visibility, EmptyEnvironmentAlwaysVisible) {
    Environment env;
    env.pa_positions = {Point(0, 0)};
    const VirtualAnchor pa{Point(0, 0), 0, -1, 0};
    EXPECT_TRUE(visibility(agent_at(3, 4, 0), pa, env));
}

TEST(Visibility, BlockingSegmentHidesLos) {
    Environment env;
    env.walls = {{Point(1, -1), Point(1, 1), false}};
    env.pa_positions = {Point(0, 0)};
    const VirtualAnchor pa{Point(0, 0), 0, -1, 0};
    EXPECT_FALSE(visibility(agent_at(2, 0, 0), pa, env));
    EXPECT_TRUE(visibility(agent_at(2, 3, 0), pa, env));
}

TEST(Visibility, ReflectionPointMustLieOnWall) {
    Environment env;
    env.walls = {{Point(0, 0), Point(1, 0), true}};
    env.pa_positions = {Point(0.5, 1)};
    const auto vas = enumerate_vas(env, 0);
    ASSERT_EQ(vas.size(), 2u);
    // Agent at (0.5, 1.5): reflection point (0.5, 0) lies on the wall.
    EXPECT_TRUE(visibility(agent_at(0.5, 1.5, 0), vas[1], env));
    // Agent far to the right: the specular point is outside [0, 1].
    EXPECT_FALSE(visibility(agent_at(6, 1, 0), vas[1], env));
}

TEST(EnumerateVas, RectangularRoomHasFourFirstOrderVas) {
    Environment env;
    env.walls = {{Point(0, 0), Point(4, 0)}, {Point(4, 0), Point(4, 5)}, {Point(4, 5), Point(0, 5)},
                 {Point(0, 5), Point(0, 0)}};
    env.pa_positions = {Point(1, 1)};
    const auto vas = enumerate_vas(env, 0);
    ASSERT_EQ(vas.size(), 5u);
    EXPECT_EQ(vas[0].order, 0);
    for (std::size_t i = 1; i < vas.size(); ++i) EXPECT_EQ(vas[i].order, 1);
    EXPECT_LE((vas[1].position - Point(1, -1)).norm(), 1e-15);
}

#include <gtest/gtest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "mpslam/angles.hpp"
#include "mpslam/errors.hpp"
#include "mpslam/filter.hpp"
#include "mpslam/simulator.hpp"

using namespace mpslam;

namespace {

FilterConfig base_config() {
    FilterConfig cfg;
    cfg.pa_positions = {Point(2.6, 4.6)};
    cfg.seed = 11;
    return cfg;
}

GaussianBelief agent_at(const Eigen::VectorXd& mean, double pos_std = 0.1) {
    Eigen::VectorXd d(5);
    d << pos_std * pos_std, pos_std * pos_std, 1e-4, 1e-4, std::pow(deg2rad(5.0), 2);
    return {mean, d.asDiagonal()};
}

Eigen::VectorXd vec5(double a, double b, double c, double d, double e) {
    Eigen::VectorXd v(5);
    v << a, b, c, d, e;
    return v;
}

PboHypothesis va_hypothesis(const Point& p, double existence) {
    PboHypothesis h;
    h.belief = GaussianBelief(p, Eigen::Matrix2d::Identity() * 0.01);
    h.existence = existence;
    h.label = 5;
    return h;
}

}  // namespace

TEST(FilterConfig, ValidateRejectsBadParameters) {
    FilterConfig cfg = base_config();
    EXPECT_NO_THROW(cfg.validate());
    cfg.p_prune = 0.6;
    EXPECT_THROW(cfg.validate(), DomainError);
    cfg = base_config();
    cfg.importance_samples = 0;
    EXPECT_THROW(cfg.validate(), DomainError);
    cfg = base_config();
    cfg.pa_positions.clear();
    EXPECT_THROW(cfg.validate(), DomainError);
}

TEST(Predict, ConstantVelocityExample) {
    FilterConfig cfg = base_config();
    FilterState s = initialize(agent_at(vec5(0, 0, 1, 0, 0)), cfg);
    s.pbos[0].push_back(va_hypothesis(Point(1, 1), 1.0));
    const FilterState p = predict(s, cfg);
    EXPECT_NEAR(p.agent.mean[0], 1.0, 1e-15);
    EXPECT_NEAR(p.agent.mean[1], 0.0, 1e-15);
    EXPECT_NEAR(p.pbos[0][1].existence, cfg.detection.p_survive, 1e-15);
    EXPECT_EQ(p.pbos[0][1].belief.mean, Point(1, 1));
    EXPECT_DOUBLE_EQ(p.pbos[0][0].existence, 1.0);
    EXPECT_TRUE(p.pbos[0][0].is_pa);
}

TEST(Predict, IdentityTransitionWithoutNoiseIsIdentity) {
    FilterConfig cfg = base_config();
    cfg.motion.transition = Eigen::MatrixXd::Identity(5, 5);
    cfg.motion.process_noise = Eigen::MatrixXd::Zero(5, 5);
    const FilterState s = initialize(agent_at(vec5(1, 2, 0.1, 0.2, 0.3)), cfg);
    const FilterState p = predict(s, cfg);
    EXPECT_EQ(p.agent.mean, s.agent.mean);
    EXPECT_EQ(p.agent.cov, s.agent.cov);
}

TEST(EvaluateLegacy, MissedDetectionWeightCases) {
    FilterConfig cfg = base_config();
    const GaussianBelief agent = agent_at(vec5(1, 1, 0, 0, 0));
    const std::vector<Measurement> z{{Eigen::Vector3d(3.0, 0.5, -2.0), -1}};
    const Point pa = cfg.pa_positions[0];

    cfg.detection.p_detect = 0.0;
    auto e = evaluate_legacy(agent, va_hypothesis(Point(-1, 4), 0.7), z, pa, cfg);
    EXPECT_DOUBLE_EQ(e.beta[0], 1.0);
    EXPECT_DOUBLE_EQ(e.beta[1], 0.0);

    cfg.detection.p_detect = 0.9;
    e = evaluate_legacy(agent, va_hypothesis(Point(-1, 4), 0.0), z, pa, cfg);
    EXPECT_DOUBLE_EQ(e.beta[0], 1.0);
    EXPECT_DOUBLE_EQ(e.beta[1], 0.0);

    e = evaluate_legacy(agent, va_hypothesis(Point(-1, 4), 0.6), z, pa, cfg);
    EXPECT_NEAR(e.beta[0], 0.6 * 0.1 + 0.4, 1e-15);
    EXPECT_NEAR(e.beta[1], 0.6 * 0.9 * e.evidence[0] / clutter_intensity(cfg), 1e-12 * e.beta[1]);
}

TEST(EvaluateLegacy, EvidencePeaksAtPredictedMeasurement) {
    const FilterConfig cfg = base_config();
    const GaussianBelief agent = agent_at(vec5(1, 1, 0, 0, 0.2), 0.05);
    const PboHypothesis va = va_hypothesis(Point(-1, 4), 0.9);
    AgentState x;
    x.position = Point(1, 1);
    x.heading = 0.2;
    const Eigen::Vector3d h = measurement_fn(x, {Point(-1, 4), 0, 0, 1}, cfg.pa_positions[0]);
    std::vector<Measurement> z;
    for (double off : {0.0, 0.05, 0.15, 0.3}) z.push_back({h + Eigen::Vector3d(off, off, -off), -1});
    const auto e = evaluate_legacy(agent, va, z, cfg.pa_positions[0], cfg);
    for (Eigen::Index i = 1; i < e.evidence.size(); ++i) EXPECT_LT(e.evidence[i], e.evidence[i - 1]);
    EXPECT_TRUE(e.joint.satisfies_invariants());
}

TEST(EvaluateNew, NoBirthsMeansUnitXi) {
    FilterConfig cfg = base_config();
    cfg.birth.mean_count = 0.0;
    const auto e = evaluate_new(agent_at(vec5(1, 1, 0, 0, 0)), Eigen::Vector3d(2, 0.3, 1.0),
                                cfg.pa_positions[0], cfg, 3);
    EXPECT_DOUBLE_EQ(e.xi, 1.0);
}

TEST(EvaluateNew, ProposalCentredOnBirthMap) {
    FilterConfig cfg = base_config();
    const Eigen::VectorXd m = vec5(1, 1, 0, 0, 0.4);
    const GaussianBelief agent = agent_at(m, 0.01);
    const Eigen::Vector3d z =
        measurement_fn(AgentState::from_vector(m), {Point(-1.0, 3.0), 0, 0, 1}, cfg.pa_positions[0]);
    const auto e = evaluate_new(agent, z, cfg.pa_positions[0], cfg, 3);
    const Point expected = birth_map(AgentState::from_vector(m), z);
    EXPECT_LT((e.proposal.mean - expected).norm(), 0.05);
    EXPECT_TRUE(e.proposal.satisfies_invariants());
    EXPECT_GT(e.xi, 1.0);
    // Same stream, same estimate.
    const auto again = evaluate_new(agent, z, cfg.pa_positions[0], cfg, 3);
    EXPECT_DOUBLE_EQ(again.xi, e.xi);
}

TEST(FuseAgent, ProductOfTwoIdenticalHalvesCovariance) {
    const GaussianBelief prior = agent_at(vec5(0, 0, 0, 0, 0), 0.5);
    const GaussianBelief g = agent_at(vec5(1, 2, 0, 0, 0.1), 0.1);
    const std::vector<GaussianBelief> two{g, g};
    const GaussianBelief f = fuse_agent(prior, two, FusionRule::kProduct);
    EXPECT_TRUE(f.mean.isApprox(g.mean, 1e-12));
    EXPECT_TRUE(f.cov.isApprox(g.cov / 2.0, 1e-12));
}

TEST(FuseAgent, ExtrinsicCombinesInformationGains) {
    const GaussianBelief prior = agent_at(vec5(0, 0, 0, 0, 0), 0.5);
    const std::vector<GaussianBelief> none{prior, prior};
    const GaussianBelief same = fuse_agent(prior, none, FusionRule::kExtrinsic);
    EXPECT_TRUE(same.mean.isApprox(prior.mean, 1e-12) || same.mean.norm() < 1e-12);
    EXPECT_TRUE(same.cov.isApprox(prior.cov, 1e-12));

    const GaussianBelief g = agent_at(vec5(0.3, -0.2, 0, 0, 0), 0.1);
    const std::vector<GaussianBelief> two{g, g};
    const GaussianBelief f = fuse_agent(prior, two, FusionRule::kExtrinsic);
    const Eigen::MatrixXd lp = prior.cov.inverse(), lg = g.cov.inverse();
    const Eigen::MatrixXd info = lp + 2.0 * (lg - lp);
    EXPECT_TRUE(f.cov.isApprox(info.inverse(), 1e-9));
    const Eigen::VectorXd mean = info.inverse() * (2.0 * lg * g.mean);
    EXPECT_TRUE(f.mean.isApprox(mean, 1e-9));
}

TEST(Update, NoMeasurementsKeepsAgentAndDecaysExistence) {
    const FilterConfig cfg = base_config();
    FilterState s = initialize(agent_at(vec5(1, 1, 0.1, 0, 0)), cfg);
    s.pbos[0].push_back(va_hypothesis(Point(-1, 4), 0.8));
    MeasurementSet empty;
    empty.per_anchor.resize(1);
    const FilterState u = update(s, empty, cfg);
    EXPECT_TRUE(u.agent.mean.isApprox(s.agent.mean, 1e-12));
    EXPECT_TRUE(u.agent.cov.isApprox(s.agent.cov, 1e-12));
    ASSERT_EQ(u.pbos[0].size(), 2u);
    const double pd = cfg.detection.p_detect;
    EXPECT_NEAR(u.pbos[0][1].existence, 0.8 * (1 - pd) / (0.8 * (1 - pd) + 0.2), 1e-12);
    EXPECT_DOUBLE_EQ(u.pbos[0][0].existence, 1.0);
}

TEST(Update, CreatesAndDeclaresVaFromMeasurement) {
    const FilterConfig cfg = base_config();
    const Scenario sc = build_scenario(ScenarioSpec{});
    FilterState s = initialize(agent_at(sc.trajectory[0].to_vector(), 0.05), cfg);
    const MeasurementSet z = generate_measurements(sc, 0);
    StepDiagnostics diag;
    s = update(s, z, cfg, &diag);
    EXPECT_GT(diag.new_pbos, 0);
    for (const auto& pbo : s.pbos[0]) {
        EXPECT_GE(pbo.existence, 0.0);
        EXPECT_LE(pbo.existence, 1.0);
        EXPECT_TRUE(pbo.belief.satisfies_invariants());
    }
    EXPECT_TRUE(s.pbos[0][0].is_pa);
}

TEST(Estimate, DeclarationThreshold) {
    const FilterConfig cfg = base_config();
    FilterState s = initialize(agent_at(vec5(1, 1, 0, 0, 0)), cfg);
    s.pbos[0].push_back(va_hypothesis(Point(-1, 4), 0.49));
    s.pbos[0].push_back(va_hypothesis(Point(8, 4), 0.51));
    const Estimate e = estimate(s, cfg);
    int vas = 0;
    for (const auto& m : e.map) {
        if (m.is_pa) continue;
        ++vas;
        EXPECT_EQ(m.position, Point(8, 4));
    }
    EXPECT_EQ(vas, 1);
}

TEST(Filter, InvariantsHoldOverScenario) {
    FilterConfig cfg = base_config();
    const Scenario sc = build_scenario(ScenarioSpec{});
    const GaussianBelief prior = draw_initial_prior(sc.trajectory[0], PriorStds{}, 4);
    FilterState s = initialize(prior, cfg);
    for (int n = 0; n < 40; ++n) {
        s = step(s, generate_measurements(sc, n), cfg);
        ASSERT_TRUE(s.agent.satisfies_invariants()) << n;
        ASSERT_TRUE(s.pbos[0][0].is_pa);
        for (const auto& pbo : s.pbos[0]) {
            ASSERT_GE(pbo.existence, cfg.p_prune);
            ASSERT_LE(pbo.existence, 1.0);
            ASSERT_TRUE(pbo.belief.satisfies_invariants());
        }
    }
    EXPECT_LT((s.agent.mean.head<2>() - sc.trajectory[39].position).norm(), 0.5);
}

TEST(Filter, DegeneratesToUnscentedKalmanFilter) {
    ScenarioSpec spec;
    spec.walls_explicit = true;
    spec.walls.clear();
    spec.detection.p_detect = 1.0;
    spec.clutter.mean_count = 0.0;
    const Scenario sc = build_scenario(spec);

    FilterConfig cfg = base_config();
    cfg.detection.p_detect = 1.0;
    cfg.clutter.mean_count = 0.0;
    cfg.birth.mean_count = 0.0;
    cfg.sigma_reg = 0.0;
    const GaussianBelief prior = draw_initial_prior(sc.trajectory[0], PriorStds{}, 9);
    FilterState s = initialize(prior, cfg);
    oracle::LosUkf ukf(prior.mean, prior.cov, cfg.pa_positions[0], cfg.noise.covariance());
    for (int n = 0; n < 20; ++n) {
        const MeasurementSet z = generate_measurements(sc, n);
        ASSERT_EQ(z.per_anchor[0].size(), 1u);
        s = step(s, z, cfg);
        if (n > 0) ukf.predict(cfg.motion.transition, cfg.motion.process_noise);
        ukf.update(z.per_anchor[0][0].z);
        Eigen::VectorXd d = s.agent.mean - ukf.mean();
        d[4] = wrap_angle(d[4]);
        EXPECT_LT(d.cwiseAbs().maxCoeff(), 1e-6) << n;
        EXPECT_LT((s.agent.cov - ukf.cov()).cwiseAbs().maxCoeff(), 1e-6) << n;
    }
}

#include <gtest/gtest.h>

#include <cmath>
#include <utility>
#include <random>

#include "../support/oracles.hpp"
#include "mpslam/association.hpp"
#include "mpslam/errors.hpp"

using namespace mpslam;

TEST(ExclusionPsi, Cases) {
    EXPECT_EQ(exclusion_psi(2, 1, 1, 2), 1);
    EXPECT_EQ(exclusion_psi(2, 0, 1, 2), 0);
    EXPECT_EQ(exclusion_psi(0, 1, 1, 2), 0);
    EXPECT_EQ(exclusion_psi(0, 0, 1, 2), 1);
    EXPECT_EQ(exclusion_psi(3, 2, 1, 2), 1);
}

TEST(ExclusionGamma, Cases) {
    EXPECT_EQ(exclusion_gamma(0, 1), 1);
    EXPECT_EQ(exclusion_gamma(3, 1), 0);
    EXPECT_EQ(exclusion_gamma(3, 0), 1);
    EXPECT_EQ(exclusion_gamma(0, 0), 1);
}

TEST(LoopyDa, SinglePboSingleMeasurementIsExact) {
    AssociationInput in;
    in.beta.resize(1, 2);
    in.beta << 0.3, 2.0;
    in.xi = Eigen::VectorXd::Constant(1, 1.5);
    const auto out = loopy_da(in);
    // Events: missed (weight b0 * x) and detected (weight b1).
    const double z = 0.3 * 1.5 + 2.0;
    EXPECT_NEAR(out.eta(0, 0), 0.3 * 1.5 / z, 1e-12);
    EXPECT_NEAR(out.eta(0, 1), 2.0 / z, 1e-12);
    EXPECT_NEAR(out.varsigma(0, 0), 0.3 * 1.5 / z, 1e-12);

    in.xi[0] = 1.0;
    const auto unit = loopy_da(in);
    EXPECT_NEAR(unit.eta(0, 0), 0.3 / 2.3, 1e-12);
    EXPECT_NEAR(unit.eta(0, 1), 2.0 / 2.3, 1e-12);
}

TEST(LoopyDa, NoMeasurementsMeansMissedDetection) {
    AssociationInput in;
    in.beta = Eigen::MatrixXd::Constant(2, 1, 0.4);
    in.xi.resize(0);
    const auto out = loopy_da(in);
    EXPECT_DOUBLE_EQ(out.eta(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(out.eta(1, 0), 1.0);
}

TEST(LoopyDa, SymmetricInputGivesUniformMeasurementMarginals) {
    AssociationInput in;
    in.beta = Eigen::MatrixXd::Constant(2, 4, 1.0);
    in.beta.col(0).setConstant(0.5);
    in.xi = Eigen::VectorXd::Constant(3, 0.7);
    const auto out = loopy_da(in);
    for (int k = 0; k < 2; ++k)
        for (int m = 2; m <= 3; ++m) EXPECT_NEAR(out.eta(k, m), out.eta(k, 1), 1e-12);
}

TEST(LoopyDa, RowScalingInvariance) {
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(0.01, 2.0);
    AssociationInput in;
    in.beta.resize(3, 4);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) in.beta(i, j) = u(gen);
    in.xi = Eigen::Vector3d(u(gen), u(gen), u(gen));
    const auto a = loopy_da(in);
    AssociationInput scaled = in;
    scaled.beta.row(1) *= 37.0;
    const auto b = loopy_da(scaled);
    EXPECT_LE((a.eta - b.eta).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(LoopyDa, RowsNormalizeEvenWithoutConvergence) {
    AssociationInput in;
    in.beta = Eigen::MatrixXd::Constant(3, 4, 1.0);
    in.xi = Eigen::VectorXd::Constant(3, 1e-3);
    DaOptions opt;
    opt.max_iterations = 1;
    const auto out = loopy_da(in, opt);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(out.eta.row(k).sum(), 1.0, 1e-12);
    for (int m = 0; m < 3; ++m) EXPECT_NEAR(out.varsigma.row(m).sum(), 1.0, 1e-12);
}

TEST(LoopyDa, ExactOnTreeStructuredGraphs) {
    std::mt19937_64 gen(123);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto& [k, m] : {std::pair{1, 1}, {1, 2}, {1, 3}, {2, 1}, {3, 1}}) {
        for (int trial = 0; trial < 100; ++trial) {
            AssociationInput in;
            in.beta.resize(k, m + 1);
            for (int i = 0; i < k; ++i)
                for (int j = 0; j <= m; ++j) in.beta(i, j) = std::exp(4.0 * (u(gen) - 0.5));
            in.xi.resize(m);
            for (int j = 0; j < m; ++j) in.xi[j] = std::exp(4.0 * (u(gen) - 0.5));
            DaOptions opt;
            opt.tolerance = 1e-12;
            const auto out = loopy_da(in, opt);
            const auto exact = oracle::brute_force_da(in.beta, in.xi);
            EXPECT_LT((out.eta - exact.eta).cwiseAbs().maxCoeff(), 1e-9);
            EXPECT_LT((out.varsigma - exact.varsigma).cwiseAbs().maxCoeff(), 1e-9);
        }
    }
}

TEST(LoopyDa, SymmetricLoopReachesAnalyticFixedPoint) {
    // All weights one on a 2x2 graph: messages satisfy z = 1 / (1 + z).
    AssociationInput in;
    in.beta = Eigen::MatrixXd::Ones(2, 3);
    in.xi = Eigen::VectorXd::Ones(2);
    DaOptions opt;
    opt.tolerance = 1e-13;
    const auto out = loopy_da(in, opt);
    const double z = (std::sqrt(5.0) - 1.0) / 2.0;
    EXPECT_NEAR(out.eta(0, 0), 1.0 / (1.0 + 2.0 * z), 1e-9);
    EXPECT_NEAR(out.eta(1, 1), z / (1.0 + 2.0 * z), 1e-9);
    // The exact marginal is 3/7; loopy propagation is close but not exact.
    const auto exact = oracle::brute_force_da(in.beta, in.xi);
    EXPECT_NEAR(exact.eta(0, 0), 3.0 / 7.0, 1e-15);
    EXPECT_LT(std::abs(out.eta(0, 0) - exact.eta(0, 0)), 0.05);
}

TEST(LoopyDa, InvalidInputThrows) {
    AssociationInput in;
    in.beta = Eigen::MatrixXd::Constant(1, 2, -1.0);
    in.xi = Eigen::VectorXd::Ones(1);
    EXPECT_THROW(loopy_da(in), DomainError);
    in.beta = Eigen::MatrixXd::Zero(1, 2);
    EXPECT_THROW(loopy_da(in), DomainError);
}

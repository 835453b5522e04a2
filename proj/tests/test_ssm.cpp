#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "slicedssm/ssm.hpp"
#include "test_util.hpp"

using namespace slicedssm;

namespace {

struct Instance {
    ModelParams params;
    Eigen::VectorXd y;
    Eigen::MatrixXd x;
};

// Three-month instance with frozen reference values.
Instance small_instance() {
    Instance in;
    in.params.beta = Eigen::VectorXd::Constant(1, 0.3);
    in.params.sigma_y2 = 0.25;
    in.params.sigma_mu2 = 0.01;
    in.params.sigma_nu2 = 0.01;
    in.params.alpha0 = Eigen::Vector2d(-4.0, 0.0);
    in.y = Eigen::Vector3d(-3.9, -3.7, -4.2);
    in.x = Eigen::MatrixXd(3, 1);
    in.x << 0.5, -1.0, 2.5;
    return in;
}

Instance random_instance(std::mt19937_64& gen, int horizon, int cols) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> z(0.0, 1.0);
    Instance in;
    in.params.beta = Eigen::VectorXd(cols);
    for (int j = 0; j < cols; ++j) in.params.beta(j) = z(gen);
    in.params.sigma_y2 = 0.05 + 2.0 * u(gen);
    in.params.sigma_mu2 = u(gen) < 0.2 ? 0.0 : 0.5 * u(gen);
    in.params.sigma_nu2 = u(gen) < 0.2 ? 0.0 : 0.1 * u(gen);
    in.params.alpha0 = Eigen::Vector2d(3.0 * z(gen), 0.3 * z(gen));
    in.x = Eigen::MatrixXd(horizon, cols);
    in.y = Eigen::VectorXd(horizon);
    for (int t = 0; t < horizon; ++t) {
        for (int j = 0; j < cols; ++j) in.x(t, j) = z(gen);
        in.y(t) = in.params.alpha0(0) + 2.0 * z(gen);
    }
    return in;
}

}  // namespace

TEST(KalmanFilter, DegenerateWhiteNoise) {
    ModelParams p;
    p.beta = Eigen::VectorXd::Zero(1);
    p.sigma_y2 = 1.0;
    p.sigma_mu2 = 0.0;
    p.sigma_nu2 = 0.0;
    const Eigen::VectorXd y = Eigen::VectorXd::Zero(2);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2, 1);
    EXPECT_NEAR(kalman_filter(p, y, x).loglik, -std::log(2.0 * std::numbers::pi), 1e-14);
    EXPECT_NEAR(exact_joint_loglik(p, y, x), -std::log(2.0 * std::numbers::pi), 1e-14);
}

TEST(KalmanFilter, ResidualInvariance) {
    ModelParams p;
    p.beta = Eigen::VectorXd::Constant(1, 1.0);
    p.sigma_y2 = 1.0;
    p.sigma_mu2 = 0.0;
    p.sigma_nu2 = 0.0;
    const Eigen::VectorXd y = Eigen::Vector2d(0.7, -1.3);
    const Eigen::MatrixXd x = y;
    EXPECT_NEAR(kalman_filter(p, y, x).loglik, -std::log(2.0 * std::numbers::pi), 1e-14);
}

TEST(KalmanFilter, FrozenThreeMonthLoglik) {
    const auto in = small_instance();
    constexpr double kFrozen = -3.1831536092789765;
    EXPECT_NEAR(oracle::loglik(in.params, in.y, in.x), kFrozen, 1e-12);
    EXPECT_NEAR(kalman_filter(in.params, in.y, in.x).loglik, kFrozen, 1e-12);
    EXPECT_NEAR(kalman_loglik(in.params, in.y, in.x), kFrozen, 1e-12);
    EXPECT_NEAR(exact_joint_loglik(in.params, in.y, in.x), kFrozen, 1e-12);
}

TEST(KalmanFilter, SingleStepClosedForm) {
    ModelParams p;
    p.beta = Eigen::VectorXd::Constant(1, 2.0);
    p.sigma_y2 = 0.4;
    p.sigma_mu2 = 0.3;
    p.sigma_nu2 = 0.2;
    p.alpha0 = Eigen::Vector2d(1.0, 0.5);
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 2.0);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(1, 1, -0.25);
    const double mean = -0.5 + 1.5;
    const double var = 0.3 + 0.4;
    const double expected = -0.5 * (std::log(2.0 * std::numbers::pi * var) + (2.0 - mean) * (2.0 - mean) / var);
    EXPECT_NEAR(kalman_filter(p, y, x).loglik, expected, 1e-13);
    EXPECT_NEAR(exact_joint_loglik(p, y, x), expected, 1e-13);
}

TEST(KalmanFilter, MatchesDenseOracleOnRandomInstances) {
    std::mt19937_64 gen(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const int horizon = 1 + trial % 10;
        const auto in = random_instance(gen, horizon, trial % 4);
        const double ll = kalman_filter(in.params, in.y, in.x).loglik;
        const double dense = oracle::loglik(in.params, in.y, in.x);
        ASSERT_LT(std::abs(ll - dense) / std::abs(dense), 1e-8) << "trial " << trial;
        ASSERT_LT(std::abs(exact_joint_loglik(in.params, in.y, in.x) - dense) / std::abs(dense), 1e-8);
    }
}

TEST(KalmanFilter, CovariancesStaySymmetricPsd) {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto in = random_instance(gen, 40, 2);
        const auto f = kalman_filter(in.params, in.y, in.x);
        for (const auto* covs : {&f.filtered_cov, &f.predicted_cov}) {
            for (const auto& c : *covs) {
                ASSERT_EQ(c(0, 1), c(1, 0));
                Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(c);
                ASSERT_GE(es.eigenvalues().minCoeff(), -1e-10);
            }
        }
        ASSERT_TRUE(std::isfinite(f.loglik));
    }
}

TEST(KalmanFilter, ShiftInvariance) {
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 20; ++trial) {
        auto in = random_instance(gen, 12, 1);
        const double base = kalman_filter(in.params, in.y, in.x).loglik;
        in.y.array() += 37.5;
        in.params.alpha0(0) += 37.5;
        EXPECT_NEAR(kalman_filter(in.params, in.y, in.x).loglik, base, 1e-9 * std::abs(base));
    }
}

TEST(KalmanFilter, InputErrors) {
    auto in = small_instance();
    Eigen::VectorXd bad = in.y;
    bad(1) = std::nan("");
    EXPECT_ERROR_KIND(kalman_filter(in.params, bad, in.x), ErrorKind::data);
    EXPECT_ERROR_KIND(kalman_filter(in.params, in.y.head(2), in.x), ErrorKind::config);
    in.params.sigma_y2 = 0.0;
    EXPECT_ERROR_KIND(kalman_filter(in.params, in.y, in.x), ErrorKind::config);
    in.params.sigma_y2 = 1.0;
    in.params.sigma_nu2 = -1.0;
    EXPECT_ERROR_KIND(kalman_filter(in.params, in.y, in.x), ErrorKind::config);
}

TEST(ExactJointLoglik, RefusesLongSeries) {
    ModelParams p;
    p.beta = Eigen::VectorXd::Zero(0);
    const Eigen::VectorXd y = Eigen::VectorXd::Zero(kMaxDenseHorizon + 1);
    const Eigen::MatrixXd x(y.size(), 0);
    EXPECT_ERROR_KIND(exact_joint_loglik(p, y, x), ErrorKind::config);
    EXPECT_NO_THROW(exact_joint_loglik(p, y.head(kMaxDenseHorizon), x.topRows(kMaxDenseHorizon)));
}

TEST(Oracle, SmootherMeanFrozen) {
    const auto in = small_instance();
    const Eigen::VectorXd m = oracle::smoother_mean(in.params, in.y, in.x);
    const std::array<double, 6> frozen{-4.00754617, -0.03774146, -4.05113564,
                                       -0.0696349,  -4.15266398, -0.0696349};
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(m(i), frozen[static_cast<std::size_t>(i)], 1e-8);
}

TEST(Ffbs, DegenerateTransitionGivesFixedPath) {
    ModelParams p;
    p.beta = Eigen::VectorXd::Zero(1);
    p.sigma_mu2 = 0.0;
    p.sigma_nu2 = 0.0;
    const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(6, -1.0, 1.0);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(6, 1);
    const auto path = ffbs_sample(p, y, x, 3);
    EXPECT_TRUE(path.isZero(0.0));
}

TEST(Ffbs, RankDeficientNoiseKeepsSlopeFixed) {
    ModelParams p;
    p.beta = Eigen::VectorXd::Zero(0);
    p.sigma_mu2 = 0.5;
    p.sigma_nu2 = 0.0;
    p.alpha0 = Eigen::Vector2d(1.0, 0.25);
    const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(20, 0.0, 4.0);
    const Eigen::MatrixXd x(20, 0);
    const auto path = ffbs_sample(p, y, x, 9);
    for (Eigen::Index t = 0; t < path.rows(); ++t) EXPECT_NEAR(path(t, 1), 0.25, 1e-9);
    EXPECT_TRUE(path.allFinite());
}

TEST(Ffbs, DeterministicGivenSeed) {
    const auto in = small_instance();
    const auto a = ffbs_sample(in.params, in.y, in.x, 42);
    const auto b = ffbs_sample(in.params, in.y, in.x, 42);
    const auto c = ffbs_sample(in.params, in.y, in.x, 43);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
}

TEST(Ffbs, MomentsMatchSmoother) {
    const auto in = small_instance();
    const Eigen::VectorXd mean = oracle::smoother_mean(in.params, in.y, in.x);
    const Eigen::MatrixXd cov = oracle::smoother_cov(in.params, in.x);
    const auto filter = kalman_filter(in.params, in.y, in.x);
    Rng rng(77);
    constexpr int kDraws = 40000;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(6);
    Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(6, 6);
    for (int i = 0; i < kDraws; ++i) {
        const auto path = ffbs_from_filter(filter, rng);
        Eigen::VectorXd v(6);
        for (int t = 0; t < 3; ++t) v.segment<2>(2 * t) = path.row(t).transpose();
        sum += v;
        outer += (v - mean) * (v - mean).transpose();
    }
    const Eigen::VectorXd emp_mean = sum / kDraws;
    const Eigen::MatrixXd emp_cov = outer / kDraws;
    for (int i = 0; i < 6; ++i) {
        const double se = std::sqrt(cov(i, i) / kDraws);
        EXPECT_LT(std::abs(emp_mean(i) - mean(i)), 4.0 * se) << "component " << i;
        EXPECT_NEAR(emp_cov(i, i) / cov(i, i), 1.0, 0.05) << "component " << i;
    }
}

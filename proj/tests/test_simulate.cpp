#include <cmath>

#include <gtest/gtest.h>

#include "slicedssm/simulate.hpp"
#include "test_util.hpp"

using namespace slicedssm;

TEST(DgpSpec, ThresholdStudyValues) {
    const auto s = DgpSpec::threshold_study();
    EXPECT_EQ(s.beta_upper, 1.0);
    EXPECT_EQ(s.beta_lower, 0.1);
    EXPECT_EQ(s.sigma_y2, 0.25);
    EXPECT_EQ(s.sigma_mu2, 0.01);
    EXPECT_EQ(s.sigma_nu2, 0.01);
    EXPECT_EQ(s.alpha0, Eigen::Vector2d(-4.0, 0.0));
    EXPECT_EQ(s.threshold, 2.0);
    EXPECT_EQ(s.horizon, 200);
}

TEST(DgpSpec, Validation) {
    DgpSpec s;
    s.horizon = 0;
    EXPECT_ERROR_KIND(s.validate(), ErrorKind::config);
    s = DgpSpec{};
    s.threshold = std::numeric_limits<double>::infinity();
    EXPECT_ERROR_KIND(s.validate(), ErrorKind::config);
    s = DgpSpec{};
    s.covariates = Eigen::VectorXd::Zero(3);
    EXPECT_ERROR_KIND(s.validate(), ErrorKind::config);
}

TEST(SimulateDgp, DeterministicCollapse) {
    DgpSpec s;
    s.sigma_y2 = s.sigma_mu2 = s.sigma_nu2 = 0.0;
    s.beta_lower = s.beta_upper = 0.0;
    s.horizon = 25;
    const auto sim = simulate_dgp(s);
    for (Eigen::Index t = 0; t < 25; ++t) {
        EXPECT_EQ(sim.y(t), -4.0);
        EXPECT_EQ(sim.mu(t), -4.0);
        EXPECT_EQ(sim.nu(t), 0.0);
    }
}

TEST(SimulateDgp, BitReproducible) {
    DgpSpec s;
    s.seed = 99;
    const auto a = simulate_dgp(s);
    const auto b = simulate_dgp(s);
    EXPECT_EQ(a.y, b.y);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.mu, b.mu);
    s.seed = 100;
    EXPECT_NE(simulate_dgp(s).y, a.y);
}

TEST(SimulateDgp, ShocksRaiseTheResponse) {
    DgpSpec s;
    s.horizon = 5000;
    s.seed = 5;
    const auto sim = simulate_dgp(s);
    double shock_sum = 0.0;
    double calm_sum = 0.0;
    int shocks = 0;
    for (Eigen::Index t = 0; t < sim.horizon(); ++t) {
        const double excess = sim.y(t) - sim.mu(t);
        if (sim.shock[static_cast<std::size_t>(t)]) {
            shock_sum += excess;
            ++shocks;
        } else {
            calm_sum += excess;
        }
    }
    ASSERT_GT(shocks, 0);
    EXPECT_GT(shock_sum / shocks, calm_sum / static_cast<double>(sim.horizon() - shocks));
}

TEST(SimulateDgp, InfiniteThresholdUsesLowerCoefficientOnly) {
    DgpSpec s;
    s.threshold = 1e300;
    s.sigma_y2 = s.sigma_mu2 = s.sigma_nu2 = 0.0;
    s.horizon = 50;
    const auto sim = simulate_dgp(s);
    EXPECT_TRUE(sim.design.col(1).isZero(0.0));
    for (Eigen::Index t = 0; t < 50; ++t) EXPECT_DOUBLE_EQ(sim.y(t), -4.0 + 0.1 * sim.x(t));
}

TEST(SimulateDgp, ObservationNoiseVariance) {
    DgpSpec s;
    s.horizon = 100000;
    s.seed = 8;
    const auto sim = simulate_dgp(s);
    const Eigen::VectorXd eps =
        sim.y - sim.mu - sim.design * Eigen::Vector2d(s.beta_lower, s.beta_upper);
    const double var = (eps.array() - eps.mean()).square().mean();
    EXPECT_NEAR(var / s.sigma_y2, 1.0, 0.05);
}

TEST(SimulateDgp, ExceedanceRate) {
    DgpSpec s;
    s.horizon = 200000;
    s.seed = 12;
    const auto sim = simulate_dgp(s);
    double count = 0;
    for (bool b : sim.shock) count += b ? 1 : 0;
    const double p = 0.022750131948179;
    const double n = static_cast<double>(s.horizon);
    EXPECT_NEAR(count / n, p, 3.0 * std::sqrt(p * (1.0 - p) / n));
}

TEST(SimulateDgp, RatesAndLaggedCovariates) {
    DgpSpec s;
    s.covariate_lag = 3;
    s.horizon = 30;
    const auto sim = simulate_dgp(s);
    for (Eigen::Index t = 0; t < 30; ++t) {
        EXPECT_NEAR(sim.rate(t), 1.0 / (1.0 + std::exp(-sim.y(t))), 1e-15);
        EXPECT_NEAR(sim.rate_mu(t), 1.0 / (1.0 + std::exp(-sim.mu(t))), 1e-15);
        if (t >= 3) EXPECT_EQ(sim.x(t), sim.g(t - 3));
    }
}

TEST(SimulateDgp, SuppliedCovariates) {
    DgpSpec s;
    s.horizon = 4;
    s.covariates = Eigen::Vector4d(0.0, 3.0, -1.0, 2.0);
    const auto sim = simulate_dgp(s);
    EXPECT_EQ(sim.x, *s.covariates);
    EXPECT_EQ(sim.design(1, 1), 3.0);
    EXPECT_EQ(sim.design(3, 0), 2.0);  // not strictly above the threshold
}

TEST(SliceCovariate, Partition) {
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(41, -4.0, 4.0);
    const auto d = slice_covariate(x, 1.0);
    for (Eigen::Index t = 0; t < x.size(); ++t) {
        EXPECT_EQ(d(t, 0) * d(t, 1), 0.0);
        EXPECT_EQ(d(t, 0) + d(t, 1), x(t));
        EXPECT_EQ(d(t, 1) != 0.0, x(t) > 1.0);
    }
}

TEST(ToPanel, FeedsTheDataPipeline) {
    DgpSpec s;
    s.covariate_lag = 3;
    s.horizon = 60;
    s.seed = 4;
    const auto sim = simulate_dgp(s);
    const TransformSpec tspec;
    const auto panel = to_panel(sim, tspec, "SIM", {2001, 6});
    ASSERT_EQ(panel.size(), 60u);
    EXPECT_EQ(panel.months.back(), (YearMonth{2006, 5}));
    for (std::size_t t = 0; t < panel.size(); ++t) {
        EXPECT_NEAR(transform_loss(panel.loss[t], tspec), panel.g[t], 1e-12);
        EXPECT_EQ(inverse_response(panel.y[t], tspec.link), panel.rate[t]);
    }
    const auto d = build_design(panel, SliceSpec{{3}, s.threshold, ThresholdScale::transformed});
    for (Eigen::Index r = 0; r < d.rows(); ++r) {
        const auto t = static_cast<Eigen::Index>(d.first_row) + r;
        EXPECT_EQ(d.x(r, 0), sim.design(t, 0));
        EXPECT_EQ(d.x(r, 1), sim.design(t, 1));
    }
}

TEST(RollingStudy, RecordsEveryWindow) {
    DgpSpec s;
    s.horizon = 40;
    s.seed = 3;
    GibbsConfig cfg;
    cfg.n_iter = 300;
    cfg.burn_in = 100;
    const auto est = rolling_reestimation_study(s, PriorSpec{}, cfg, 35);
    ASSERT_EQ(est.size(), 5u);
    EXPECT_EQ(est.front().t0, 35);
    EXPECT_EQ(est.back().t0, 39);
    const auto sim = simulate_dgp(s);
    for (const auto& e : est) {
        EXPECT_EQ(e.y_next, sim.y(e.t0));
        EXPECT_LE(e.pred_q025, e.pred_mean);
        EXPECT_GE(e.pred_q975, e.pred_mean);
        EXPECT_GE(e.upper_inclusion, 0.0);
        EXPECT_LE(e.upper_inclusion, 1.0);
    }
    EXPECT_ERROR_KIND(rolling_reestimation_study(s, PriorSpec{}, cfg, 40), ErrorKind::config);
}

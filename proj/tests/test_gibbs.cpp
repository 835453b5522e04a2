#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "slicedssm/gibbs.hpp"
#include "slicedssm/simulate.hpp"
#include "test_util.hpp"

using namespace slicedssm;

namespace {

struct Moments {
    double mean = 0.0;
    double var = 0.0;
};

template <class F>
Moments moments(int n, F&& draw) {
    double sum = 0.0;
    double sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = draw();
        sum += v;
        sumsq += v * v;
    }
    Moments m;
    m.mean = sum / n;
    m.var = sumsq / n - m.mean * m.mean;
    return m;
}

Eigen::MatrixXd random_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = z(gen);
    }
    return m;
}

GibbsConfig short_config(std::uint64_t seed) {
    GibbsConfig cfg;
    cfg.n_iter = 600;
    cfg.burn_in = 200;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST(PriorSpec, Validation) {
    PriorSpec p;
    EXPECT_NO_THROW(p.validate());
    p.rho = 1.0;
    EXPECT_ERROR_KIND(p.validate(), ErrorKind::config);
    p = PriorSpec{};
    p.tau2 = 0.0;
    EXPECT_ERROR_KIND(p.validate(), ErrorKind::config);
    p = PriorSpec{};
    p.b = 0.0;
    EXPECT_ERROR_KIND(p.validate(), ErrorKind::config);
}

TEST(GibbsConfig, Validation) {
    GibbsConfig c;
    EXPECT_EQ(c.kept(), 3000);
    c.burn_in = c.n_iter;
    EXPECT_ERROR_KIND(c.validate(), ErrorKind::config);
}

TEST(SampleBeta, ConjugateSingleColumn) {
    const Eigen::VectorXd r = Eigen::VectorXd::Ones(4);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(4, 1);
    const Eigen::VectorXi g = Eigen::VectorXi::Ones(1);
    Rng rng(1);
    const auto m = moments(200000, [&] { return sample_beta(r, x, g, 1.0, PriorSpec{}, rng)(0); });
    EXPECT_NEAR(m.mean, 0.8, 0.01);
    EXPECT_NEAR(m.var, 0.2, 0.004);
}

TEST(SampleBeta, ZeroSignalCentersOnZero) {
    std::mt19937_64 gen(3);
    const Eigen::MatrixXd x = random_matrix(gen, 30, 2);
    const Eigen::VectorXd r = Eigen::VectorXd::Zero(30);
    const Eigen::VectorXi g = Eigen::VectorXi::Ones(2);
    Rng rng(2);
    const auto m = moments(50000, [&] { return sample_beta(r, x, g, 1.0, PriorSpec{}, rng)(1); });
    EXPECT_NEAR(m.mean, 0.0, 0.005);
}

TEST(SampleBeta, InactiveCoordinatesAreExactlyZero) {
    std::mt19937_64 gen(4);
    const Eigen::MatrixXd x = random_matrix(gen, 20, 4);
    const Eigen::VectorXd r = random_matrix(gen, 20, 1);
    Rng rng(5);
    Eigen::VectorXi g(4);
    g << 1, 0, 1, 0;
    for (int i = 0; i < 100; ++i) {
        const auto b = sample_beta(r, x, g, 0.7, PriorSpec{}, rng);
        ASSERT_EQ(b(1), 0.0);
        ASSERT_EQ(b(3), 0.0);
        ASSERT_NE(b(0), 0.0);
    }
    EXPECT_TRUE(sample_beta(r, x, Eigen::VectorXi::Zero(4), 0.7, PriorSpec{}, rng).isZero(0.0));
}

TEST(SampleBeta, FlatSlabLimitIsLeastSquares) {
    std::mt19937_64 gen(6);
    const Eigen::MatrixXd x = random_matrix(gen, 25, 2);
    const Eigen::VectorXd r = x * Eigen::Vector2d(0.7, -1.2) + 0.3 * random_matrix(gen, 25, 1);
    const Eigen::VectorXd ols = x.colPivHouseholderQr().solve(r);
    PriorSpec prior;
    prior.tau2 = 1e10;
    Rng rng(7);
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    constexpr int kDraws = 100000;
    for (int i = 0; i < kDraws; ++i) sum += sample_beta(r, x, Eigen::VectorXi::Ones(2), 0.09, prior, rng);
    const Eigen::MatrixXd cov = 0.09 * (x.transpose() * x).inverse();
    for (int j = 0; j < 2; ++j) {
        EXPECT_NEAR(sum(j) / kDraws, ols(j), 4.0 * std::sqrt(cov(j, j) / kDraws));
    }
}

TEST(SampleVariance, InverseGammaMean) {
    Eigen::VectorXd resid(4);
    resid << 1.0, -1.0, 1.0, -1.0;
    PriorSpec prior;
    Rng rng(8);
    const auto m = moments(1000000, [&] { return sample_variance(resid, prior, rng); });
    EXPECT_NEAR(m.mean / (2.01 / 1.01), 1.0, 0.02);
}

TEST(SampleVariance, InverseGammaMeanLongSeries) {
    const Eigen::VectorXd resid = Eigen::VectorXd::Constant(40, 0.5);
    PriorSpec prior;
    Rng rng(10);
    const auto m = moments(200000, [&] { return sample_variance(resid, prior, rng); });
    EXPECT_NEAR(m.mean / ((0.01 + 5.0) / (20.01 - 1.0)), 1.0, 0.01);
}

TEST(SampleVariance, ZeroResidualsCollapseTowardZero) {
    PriorSpec prior;
    Rng rng(9);
    const auto m = moments(100000, [&] { return sample_variance(Eigen::VectorXd::Zero(4), prior, rng); });
    EXPECT_NEAR(m.mean, 0.01 / 1.01, 0.0005);
    for (int i = 0; i < 1000; ++i) ASSERT_GT(sample_variance(Eigen::VectorXd::Zero(4), prior, rng), 0.0);
}

TEST(SampleVariance, ShapeFollowsLength) {
    // Scaling the residual count by 4 with the same sum of squares moves the
    // mean from scale/(T/2+a-1) accordingly.
    PriorSpec prior;
    Eigen::VectorXd resid = Eigen::VectorXd::Constant(16, 0.5);
    Rng rng(10);
    const auto m = moments(200000, [&] { return sample_variance(resid, prior, rng); });
    EXPECT_NEAR(m.mean / ((0.01 + 2.0) / (8.01 - 1.0)), 1.0, 0.01);
    EXPECT_ERROR_KIND(sample_variance(Eigen::VectorXd(0), prior, rng), ErrorKind::config);
}

TEST(InclusionProbability, NullColumnGivesPrior) {
    std::mt19937_64 gen(11);
    Eigen::MatrixXd x = random_matrix(gen, 30, 3);
    x.col(1).setZero();
    const Eigen::VectorXd r = random_matrix(gen, 30, 1);
    for (double rho : {0.1, 0.5, 0.83}) {
        PriorSpec prior;
        prior.rho = rho;
        EXPECT_EQ(inclusion_probability(r, x, Eigen::VectorXi::Ones(3), 1, 0.5, prior), rho);
        EXPECT_EQ(inclusion_probability(r, x, Eigen::Vector3i(1, 0, 0), 1, 0.5, prior), rho);
    }
}

TEST(InclusionProbability, MatchesDenseMarginalLikelihood) {
    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index p = 1 + trial % 4;
        const Eigen::MatrixXd x = random_matrix(gen, 15, p);
        const Eigen::VectorXd r = x * random_matrix(gen, p, 1) * 0.3 + random_matrix(gen, 15, 1);
        PriorSpec prior;
        prior.rho = u(gen);
        prior.tau2 = 0.2 + 2.0 * u(gen);
        Eigen::VectorXi g(p);
        for (Eigen::Index j = 0; j < p; ++j) g(j) = u(gen) < 0.5 ? 1 : 0;
        const double s2 = 0.3 + u(gen);
        for (Eigen::Index j = 0; j < p; ++j) {
            ASSERT_NEAR(inclusion_probability(r, x, g, j, s2, prior),
                        oracle::inclusion_dense(r, x, g, j, s2, prior), 1e-10);
        }
    }
}

TEST(InclusionProbability, StrongSignalIsIncluded) {
    std::mt19937_64 gen(13);
    const Eigen::MatrixXd x = random_matrix(gen, 50, 1);
    const Eigen::VectorXd r = 2.0 * x + 0.1 * random_matrix(gen, 50, 1);
    const double pi = inclusion_probability(r, x, Eigen::VectorXi::Ones(1), 0, 0.01, PriorSpec{});
    EXPECT_GT(pi, 0.99);
    EXPECT_NEAR(pi, oracle::inclusion_dense(r, x, Eigen::VectorXi::Ones(1), 0, 0.01, PriorSpec{}), 1e-12);
}

TEST(SampleGamma, TinyPriorExcludesEverything) {
    std::mt19937_64 gen(14);
    const Eigen::MatrixXd x = random_matrix(gen, 40, 5);
    const Eigen::VectorXd r = random_matrix(gen, 40, 1);
    PriorSpec prior;
    prior.rho = 1e-12;
    Rng rng(15);
    for (int i = 0; i < 50; ++i) {
        EXPECT_TRUE(sample_gamma(r, x, Eigen::VectorXi::Ones(5), 1.0, prior, rng).isZero());
    }
}

TEST(SampleGamma, NullColumnsFlipAtPriorRate) {
    const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(10, 1);
    const Eigen::VectorXd r = Eigen::VectorXd::Ones(10);
    PriorSpec prior;
    prior.rho = 0.3;
    Rng rng(16);
    int on = 0;
    constexpr int kDraws = 100000;
    for (int i = 0; i < kDraws; ++i) on += sample_gamma(r, x, Eigen::VectorXi::Ones(1), 1.0, prior, rng)(0);
    EXPECT_NEAR(on / static_cast<double>(kDraws), 0.3, 4.0 * std::sqrt(0.21 / kDraws));
}

TEST(RunGibbs, ChainInvariants) {
    DgpSpec spec = DgpSpec::threshold_study();
    spec.horizon = 80;
    spec.seed = 21;
    const auto sim = simulate_dgp(spec);
    auto cfg = short_config(3);
    cfg.alpha0 = spec.alpha0;
    const auto chain = run_gibbs(sim.y, sim.design, PriorSpec{}, cfg, {"beta_l", "beta_u"});
    ASSERT_EQ(chain.size(), 400u);
    EXPECT_EQ(chain.iteration.front(), 201);
    EXPECT_EQ(chain.iteration.back(), 600);
    ASSERT_EQ(chain.paths.size(), 400u);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(chain.size()); ++i) {
        for (Eigen::Index j = 0; j < 2; ++j) {
            ASSERT_EQ(chain.beta(i, j) != 0.0, chain.gamma(i, j) == 1);
        }
        ASSERT_GT(chain.sigma_y2(i), 0.0);
        ASSERT_GT(chain.sigma_mu2(i), 0.0);
        ASSERT_GT(chain.sigma_nu2(i), 0.0);
        ASSERT_TRUE(std::isfinite(chain.loglik(i)));
        ASSERT_EQ(chain.last_state.row(i), chain.paths[static_cast<std::size_t>(i)].bottomRows(1));
        ASSERT_NEAR(chain.loglik(i), kalman_loglik(chain.params_at(static_cast<std::size_t>(i)), sim.y, sim.design),
                    1e-9 * std::abs(chain.loglik(i)));
    }
}

TEST(RunGibbs, DeterministicForSeed) {
    DgpSpec spec;
    spec.horizon = 60;
    const auto sim = simulate_dgp(spec);
    const auto a = run_gibbs(sim.y, sim.design, PriorSpec{}, short_config(5));
    const auto b = run_gibbs(sim.y, sim.design, PriorSpec{}, short_config(5));
    const auto c = run_gibbs(sim.y, sim.design, PriorSpec{}, short_config(6));
    EXPECT_EQ(chain_csv(a), chain_csv(b));
    EXPECT_NE(chain_csv(a), chain_csv(c));
}

TEST(RunGibbs, NoCovariateSignal) {
    DgpSpec spec;
    spec.horizon = 100;
    spec.beta_lower = 0.0;
    spec.beta_upper = 0.0;
    spec.seed = 31;
    const auto sim = simulate_dgp(spec);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(100, 2);
    auto cfg = short_config(7);
    cfg.n_iter = 2200;
    cfg.alpha0 = spec.alpha0;
    const auto chain = run_gibbs(sim.y, x, PriorSpec{}, cfg);
    for (Eigen::Index j = 0; j < 2; ++j) {
        EXPECT_LT(std::abs(chain.beta.col(j).mean()), 0.1);
        EXPECT_NEAR(chain.gamma.col(j).cast<double>().mean(), 0.5, 0.06);
    }
}

TEST(RunGibbs, FlatSlabApproachesGls) {
    // With inclusion forced and a flat slab the coefficient posterior mean is
    // the GLS fit under the model covariance.
    DgpSpec spec;
    spec.horizon = 150;
    spec.threshold = 1e300;
    spec.beta_lower = 0.6;
    spec.seed = 41;
    const auto sim = simulate_dgp(spec);
    const Eigen::MatrixXd x = sim.design.leftCols(1);
    PriorSpec prior;
    prior.tau2 = 1e4;
    prior.rho = 1.0 - 1e-9;
    GibbsConfig cfg;
    cfg.n_iter = 4000;
    cfg.burn_in = 500;
    cfg.seed = 11;
    cfg.alpha0 = spec.alpha0;
    cfg.store_paths = false;
    const auto chain = run_gibbs(sim.y, x, prior, cfg);

    ModelParams truth;
    truth.beta = Eigen::VectorXd::Zero(1);
    truth.sigma_y2 = spec.sigma_y2;
    truth.sigma_mu2 = spec.sigma_mu2;
    truth.sigma_nu2 = spec.sigma_nu2;
    truth.alpha0 = spec.alpha0;
    const auto j = oracle::joint(truth, x);
    const auto ldlt = j.y_cov.ldlt();
    const double gls = (x.transpose() * ldlt.solve(sim.y - j.y_mean))(0) /
                       (x.transpose() * ldlt.solve(x))(0, 0);
    EXPECT_NEAR(chain.beta.col(0).mean(), gls, 0.03);
    EXPECT_EQ(chain.gamma.col(0).minCoeff(), 1);
}

TEST(RunGibbs, ErrorsCarryIterationIndex) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(10);
    y(4) = std::numeric_limits<double>::infinity();
    try {
        run_gibbs(y, Eigen::MatrixXd::Zero(10, 1), PriorSpec{}, short_config(1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::data);
        EXPECT_NE(std::string(e.what()).find("gibbs iteration 1"), std::string::npos) << e.what();
    }
    EXPECT_ERROR_KIND(run_gibbs(y.head(5), Eigen::MatrixXd::Zero(10, 1), PriorSpec{}, short_config(1)),
                      ErrorKind::config);
}

TEST(ChainCsv, RoundTripAndNames) {
    EXPECT_EQ(gamma_name("beta_u_lag3"), "gamma_u_lag3");
    EXPECT_EQ(gamma_name("beta1"), "gamma1");
    DgpSpec spec;
    spec.horizon = 40;
    const auto sim = simulate_dgp(spec);
    const auto chain = run_gibbs(sim.y, sim.design, PriorSpec{}, short_config(2), {"beta_l", "beta_u"});
    testutil::TempDir dir;
    write_chain_csv(dir / "chain.csv", chain);
    const auto back = read_chain_csv(dir / "chain.csv");
    EXPECT_EQ(back.names, chain.names);
    EXPECT_EQ(back.iteration, chain.iteration);
    EXPECT_EQ(back.beta, chain.beta);
    EXPECT_EQ(back.gamma, chain.gamma);
    EXPECT_EQ(back.sigma_y2, chain.sigma_y2);
    EXPECT_EQ(back.loglik, chain.loglik);
    EXPECT_EQ(chain_csv(back), testutil::slurp(dir / "chain.csv"));
    const std::string header = chain_csv(chain).substr(0, chain_csv(chain).find('\n'));
    EXPECT_EQ(header, "iteration,beta_l,beta_u,gamma_l,gamma_u,sigma_y2,sigma_mu2,sigma_nu2,loglik");

    write_latent_csv(dir / "latent.csv", chain);
    const auto latent = testutil::slurp(dir / "latent.csv");
    EXPECT_EQ(latent.substr(0, latent.find('\n')), "iteration,t,mu,nu");
    EXPECT_EQ(std::count(latent.begin(), latent.end(), '\n'), 1 + 400 * 40);

    auto no_paths = short_config(2);
    no_paths.store_paths = false;
    const auto bare = run_gibbs(sim.y, sim.design, PriorSpec{}, no_paths);
    EXPECT_ERROR_KIND(write_latent_csv(dir / "x.csv", bare), ErrorKind::config);
}

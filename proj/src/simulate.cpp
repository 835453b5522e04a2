#include "slicedssm/simulate.hpp"

#include <cmath>

#include "slicedssm/error.hpp"
#include "slicedssm/forecast.hpp"
#include "slicedssm/rng.hpp"

namespace slicedssm {

void DgpSpec::validate() const {
    if (horizon < 1) throw config_error("simulate: horizon must be at least 1");
    if (!std::isfinite(threshold)) throw config_error("simulate: threshold must be finite");
    if (covariate_lag < 0) throw config_error("simulate: covariate_lag must be nonnegative");
    for (double v : {sigma_y2, sigma_mu2, sigma_nu2}) {
        if (!std::isfinite(v) || v < 0.0) throw config_error("simulate: variances must be finite and >= 0");
    }
    if (!std::isfinite(beta_upper) || !std::isfinite(beta_lower) || !alpha0.allFinite()) {
        throw config_error("simulate: coefficients and alpha0 must be finite");
    }
    if (covariates) {
        if (covariates->size() != horizon + covariate_lag) {
            throw config_error("simulate: supplied covariates must have length horizon + covariate_lag");
        }
        if (!covariates->allFinite()) throw data_error("simulate: supplied covariates must be finite");
    }
}

DgpSpec DgpSpec::threshold_study() { return DgpSpec{}; }

Eigen::MatrixXd slice_covariate(const Eigen::VectorXd& x, double threshold) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.size(), 2);
    for (Eigen::Index t = 0; t < x.size(); ++t) out(t, x(t) > threshold ? 1 : 0) = x(t);
    return out;
}

namespace {

double logistic(double v) { return inverse_response(v, ResponseLink::logit); }

}  // namespace

SimulatedSeries simulate_dgp(const DgpSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const Eigen::Index n = spec.horizon;
    const Eigen::Index lag = spec.covariate_lag;

    Eigen::VectorXd draws;
    if (spec.covariates) {
        draws = *spec.covariates;
    } else {
        draws.resize(n + lag);
        for (Eigen::Index i = 0; i < n + lag; ++i) draws(i) = rng.normal();
    }

    SimulatedSeries sim;
    sim.g = draws.tail(n);
    sim.x = draws.head(n);
    sim.design = slice_covariate(sim.x, spec.threshold);
    sim.y.resize(n);
    sim.mu.resize(n);
    sim.nu.resize(n);
    sim.rate.resize(n);
    sim.rate_mu.resize(n);
    sim.shock.resize(static_cast<std::size_t>(n));

    const double sd_y = std::sqrt(spec.sigma_y2);
    const double sd_mu = std::sqrt(spec.sigma_mu2);
    const double sd_nu = std::sqrt(spec.sigma_nu2);
    double mu = spec.alpha0(0);
    double nu = spec.alpha0(1);
    for (Eigen::Index t = 0; t < n; ++t) {
        const double eta_mu = sd_mu * rng.normal();
        const double eta_nu = sd_nu * rng.normal();
        mu = mu + nu + eta_mu;
        nu = nu + eta_nu;
        sim.mu(t) = mu;
        sim.nu(t) = nu;
        const double signal = sim.design(t, 0) * spec.beta_lower + sim.design(t, 1) * spec.beta_upper;
        sim.y(t) = signal + mu + sd_y * rng.normal();
        sim.rate(t) = logistic(sim.y(t));
        sim.rate_mu(t) = logistic(mu);
        sim.shock[static_cast<std::size_t>(t)] = sim.x(t) > spec.threshold;
    }
    return sim;
}

SeriesPanel to_panel(const SimulatedSeries& sim, const TransformSpec& spec,
                     const std::string& state, YearMonth start) {
    spec.validate();
    SeriesPanel panel;
    panel.state = state;
    for (Eigen::Index t = 0; t < sim.horizon(); ++t) {
        panel.months.push_back(start.plus(static_cast<int>(t)));
        panel.y.push_back(sim.y(t));
        panel.rate.push_back(inverse_response(sim.y(t), spec.link));
        panel.g.push_back(sim.g(t));
        panel.loss.push_back(std::exp(spec.mu_x + spec.sigma_x * sim.g(t)));
    }
    return panel;
}

std::vector<RollingEstimate> rolling_reestimation_study(const DgpSpec& spec,
                                                        const PriorSpec& prior,
                                                        const GibbsConfig& config, int t_start,
                                                        std::optional<int> t_end) {
    const auto sim = simulate_dgp(spec);
    const int n = spec.horizon;
    const int last = t_end.value_or(n - 1);
    if (t_start < 1 || t_start > last || last > n - 1) {
        throw config_error("rolling study: need 1 <= t_start <= t_end <= horizon - 1");
    }
    const std::vector<std::string> names{"beta_l", "beta_u"};
    std::vector<RollingEstimate> out;
    bool shock_seen = false;
    for (int t = 0; t < t_start - 1; ++t) shock_seen = shock_seen || sim.shock[static_cast<std::size_t>(t)];

    for (int t0 = t_start; t0 <= last; ++t0) {
        shock_seen = shock_seen || sim.shock[static_cast<std::size_t>(t0 - 1)];
        GibbsConfig cfg = config;
        cfg.seed = derive_seed(config.seed, static_cast<std::uint64_t>(t0));
        cfg.alpha0 = spec.alpha0;
        cfg.store_paths = false;
        ChainOutput chain;
        try {
            chain = run_gibbs(sim.y.head(t0), sim.design.topRows(t0), prior, cfg, names);
        } catch (const Error& e) {
            throw e.with_context("t0=" + std::to_string(t0));
        }
        Rng rng(derive_seed(cfg.seed, 0x5eedULL));
        const auto pred =
            posterior_predictive(chain, sim.design.row(t0).transpose(), ResponseLink::logit, rng, t0);

        RollingEstimate est;
        est.t0 = t0;
        est.beta_lower_mean = chain.beta.col(0).mean();
        est.beta_upper_mean = chain.beta.col(1).mean();
        est.lower_inclusion = chain.gamma.col(0).cast<double>().mean();
        est.upper_inclusion = chain.gamma.col(1).cast<double>().mean();
        est.pred_mean = pred.mean_y();
        est.pred_q025 = pred.quantile_y(0.025);
        est.pred_q975 = pred.quantile_y(0.975);
        est.y_next = sim.y(t0);
        est.shock_seen = shock_seen;
        out.push_back(est);
    }
    return out;
}

}  // namespace slicedssm

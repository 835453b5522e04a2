#pragma once

// Synthetic series from the sliced local-linear-trend model, for tests,
// calibration and end-to-end runs through the data pipeline.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slicedssm/data.hpp"
#include "slicedssm/gibbs.hpp"

namespace slicedssm {

struct DgpSpec {
    double beta_upper = 1.0;
    double beta_lower = 0.1;
    double sigma_y2 = 0.25;
    double sigma_mu2 = 1e-2;
    double sigma_nu2 = 1e-2;
    Eigen::Vector2d alpha0 = Eigen::Vector2d(-4.0, 0.0);
    int horizon = 200;
    /// Slicing threshold on the covariate scale; X_t > threshold is a shock.
    double threshold = 2.0;
    /// y_t uses the covariate drawn `covariate_lag` months earlier, so the
    /// emitted loss-like series g lines up with a lagged design.
    int covariate_lag = 0;
    /// Loss-like series on the covariate scale, length horizon +
    /// covariate_lag (the first covariate_lag values precede month 1).
    /// Standard normal draws when absent.
    std::optional<Eigen::VectorXd> covariates;
    std::uint64_t seed = 1;

    void validate() const;

    /// beta_u = 1, beta_l = 0.1, alpha0 = (-4, 0), sigma_y2 = 0.25,
    /// sigma_mu2 = sigma_nu2 = 0.01, threshold 2, iid N(0, 1) covariates.
    static DgpSpec threshold_study();
};

struct SimulatedSeries {
    Eigen::VectorXd y;
    Eigen::VectorXd x;       // covariate entering y_t
    Eigen::MatrixXd design;  // (lower, upper) slices of x, T x 2
    Eigen::VectorXd g;       // loss-like series indexed by month, length T
    Eigen::VectorXd mu;
    Eigen::VectorXd nu;
    Eigen::VectorXd rate;     // logistic(y)
    Eigen::VectorXd rate_mu;  // logistic(mu)
    std::vector<bool> shock;  // x_t > threshold

    Eigen::Index horizon() const { return y.size(); }
};

/// (lower, upper) columns: x_t lands in the upper column iff x_t > threshold.
Eigen::MatrixXd slice_covariate(const Eigen::VectorXd& x, double threshold);

SimulatedSeries simulate_dgp(const DgpSpec& spec);

/// Pipeline panel for a simulated series: rate = logistic(y), g as drawn, and
/// loss_usd = exp(mu_x + sigma_x g) under `spec`.
SeriesPanel to_panel(const SimulatedSeries& sim, const TransformSpec& spec,
                     const std::string& state, YearMonth start);

struct RollingEstimate {
    int t0 = 0;
    double beta_upper_mean = 0.0;
    double beta_lower_mean = 0.0;
    double upper_inclusion = 0.0;
    double lower_inclusion = 0.0;
    double pred_mean = 0.0;  // one-step predictive mean of y_{t0+1}
    double pred_q025 = 0.0;
    double pred_q975 = 0.0;
    double y_next = 0.0;
    bool shock_seen = false;  // any x_t > threshold for t <= t0
};

/// Refits on 1..t0 for t0 = t_start..t_end (default horizon - 1) and records
/// the coefficient posterior means and one-step predictive summary.
std::vector<RollingEstimate> rolling_reestimation_study(const DgpSpec& spec,
                                                        const PriorSpec& prior,
                                                        const GibbsConfig& config, int t_start,
                                                        std::optional<int> t_end = std::nullopt);

}  // namespace slicedssm

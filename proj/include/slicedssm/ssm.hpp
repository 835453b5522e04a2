#pragma once

// Local-linear-trend state-space model with a linear covariate term:
//
//   y_t     = x_t' beta + mu_t + eps_t,       eps_t ~ N(0, sigma_y2)
//   alpha_t = A alpha_{t-1} + eta_t,          eta_t ~ N(0, diag(sigma_mu2, sigma_nu2))
//
// with alpha_t = (mu_t, nu_t), A = [[1, 1], [0, 1]] and a known, fixed
// alpha_0. Zero state variances are allowed (deterministic trend).

#include <vector>

#include <Eigen/Dense>

#include "slicedssm/rng.hpp"

namespace slicedssm {

struct ModelParams {
    Eigen::VectorXd beta;
    double sigma_y2 = 1.0;
    double sigma_mu2 = 1.0;
    double sigma_nu2 = 1.0;
    Eigen::Vector2d alpha0 = Eigen::Vector2d::Zero();

    /// Throws a config error unless sigma_y2 > 0, the state variances are
    /// nonnegative and everything is finite.
    void validate() const;
};

Eigen::Matrix2d transition_matrix();
Eigen::Matrix2d state_noise(const ModelParams& params);

/// (mu_t, nu_t) for t = 1..T, one row per month.
using LatentPath = Eigen::Matrix<double, Eigen::Dynamic, 2>;

struct FilterOutput {
    std::vector<Eigen::Vector2d> predicted_mean;  // E[alpha_t | y_{1:t-1}]
    std::vector<Eigen::Matrix2d> predicted_cov;
    std::vector<Eigen::Vector2d> filtered_mean;   // E[alpha_t | y_{1:t}]
    std::vector<Eigen::Matrix2d> filtered_cov;
    Eigen::VectorXd y_pred_mean;  // one-step predictive mean of y_t
    Eigen::VectorXd y_pred_var;
    double loglik = 0.0;
};

/// Exact Kalman filter with a Joseph-form covariance update. `loglik` is the
/// sum of log one-step predictive densities of y.
FilterOutput kalman_filter(const ModelParams& params, const Eigen::VectorXd& y,
                           const Eigen::MatrixXd& x);

/// Observed-data log-likelihood only; same recursion without storing states.
double kalman_loglik(const ModelParams& params, const Eigen::VectorXd& y,
                     const Eigen::MatrixXd& x);

/// Forward filtering, backward sampling: one exact draw from
/// p(alpha_{1:T} | y_{1:T}, params).
LatentPath ffbs_sample(const ModelParams& params, const Eigen::VectorXd& y,
                       const Eigen::MatrixXd& x, Rng& rng);
LatentPath ffbs_sample(const ModelParams& params, const Eigen::VectorXd& y,
                       const Eigen::MatrixXd& x, std::uint64_t seed);

/// Same backward pass on a precomputed filter.
LatentPath ffbs_from_filter(const FilterOutput& filter, Rng& rng);

/// Log density of y under the dense T x T Gaussian implied by the model,
/// built directly from the state covariance. Refused for T > 50.
double exact_joint_loglik(const ModelParams& params, const Eigen::VectorXd& y,
                          const Eigen::MatrixXd& x);

inline constexpr Eigen::Index kMaxDenseHorizon = 50;

}  // namespace slicedssm

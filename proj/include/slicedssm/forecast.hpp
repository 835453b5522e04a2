#pragma once

// Posterior predictive draws, CRPS scoring, rolling-window one-step forecasts
// and the OLS no-latent-state baseline.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slicedssm/data.hpp"
#include "slicedssm/gibbs.hpp"

namespace slicedssm {

struct PredictiveDistribution {
    int t0 = 0;
    Eigen::VectorXd y;     // transformed scale
    Eigen::VectorXd rate;  // inverse-link scale, in (0, 1)

    std::size_t size() const { return static_cast<std::size_t>(y.size()); }
    double mean_y() const { return y.mean(); }
    double mean_rate() const { return rate.mean(); }
    double quantile_y(double q) const;
    double quantile_rate(double q) const;
};

inline constexpr int kDefaultCrpsNodes = 4096;

/// Quadrature rule on [0, 1].
struct CrpsConfig {
    std::vector<double> nodes;
    std::vector<double> weights;

    /// Composite trapezoid on m uniform nodes including both endpoints.
    static CrpsConfig trapezoid(int m = kDefaultCrpsNodes);
    void validate() const;
};

/// One draw per kept iteration: alpha_{t0+1} = A alpha_{t0} + eta, then
/// y ~ N(x_next' beta + mu_{t0+1}, sigma_y2).
PredictiveDistribution posterior_predictive(const ChainOutput& chain,
                                            const Eigen::VectorXd& x_next, ResponseLink link,
                                            Rng& rng, int t0 = 0);

/// sum_k w_k (F(v_k) - 1{v_k >= y_obs})^2 with F the empirical CDF of
/// `samples`; samples and y_obs live on [0, 1].
double crps_quadrature(std::span<const double> samples, double y_obs, const CrpsConfig& cfg);

/// Rate-scale CRPS of a predictive distribution.
double crps(const PredictiveDistribution& pred, double y_obs, const CrpsConfig& cfg);

/// Closed form for an empirical CDF on the real line:
/// E|X - y| - E|X - X'| / 2. Used on the transformed scale.
double crps_empirical(std::span<const double> samples, double y_obs);

/// Response, design and observed rates on the same row index.
struct FitData {
    Eigen::VectorXd y;
    Eigen::MatrixXd x;
    Eigen::VectorXd rate;
    std::vector<YearMonth> months;
    std::vector<std::string> names;
    ResponseLink link = ResponseLink::logit;

    Eigen::Index size() const { return y.size(); }
};

FitData make_fit_data(const SeriesPanel& panel, const DesignMatrix& design, ResponseLink link);

struct RollingOptions {
    PriorSpec prior;
    GibbsConfig gibbs;
    CrpsConfig crps = CrpsConfig::trapezoid();
    /// Worker threads for independent windows; 0 uses the hardware count.
    unsigned threads = 0;
    /// Start each window from the previous window's last draw (sequential).
    bool warm_start = false;
};

struct ForecastRecord {
    int t0 = 0;  // training rows 1..t0, forecast row t0 + 1
    PredictiveDistribution pred;
    double y_obs = 0.0;  // observed rate at t0 + 1
    double crps = 0.0;
};

struct RollingResult {
    std::vector<ForecastRecord> records;
    double mean_crps = 0.0;
};

/// For each t0 in [t0_first, t0_last]: refit on rows 1..t0, predict row
/// t0 + 1, score on the rate scale. Window seeds derive from
/// options.gibbs.seed and t0, so results do not depend on thread count.
RollingResult rolling_forecast(const FitData& data, int t0_first, int t0_last,
                               const RollingOptions& options);

struct OlsRecord {
    int t0 = 0;
    double y_pred = 0.0;     // transformed scale
    double rate_pred = 0.0;
    double y_obs = 0.0;      // observed rate
    double abs_error = 0.0;  // rate scale; the CRPS of a point forecast
};

struct OlsResult {
    std::vector<OlsRecord> records;
    double mean_abs_error = 0.0;
    std::vector<std::string> warnings;
};

/// Least squares of y on [1, x] over rows 1..t0, one-step point forecast.
/// A rank-deficient window falls back to a small ridge penalty and records a
/// warning.
OlsResult ols_baseline(const FitData& data, int t0_first, int t0_last);

/// Forecast table: t0,year,month,y_obs,pred_mean,pred_q025,pred_q975,crps
/// plus a trailing "mean" record. year/month are those of the forecast month.
std::string forecast_csv(const RollingResult& result, const FitData& data);
std::string forecast_csv(const OlsResult& result, const FitData& data);

}  // namespace slicedssm

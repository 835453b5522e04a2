#include "slicedssm/forecast.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "slicedssm/csv.hpp"
#include "slicedssm/diagnostics.hpp"
#include "slicedssm/error.hpp"

namespace slicedssm {

double PredictiveDistribution::quantile_y(double q) const {
    return empirical_quantile(std::vector<double>(y.begin(), y.end()), q);
}

double PredictiveDistribution::quantile_rate(double q) const {
    return empirical_quantile(std::vector<double>(rate.begin(), rate.end()), q);
}

CrpsConfig CrpsConfig::trapezoid(int m) {
    if (m < 2) throw config_error("crps: at least two quadrature nodes are required");
    CrpsConfig cfg;
    const double h = 1.0 / static_cast<double>(m - 1);
    cfg.nodes.resize(static_cast<std::size_t>(m));
    cfg.weights.assign(static_cast<std::size_t>(m), h);
    for (int k = 0; k < m; ++k) cfg.nodes[static_cast<std::size_t>(k)] = k * h;
    cfg.nodes.back() = 1.0;
    cfg.weights.front() = 0.5 * h;
    cfg.weights.back() = 0.5 * h;
    return cfg;
}

void CrpsConfig::validate() const {
    if (nodes.empty() || nodes.size() != weights.size()) {
        throw config_error("crps: nodes and weights must be nonempty and of equal length");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (nodes[k] < 0.0 || nodes[k] > 1.0) throw config_error("crps: nodes must lie in [0, 1]");
        if (k > 0 && !(nodes[k] > nodes[k - 1])) {
            throw config_error("crps: nodes must be strictly increasing");
        }
        if (!(weights[k] > 0.0)) throw config_error("crps: weights must be positive");
        total += weights[k];
    }
    if (std::abs(total - 1.0) > 1e-12) throw config_error("crps: weights must sum to 1");
}

PredictiveDistribution posterior_predictive(const ChainOutput& chain,
                                            const Eigen::VectorXd& x_next, ResponseLink link,
                                            Rng& rng, int t0) {
    if (chain.size() == 0) throw config_error("posterior_predictive: empty chain");
    if (x_next.size() != chain.beta.cols()) {
        throw config_error("posterior_predictive: covariate row has the wrong length");
    }
    if (chain.last_state.rows() != static_cast<Eigen::Index>(chain.size())) {
        throw config_error("posterior_predictive: chain has no latent states");
    }
    const auto n = static_cast<Eigen::Index>(chain.size());
    PredictiveDistribution pred;
    pred.t0 = t0;
    pred.y.resize(n);
    pred.rate.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = chain.last_state(i, 0);
        const double nu = chain.last_state(i, 1);
        const double mu_next = mu + nu + std::sqrt(chain.sigma_mu2(i)) * rng.normal();
        const double mean = x_next.dot(chain.beta.row(i).transpose()) + mu_next;
        pred.y(i) = mean + std::sqrt(chain.sigma_y2(i)) * rng.normal();
        pred.rate(i) = inverse_response(pred.y(i), link);
    }
    return pred;
}

double crps_quadrature(std::span<const double> samples, double y_obs, const CrpsConfig& cfg) {
    if (samples.empty()) throw config_error("crps: no predictive samples");
    if (!(y_obs >= 0.0 && y_obs <= 1.0)) throw data_error("crps: observation must lie in [0, 1]");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    std::size_t below = 0;
    double total = 0.0;
    for (std::size_t k = 0; k < cfg.nodes.size(); ++k) {
        const double v = cfg.nodes[k];
        while (below < sorted.size() && sorted[below] <= v) ++below;
        const double diff = static_cast<double>(below) / n - (v >= y_obs ? 1.0 : 0.0);
        total += cfg.weights[k] * diff * diff;
    }
    return total;
}

double crps(const PredictiveDistribution& pred, double y_obs, const CrpsConfig& cfg) {
    return crps_quadrature(std::span<const double>(pred.rate.data(), pred.size()), y_obs, cfg);
}

double crps_empirical(std::span<const double> samples, double y_obs) {
    if (samples.empty()) throw config_error("crps: no predictive samples");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double abs_dev = 0.0;
    double spread = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        abs_dev += std::abs(sorted[i] - y_obs);
        spread += (2.0 * static_cast<double>(i + 1) - n - 1.0) * sorted[i];
    }
    return abs_dev / n - spread / (n * n);
}

FitData make_fit_data(const SeriesPanel& panel, const DesignMatrix& design, ResponseLink link) {
    FitData data;
    const Eigen::Index n = design.rows();
    if (design.first_row + static_cast<std::size_t>(n) != panel.size()) {
        throw config_error("design does not cover the panel tail");
    }
    data.y.resize(n);
    data.rate.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto t = design.first_row + static_cast<std::size_t>(r);
        data.y(r) = panel.y[t];
        data.rate(r) = panel.rate[t];
        data.months.push_back(panel.months[t]);
    }
    data.x = design.x;
    data.names = design.column_names;
    data.link = link;
    return data;
}

namespace {

void check_range(const FitData& data, int t0_first, int t0_last, int min_t0) {
    const auto n = static_cast<int>(data.size());
    if (t0_first < min_t0 || t0_last < t0_first || t0_last > n - 1) {
        throw config_error("t0 range [" + std::to_string(t0_first) + ", " + std::to_string(t0_last) +
                           "] must satisfy " + std::to_string(min_t0) + " <= t0_first <= t0_last <= " +
                           std::to_string(n - 1));
    }
}

ForecastRecord forecast_window(const FitData& data, int t0, const RollingOptions& options,
                               std::optional<ModelParams>* warm) {
    GibbsConfig cfg = options.gibbs;
    cfg.seed = derive_seed(options.gibbs.seed, static_cast<std::uint64_t>(t0));
    cfg.store_paths = false;
    if (warm && *warm) cfg.init = *warm;
    const auto chain = run_gibbs(data.y.head(t0), data.x.topRows(t0), options.prior, cfg, data.names);
    Rng rng(derive_seed(cfg.seed, 0x5eedULL));
    ForecastRecord rec;
    rec.t0 = t0;
    rec.pred = posterior_predictive(chain, data.x.row(t0).transpose(), data.link, rng, t0);
    rec.y_obs = data.rate(t0);
    rec.crps = crps(rec.pred, rec.y_obs, options.crps);
    if (warm) *warm = chain.params_at(chain.size() - 1);
    return rec;
}

}  // namespace

RollingResult rolling_forecast(const FitData& data, int t0_first, int t0_last,
                               const RollingOptions& options) {
    check_range(data, t0_first, t0_last, 1);
    options.prior.validate();
    options.gibbs.validate();
    options.crps.validate();
    const auto count = static_cast<std::size_t>(t0_last - t0_first + 1);
    RollingResult result;
    result.records.resize(count);

    if (options.warm_start) {
        std::optional<ModelParams> init;
        for (std::size_t k = 0; k < count; ++k) {
            const int t0 = t0_first + static_cast<int>(k);
            try {
                result.records[k] = forecast_window(data, t0, options, &init);
            } catch (const Error& e) {
                throw e.with_context("t0=" + std::to_string(t0));
            }
        }
    } else {
        unsigned workers = options.threads == 0 ? std::thread::hardware_concurrency() : options.threads;
        workers = std::clamp<unsigned>(workers, 1u, static_cast<unsigned>(count));
        std::vector<std::exception_ptr> errors(count);
        std::atomic<std::size_t> next{0};
        auto work = [&] {
            for (std::size_t k = next++; k < count; k = next++) {
                try {
                    result.records[k] =
                        forecast_window(data, t0_first + static_cast<int>(k), options, nullptr);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            }
        };
        if (workers == 1) {
            work();
        } else {
            std::vector<std::jthread> pool;
            for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        }
        for (std::size_t k = 0; k < count; ++k) {
            if (!errors[k]) continue;
            try {
                std::rethrow_exception(errors[k]);
            } catch (const Error& e) {
                throw e.with_context("t0=" + std::to_string(t0_first + static_cast<int>(k)));
            }
        }
    }

    double total = 0.0;
    for (const auto& r : result.records) total += r.crps;
    result.mean_crps = total / static_cast<double>(count);
    return result;
}

OlsResult ols_baseline(const FitData& data, int t0_first, int t0_last) {
    check_range(data, t0_first, t0_last, 2);
    OlsResult result;
    const Eigen::Index p = data.x.cols() + 1;
    for (int t0 = t0_first; t0 <= t0_last; ++t0) {
        Eigen::MatrixXd z(t0, p);
        z.col(0).setOnes();
        z.rightCols(p - 1) = data.x.topRows(t0);
        const Eigen::VectorXd target = data.y.head(t0);

        Eigen::VectorXd coef;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
        if (qr.rank() == p) {
            coef = qr.solve(target);
        } else {
            Eigen::MatrixXd gram = z.transpose() * z;
            const double lambda = 1e-8 * std::max(1.0, gram.trace() / static_cast<double>(p));
            gram.diagonal().tail(p - 1).array() += lambda;
            gram(0, 0) += lambda * 1e-6;
            coef = gram.ldlt().solve(z.transpose() * target);
            result.warnings.push_back("t0=" + std::to_string(t0) + ": design rank " +
                                      std::to_string(qr.rank()) + " < " + std::to_string(p) +
                                      ", ridge fallback");
        }
        Eigen::VectorXd row(p);
        row(0) = 1.0;
        row.tail(p - 1) = data.x.row(t0).transpose();

        OlsRecord rec;
        rec.t0 = t0;
        rec.y_pred = row.dot(coef);
        rec.rate_pred = inverse_response(rec.y_pred, data.link);
        rec.y_obs = data.rate(t0);
        rec.abs_error = std::abs(rec.rate_pred - rec.y_obs);
        result.records.push_back(rec);
    }
    double total = 0.0;
    for (const auto& r : result.records) total += r.abs_error;
    result.mean_abs_error = total / static_cast<double>(result.records.size());
    return result;
}

namespace {

std::string month_fields(const FitData& data, int t0) {
    const auto row = static_cast<std::size_t>(t0);
    if (row < data.months.size()) {
        return std::to_string(data.months[row].year) + "," + std::to_string(data.months[row].month);
    }
    return ",";
}

constexpr const char* kForecastHeader = "t0,year,month,y_obs,pred_mean,pred_q025,pred_q975,crps\n";

}  // namespace

std::string forecast_csv(const RollingResult& result, const FitData& data) {
    std::string out = kForecastHeader;
    for (const auto& r : result.records) {
        out += std::to_string(r.t0) + "," + month_fields(data, r.t0) + "," +
               csv::format_double(r.y_obs) + "," + csv::format_double(r.pred.mean_rate()) + "," +
               csv::format_double(r.pred.quantile_rate(0.025)) + "," +
               csv::format_double(r.pred.quantile_rate(0.975)) + "," + csv::format_double(r.crps) +
               "\n";
    }
    out += "mean,,,,,,," + csv::format_double(result.mean_crps) + "\n";
    return out;
}

std::string forecast_csv(const OlsResult& result, const FitData& data) {
    std::string out = kForecastHeader;
    for (const auto& r : result.records) {
        out += std::to_string(r.t0) + "," + month_fields(data, r.t0) + "," +
               csv::format_double(r.y_obs) + "," + csv::format_double(r.rate_pred) + ",,," +
               csv::format_double(r.abs_error) + "\n";
    }
    out += "mean,,,,,,," + csv::format_double(result.mean_abs_error) + "\n";
    return out;
}

}  // namespace slicedssm

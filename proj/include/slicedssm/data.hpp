#pragma once

// Ingestion of monthly delinquency counts and hazard losses, the response and
// covariate transforms, and construction of the lagged (optionally sliced)
// design matrix.

#include <cmath>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace slicedssm {

struct YearMonth {
    int year = 2000;
    int month = 1;  // 1..12

    auto operator<=>(const YearMonth&) const = default;

    /// Months since year 0; consecutive months differ by exactly 1.
    int ordinal() const { return year * 12 + (month - 1); }
    static YearMonth from_ordinal(int ordinal) { return {ordinal / 12, ordinal % 12 + 1}; }
    YearMonth plus(int months) const { return from_ordinal(ordinal() + months); }
    std::string str() const;
};

struct MonthKey {
    std::string state;
    YearMonth when;

    auto operator<=>(const MonthKey&) const = default;
};

enum class ResponseLink { logit, probit };
enum class ZeroLossPolicy { floor_at_one_dollar, covariate_zero };
enum class ThresholdScale { raw_dollars, transformed };

ResponseLink parse_link(const std::string& name);
ZeroLossPolicy parse_zero_loss_policy(const std::string& name);
ThresholdScale parse_threshold_scale(const std::string& name);
std::string to_string(ResponseLink link);
std::string to_string(ZeroLossPolicy policy);
std::string to_string(ThresholdScale scale);

/// Pre-aggregated loan counts for one state-month: c_k loans fewer than k
/// months delinquent, c_k1 fewer than k + 1.
struct CountRecord {
    std::string state;
    YearMonth when;
    std::int64_t c_k = 0;
    std::int64_t c_k1 = 0;
};

struct LossRecord {
    std::string state;
    YearMonth when;
    double loss_usd = 0.0;
    std::optional<std::string> county;
};

/// Covariate scaling g(x) = (log x - mu_x) / sigma_x and the response link.
struct TransformSpec {
    double mu_x = 12.927;
    double sigma_x = std::sqrt(7.755);
    ResponseLink link = ResponseLink::logit;
    ZeroLossPolicy zero_loss_policy = ZeroLossPolicy::floor_at_one_dollar;

    void validate() const;

    /// Log-normal fit of pooled state-level monthly losses: location 12.927,
    /// variance 7.755.
    static TransformSpec published_loss_scale();
};

struct SliceSpec {
    std::vector<int> lags{3, 4, 5};
    double threshold = 1e10;
    ThresholdScale threshold_scale = ThresholdScale::raw_dollars;

    /// Lags must be positive, distinct and not shorter than the delinquency
    /// horizon k.
    void validate(int k) const;
    int max_lag() const;
};

/// Gapless monthly series for one state.
struct SeriesPanel {
    std::string state;
    std::vector<YearMonth> months;
    std::vector<double> rate;  // raw delinquency rate r_t
    std::vector<double> y;     // transformed response
    std::vector<double> loss;  // raw monthly loss L_t (USD)
    std::vector<double> g;     // transformed loss g(L_t)

    std::size_t size() const { return months.size(); }
};

/// Lagged covariate rows. Row r corresponds to panel month `first_row + r`.
/// When sliced, columns are the lower block (one per lag) followed by the
/// upper block; otherwise one column per lag.
struct DesignMatrix {
    Eigen::MatrixXd x;
    std::vector<int> lags;
    std::optional<SliceSpec> slice;
    std::vector<std::string> column_names;
    std::size_t first_row = 0;
    /// Panel months dropped from the front for lack of lag history.
    std::size_t truncated_rows = 0;

    Eigen::Index rows() const { return x.rows(); }
    Eigen::Index cols() const { return x.cols(); }
    bool sliced() const { return slice.has_value(); }
};

/// r = (c_k1 - c_k) / c_k1.
double compute_rate(const CountRecord& rec);

using LossTotals = std::map<MonthKey, double>;

/// Sums loss_usd per (state, year, month).
LossTotals aggregate_losses(std::span<const LossRecord> records);

/// Totals for `state` over [first, last]; months without records are 0.
std::vector<double> loss_series(const LossTotals& totals, const std::string& state,
                                YearMonth first, YearMonth last);

double transform_loss(double x, const TransformSpec& spec);
double transform_response(double r, ResponseLink link);

/// Inverse link; the result is clamped into the open interval (0, 1) so a
/// finite input never maps onto an endpoint.
double inverse_response(double y, ResponseLink link);

/// Maximum-likelihood log-normal location/scale of the positive monthly
/// totals, pooled over all states or restricted to one.
TransformSpec estimate_loss_scale(const LossTotals& totals, TransformSpec base,
                                  const std::optional<std::string>& state = std::nullopt);

/// Joins counts and loss totals for one state on the count months. Fails on
/// duplicate or missing count months, rates outside (0, 1), and count months
/// outside the loss file's coverage.
SeriesPanel build_panel(std::span<const CountRecord> counts, const LossTotals& totals,
                        const std::string& state, const TransformSpec& spec);

/// Sliced design: lag j of row t holds g(L_{t-j}) in the upper block iff the
/// thresholding quantity strictly exceeds the threshold, else in the lower
/// block; the other block's entry is exactly 0.
DesignMatrix build_design(const SeriesPanel& panel, const SliceSpec& spec);

/// Unsliced design, one column per lag.
DesignMatrix build_unsliced_design(const SeriesPanel& panel, std::span<const int> lags);

std::vector<CountRecord> read_counts_csv(const std::filesystem::path& path);
std::vector<LossRecord> read_losses_csv(const std::filesystem::path& path);
SeriesPanel read_panel_csv(const std::filesystem::path& path);
std::string panel_csv(const SeriesPanel& panel);
void write_panel_csv(const std::filesystem::path& path, const SeriesPanel& panel);

}  // namespace slicedssm

#include "slicedssm/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include <boost/math/distributions/normal.hpp>

#include "slicedssm/csv.hpp"
#include "slicedssm/error.hpp"

namespace slicedssm {

std::string YearMonth::str() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
    return buf;
}

ResponseLink parse_link(const std::string& name) {
    if (name == "logit") return ResponseLink::logit;
    if (name == "probit") return ResponseLink::probit;
    throw config_error("unknown response link '" + name + "' (expected logit or probit)");
}

ZeroLossPolicy parse_zero_loss_policy(const std::string& name) {
    if (name == "floor_at_one_dollar") return ZeroLossPolicy::floor_at_one_dollar;
    if (name == "covariate_zero") return ZeroLossPolicy::covariate_zero;
    throw config_error("unknown zero-loss policy '" + name + "'");
}

ThresholdScale parse_threshold_scale(const std::string& name) {
    if (name == "raw_dollars") return ThresholdScale::raw_dollars;
    if (name == "transformed") return ThresholdScale::transformed;
    throw config_error("unknown threshold scale '" + name +
                       "' (expected raw_dollars or transformed)");
}

std::string to_string(ResponseLink link) {
    return link == ResponseLink::logit ? "logit" : "probit";
}

std::string to_string(ZeroLossPolicy policy) {
    return policy == ZeroLossPolicy::floor_at_one_dollar ? "floor_at_one_dollar"
                                                         : "covariate_zero";
}

std::string to_string(ThresholdScale scale) {
    return scale == ThresholdScale::raw_dollars ? "raw_dollars" : "transformed";
}

void TransformSpec::validate() const {
    if (!std::isfinite(mu_x)) throw config_error("transform: mu_x must be finite");
    if (!(sigma_x > 0.0) || !std::isfinite(sigma_x)) {
        throw config_error("transform: sigma_x must be positive");
    }
}

TransformSpec TransformSpec::published_loss_scale() {
    TransformSpec spec;
    spec.mu_x = 12.927;
    spec.sigma_x = std::sqrt(7.755);
    return spec;
}

void SliceSpec::validate(int k) const {
    if (lags.empty()) throw config_error("slice: at least one lag is required");
    std::set<int> seen;
    for (int lag : lags) {
        if (lag <= 0) throw config_error("slice: lags must be positive");
        if (lag < k) {
            throw config_error("slice: lag " + std::to_string(lag) +
                               " is shorter than the delinquency horizon k=" +
                               std::to_string(k));
        }
        if (!seen.insert(lag).second) {
            throw config_error("slice: duplicate lag " + std::to_string(lag));
        }
    }
    if (!(threshold > 0.0)) throw config_error("slice: threshold must be positive");
}

int SliceSpec::max_lag() const { return *std::max_element(lags.begin(), lags.end()); }

double compute_rate(const CountRecord& rec) {
    if (rec.c_k < 0 || rec.c_k1 < 0) {
        throw data_error("negative loan count for " + rec.state + " " + rec.when.str());
    }
    if (rec.c_k > rec.c_k1) {
        throw data_error("c_k exceeds c_k1 for " + rec.state + " " + rec.when.str());
    }
    if (rec.c_k1 == 0) {
        throw data_error("undefined rate (c_k1 = 0) for " + rec.state + " " + rec.when.str());
    }
    return static_cast<double>(rec.c_k1 - rec.c_k) / static_cast<double>(rec.c_k1);
}

LossTotals aggregate_losses(std::span<const LossRecord> records) {
    LossTotals totals;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!(r.loss_usd >= 0.0) || !std::isfinite(r.loss_usd)) {
            throw data_error("loss record " + std::to_string(i + 1) + " (" + r.state + " " +
                             r.when.str() + "): loss_usd must be finite and nonnegative");
        }
        totals[MonthKey{r.state, r.when}] += r.loss_usd;
    }
    return totals;
}

std::vector<double> loss_series(const LossTotals& totals, const std::string& state,
                                YearMonth first, YearMonth last) {
    std::vector<double> out;
    for (int m = first.ordinal(); m <= last.ordinal(); ++m) {
        auto it = totals.find(MonthKey{state, YearMonth::from_ordinal(m)});
        out.push_back(it == totals.end() ? 0.0 : it->second);
    }
    return out;
}

double transform_loss(double x, const TransformSpec& spec) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
        throw data_error("transform_loss: loss must be finite and nonnegative");
    }
    if (x == 0.0) {
        if (spec.zero_loss_policy == ZeroLossPolicy::covariate_zero) return 0.0;
        x = 1.0;
    }
    return (std::log(x) - spec.mu_x) / spec.sigma_x;
}

double transform_response(double r, ResponseLink link) {
    if (!(r > 0.0 && r < 1.0)) {
        throw data_error("transform_response: rate must lie in (0, 1)");
    }
    if (link == ResponseLink::logit) return std::log(r) - std::log1p(-r);
    return boost::math::quantile(boost::math::normal_distribution<double>(), r);
}

double inverse_response(double y, ResponseLink link) {
    if (std::isnan(y)) throw numerical_error("inverse_response: NaN input");
    double r;
    if (link == ResponseLink::logit) {
        r = y >= 0.0 ? 1.0 / (1.0 + std::exp(-y)) : std::exp(y) / (1.0 + std::exp(y));
    } else {
        r = boost::math::cdf(boost::math::normal_distribution<double>(),
                             std::clamp(y, -1e3, 1e3));
    }
    constexpr double lo = std::numeric_limits<double>::min();
    const double hi = std::nextafter(1.0, 0.0);
    return std::clamp(r, lo, hi);
}

TransformSpec estimate_loss_scale(const LossTotals& totals, TransformSpec base,
                                  const std::optional<std::string>& state) {
    double sum = 0.0;
    double sumsq = 0.0;
    std::size_t n = 0;
    for (const auto& [key, total] : totals) {
        if (state && key.state != *state) continue;
        if (total <= 0.0) continue;
        double v = std::log(total);
        sum += v;
        sumsq += v * v;
        ++n;
    }
    if (n < 2) throw data_error("estimate_loss_scale: need at least two positive monthly totals");
    double mean = sum / static_cast<double>(n);
    double var = sumsq / static_cast<double>(n) - mean * mean;
    if (!(var > 0.0)) throw data_error("estimate_loss_scale: log-losses have zero spread");
    base.mu_x = mean;
    base.sigma_x = std::sqrt(var);
    return base;
}

SeriesPanel build_panel(std::span<const CountRecord> counts, const LossTotals& totals,
                        const std::string& state, const TransformSpec& spec) {
    spec.validate();
    std::vector<CountRecord> rows;
    for (const auto& c : counts) {
        if (c.state == state) rows.push_back(c);
    }
    if (rows.empty()) throw data_error("no count records for state " + state);
    std::sort(rows.begin(), rows.end(),
              [](const CountRecord& a, const CountRecord& b) { return a.when < b.when; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
        int step = rows[i].when.ordinal() - rows[i - 1].when.ordinal();
        if (step == 0) {
            throw data_error("duplicate count record for " + state + " " + rows[i].when.str());
        }
        if (step != 1) {
            throw data_error("count series for " + state + " has a gap between " +
                             rows[i - 1].when.str() + " and " + rows[i].when.str());
        }
    }

    if (totals.empty()) throw data_error("loss file contains no records");
    YearMonth cover_first = totals.begin()->first.when;
    YearMonth cover_last = cover_first;
    for (const auto& [key, _] : totals) {
        cover_first = std::min(cover_first, key.when);
        cover_last = std::max(cover_last, key.when);
    }
    if (rows.front().when < cover_first || rows.back().when > cover_last) {
        YearMonth missing = rows.front().when < cover_first ? rows.front().when : rows.back().when;
        throw data_error("losses missing for " + state + " " + missing.str() +
                         " (loss file covers " + cover_first.str() + " to " +
                         cover_last.str() + ")");
    }

    SeriesPanel panel;
    panel.state = state;
    auto losses = loss_series(totals, state, rows.front().when, rows.back().when);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double r = compute_rate(rows[i]);
        if (!(r > 0.0 && r < 1.0)) {
            throw data_error("rate for " + state + " " + rows[i].when.str() +
                             " is outside (0, 1); the response transform is undefined");
        }
        panel.months.push_back(rows[i].when);
        panel.rate.push_back(r);
        panel.y.push_back(transform_response(r, spec.link));
        panel.loss.push_back(losses[i]);
        panel.g.push_back(transform_loss(losses[i], spec));
    }
    return panel;
}

namespace {

void check_history(const SeriesPanel& panel, int max_lag) {
    if (panel.size() <= static_cast<std::size_t>(max_lag)) {
        throw data_error("panel has " + std::to_string(panel.size()) +
                         " months; at least " + std::to_string(max_lag + 1) +
                         " are needed for lag " + std::to_string(max_lag));
    }
}

}  // namespace

DesignMatrix build_design(const SeriesPanel& panel, const SliceSpec& spec) {
    spec.validate(1);
    const int max_lag = spec.max_lag();
    check_history(panel, max_lag);
    const auto nlag = static_cast<Eigen::Index>(spec.lags.size());
    const auto nrow = static_cast<Eigen::Index>(panel.size()) - max_lag;

    DesignMatrix d;
    d.lags = spec.lags;
    d.slice = spec;
    d.first_row = static_cast<std::size_t>(max_lag);
    d.truncated_rows = static_cast<std::size_t>(max_lag);
    d.x = Eigen::MatrixXd::Zero(nrow, 2 * nlag);
    for (Eigen::Index r = 0; r < nrow; ++r) {
        const auto t = static_cast<std::size_t>(r) + d.first_row;
        for (Eigen::Index j = 0; j < nlag; ++j) {
            const auto src = t - static_cast<std::size_t>(spec.lags[j]);
            const double value = panel.g[src];
            const double level = spec.threshold_scale == ThresholdScale::raw_dollars
                                     ? panel.loss[src]
                                     : panel.g[src];
            if (level > spec.threshold) {
                d.x(r, nlag + j) = value;
            } else {
                d.x(r, j) = value;
            }
        }
    }
    for (int lag : spec.lags) d.column_names.push_back("beta_l_lag" + std::to_string(lag));
    for (int lag : spec.lags) d.column_names.push_back("beta_u_lag" + std::to_string(lag));
    return d;
}

DesignMatrix build_unsliced_design(const SeriesPanel& panel, std::span<const int> lags) {
    if (lags.empty()) throw config_error("design: at least one lag is required");
    for (int lag : lags) {
        if (lag <= 0) throw config_error("design: lags must be positive");
    }
    const int max_lag = *std::max_element(lags.begin(), lags.end());
    check_history(panel, max_lag);
    const auto nlag = static_cast<Eigen::Index>(lags.size());
    const auto nrow = static_cast<Eigen::Index>(panel.size()) - max_lag;

    DesignMatrix d;
    d.lags.assign(lags.begin(), lags.end());
    d.first_row = static_cast<std::size_t>(max_lag);
    d.truncated_rows = static_cast<std::size_t>(max_lag);
    d.x.resize(nrow, nlag);
    for (Eigen::Index r = 0; r < nrow; ++r) {
        const auto t = static_cast<std::size_t>(r) + d.first_row;
        for (Eigen::Index j = 0; j < nlag; ++j) {
            d.x(r, j) = panel.g[t - static_cast<std::size_t>(lags[j])];
        }
    }
    for (int lag : lags) d.column_names.push_back("beta_lag" + std::to_string(lag));
    return d;
}

namespace {

YearMonth parse_month(const std::vector<std::string>& row, std::size_t year_col,
                      const std::string& where) {
    YearMonth ym{static_cast<int>(csv::parse_int(row[year_col])),
                 static_cast<int>(csv::parse_int(row[year_col + 1]))};
    if (ym.month < 1 || ym.month > 12) throw data_error(where + ": month must be 1..12");
    return ym;
}

std::string location(const std::filesystem::path& path, const csv::Table& t, std::size_t i) {
    return path.string() + ":" + std::to_string(t.line_of(i));
}

template <typename F>
auto with_location(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw e.with_context(where);
    }
}

}  // namespace

std::vector<CountRecord> read_counts_csv(const std::filesystem::path& path) {
    auto table = csv::read_table(path, {"state", "year", "month", "c_k", "c_k1"});
    std::vector<CountRecord> out;
    std::set<MonthKey> seen;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const auto where = location(path, table, i);
        CountRecord rec = with_location(where, [&] {
            CountRecord r;
            r.state = row[0];
            r.when = parse_month(row, 1, where);
            r.c_k = csv::parse_int(row[3]);
            r.c_k1 = csv::parse_int(row[4]);
            return r;
        });
        if (rec.c_k < 0 || rec.c_k1 < rec.c_k) {
            throw data_error(where + ": counts must satisfy c_k1 >= c_k >= 0");
        }
        if (!seen.insert(MonthKey{rec.state, rec.when}).second) {
            throw data_error(where + ": duplicate (state, year, month)");
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<LossRecord> read_losses_csv(const std::filesystem::path& path) {
    auto table = csv::read_table(path, {"state", "year", "month", "loss_usd"}, {"county"});
    std::vector<LossRecord> out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const auto where = location(path, table, i);
        LossRecord rec = with_location(where, [&] {
            LossRecord r;
            r.state = row[0];
            r.when = parse_month(row, 1, where);
            r.loss_usd = csv::parse_double(row[3]);
            if (row.size() > 4 && !row[4].empty()) r.county = row[4];
            return r;
        });
        if (!(rec.loss_usd >= 0.0)) throw data_error(where + ": loss_usd must be nonnegative");
        out.push_back(std::move(rec));
    }
    return out;
}

SeriesPanel read_panel_csv(const std::filesystem::path& path) {
    auto table =
        csv::read_table(path, {"state", "year", "month", "rate", "y", "loss_usd", "g"});
    SeriesPanel panel;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const auto where = location(path, table, i);
        with_location(where, [&] {
            if (panel.state.empty()) panel.state = row[0];
            if (row[0] != panel.state) throw data_error("panel mixes states");
            auto ym = parse_month(row, 1, where);
            if (!panel.months.empty() && ym.ordinal() != panel.months.back().ordinal() + 1) {
                throw data_error("panel months are not consecutive (gap after " +
                                 panel.months.back().str() + ")");
            }
            panel.months.push_back(ym);
            panel.rate.push_back(csv::parse_double(row[3]));
            panel.y.push_back(csv::parse_double(row[4]));
            panel.loss.push_back(csv::parse_double(row[5]));
            panel.g.push_back(csv::parse_double(row[6]));
            if (!(panel.rate.back() > 0.0 && panel.rate.back() < 1.0)) {
                throw data_error("rate must lie in (0, 1)");
            }
            if (!std::isfinite(panel.y.back()) || !std::isfinite(panel.g.back())) {
                throw data_error("y and g must be finite");
            }
            return 0;
        });
    }
    if (panel.months.empty()) throw data_error(path.string() + ": panel has no rows");
    return panel;
}

std::string panel_csv(const SeriesPanel& panel) {
    std::string out = "state,year,month,rate,y,loss_usd,g\n";
    for (std::size_t i = 0; i < panel.size(); ++i) {
        out += panel.state + "," + std::to_string(panel.months[i].year) + "," +
               std::to_string(panel.months[i].month) + "," + csv::format_double(panel.rate[i]) +
               "," + csv::format_double(panel.y[i]) + "," + csv::format_double(panel.loss[i]) +
               "," + csv::format_double(panel.g[i]) + "\n";
    }
    return out;
}

void write_panel_csv(const std::filesystem::path& path, const SeriesPanel& panel) {
    csv::write_atomic(path, panel_csv(panel));
}

}  // namespace slicedssm

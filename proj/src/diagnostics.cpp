#include "slicedssm/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "slicedssm/csv.hpp"
#include "slicedssm/error.hpp"

namespace slicedssm {

double ess(std::span<const double> draws, int max_lag) {
    const std::size_t n = draws.size();
    if (n < 2) throw config_error("ess: at least two draws are required");
    if (max_lag < 0) throw config_error("ess: max_lag must be nonnegative");
    double mean = 0.0;
    for (double v : draws) mean += v;
    mean /= static_cast<double>(n);
    double c0 = 0.0;
    for (double v : draws) c0 += (v - mean) * (v - mean);
    if (!(c0 > 0.0)) throw numerical_error("ess: undefined for a zero-variance chain");

    const std::size_t lags = std::min<std::size_t>(static_cast<std::size_t>(max_lag), n - 1);
    double sum_r = 0.0;
    for (std::size_t k = 1; k <= lags; ++k) {
        double ck = 0.0;
        for (std::size_t t = 0; t + k < n; ++t) ck += (draws[t] - mean) * (draws[t + k] - mean);
        sum_r += ck / c0;
    }
    const double denom = 1.0 + 2.0 * sum_r;
    const double nd = static_cast<double>(n);
    if (denom <= 1.0) return nd;
    return std::min(nd, nd / denom);
}

double empirical_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw config_error("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw config_error("quantile level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

ParameterSummary describe(const std::string& name, const Eigen::VectorXd& draws) {
    ParameterSummary s;
    s.parameter = name;
    const double n = static_cast<double>(draws.size());
    s.mean = draws.mean();
    s.sd = std::sqrt((draws.array() - s.mean).square().sum() / n);
    std::vector<double> v(draws.begin(), draws.end());
    s.ci_low = empirical_quantile(v, 0.025);
    s.ci_high = empirical_quantile(std::move(v), 0.975);
    return s;
}

Eigen::VectorXd scalar_column(const ChainOutput& chain, const std::string& name) {
    for (std::size_t j = 0; j < chain.names.size(); ++j) {
        if (chain.names[j] == name) return chain.beta.col(static_cast<Eigen::Index>(j));
    }
    if (name == "sigma_y2") return chain.sigma_y2;
    if (name == "sigma_mu2") return chain.sigma_mu2;
    if (name == "sigma_nu2") return chain.sigma_nu2;
    if (name == "loglik") return chain.loglik;
    throw config_error("unknown chain parameter '" + name + "'");
}

}  // namespace

std::vector<ParameterSummary> summarize(const ChainOutput& chain) {
    if (chain.size() == 0) throw config_error("summarize: empty chain");
    std::vector<ParameterSummary> out;
    for (std::size_t j = 0; j < chain.names.size(); ++j) {
        const Eigen::VectorXd col = chain.beta.col(static_cast<Eigen::Index>(j));
        auto s = describe(chain.names[j], col);
        s.rho_hat = (col.array() != 0.0).cast<double>().mean();
        out.push_back(std::move(s));
    }
    out.push_back(describe("sigma_y2", chain.sigma_y2));
    out.push_back(describe("sigma_mu2", chain.sigma_mu2));
    out.push_back(describe("sigma_nu2", chain.sigma_nu2));
    return out;
}

std::vector<std::string> trace_parameters(const ChainOutput& chain) {
    std::vector<std::string> names = chain.names;
    for (const char* extra : {"sigma_y2", "sigma_mu2", "sigma_nu2", "loglik"}) names.emplace_back(extra);
    return names;
}

std::vector<std::pair<std::string, std::optional<double>>> chain_ess(const ChainOutput& chain,
                                                                     int max_lag) {
    std::vector<std::pair<std::string, std::optional<double>>> out;
    for (const auto& name : trace_parameters(chain)) {
        const Eigen::VectorXd col = scalar_column(chain, name);
        std::optional<double> value;
        try {
            value = ess(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), max_lag);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::numerical) throw;
        }
        out.emplace_back(name, value);
    }
    return out;
}

std::vector<TraceRow> export_traces(const ChainOutput& chain, std::vector<std::string> parameters) {
    if (chain.size() == 0) throw config_error("export_traces: empty chain");
    if (parameters.empty()) parameters = trace_parameters(chain);
    std::vector<Eigen::VectorXd> columns;
    for (const auto& name : parameters) columns.push_back(scalar_column(chain, name));
    std::vector<TraceRow> rows;
    rows.reserve(chain.size() * parameters.size());
    for (std::size_t i = 0; i < chain.size(); ++i) {
        for (std::size_t j = 0; j < parameters.size(); ++j) {
            rows.push_back({chain.iteration[i], parameters[j], columns[j](static_cast<Eigen::Index>(i))});
        }
    }
    return rows;
}

std::string traces_csv(const std::vector<TraceRow>& rows) {
    std::string out = "iteration,parameter,value\n";
    for (const auto& r : rows) {
        out += std::to_string(r.iteration) + "," + r.parameter + "," + csv::format_double(r.value) + "\n";
    }
    return out;
}

std::vector<TraceRow> read_traces_csv(const std::filesystem::path& path) {
    const auto table = csv::read_table(path, {"iteration", "parameter", "value"});
    std::vector<TraceRow> rows;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& f = table.rows[i];
        try {
            rows.push_back({static_cast<int>(csv::parse_int(f[0])), f[1], csv::parse_double(f[2])});
        } catch (const Error& e) {
            throw e.with_context(path.string() + ":" + std::to_string(table.line_of(i)));
        }
    }
    return rows;
}

std::string summary_csv(const std::vector<ParameterSummary>& rows) {
    std::string out = "parameter,rho_hat,mean,sd,ci_low,ci_high\n";
    for (const auto& r : rows) {
        out += r.parameter + "," + (r.rho_hat ? csv::format_double(*r.rho_hat) : std::string()) + "," +
               csv::format_double(r.mean) + "," + csv::format_double(r.sd) + "," +
               csv::format_double(r.ci_low) + "," + csv::format_double(r.ci_high) + "\n";
    }
    return out;
}

std::string ess_csv(const std::vector<std::pair<std::string, std::optional<double>>>& rows) {
    std::string out = "parameter,ess\n";
    for (const auto& [name, value] : rows) {
        out += name + "," + (value ? csv::format_double(*value) : std::string()) + "\n";
    }
    return out;
}

}  // namespace slicedssm

#pragma once

// MCMC diagnostics and posterior summaries: effective sample size, inclusion
// probabilities, means, standard deviations, credible intervals and traces.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slicedssm/gibbs.hpp"

namespace slicedssm {

inline constexpr int kDefaultEssMaxLag = 30;

/// N / (1 + 2 sum_{k=1}^{max_lag} r_k) with r_k the lag-k sample
/// autocorrelation, clamped to (0, N]. Throws on a zero-variance chain.
double ess(std::span<const double> draws, int max_lag = kDefaultEssMaxLag);

/// Linear-interpolation quantile (R type 7) of unsorted values.
double empirical_quantile(std::vector<double> values, double q);

struct ParameterSummary {
    std::string parameter;
    std::optional<double> rho_hat;  // coefficients only
    double mean = 0.0;
    double sd = 0.0;  // population (1/N) normalization
    double ci_low = 0.0;
    double ci_high = 0.0;
};

/// One row per coefficient (inclusion probability = fraction of nonzero
/// draws; mean, sd and 2.5%/97.5% quantiles over all draws, zeros included)
/// followed by sigma_y2, sigma_mu2 and sigma_nu2.
std::vector<ParameterSummary> summarize(const ChainOutput& chain);

/// ESS of every scalar parameter; nullopt where the chain is constant.
std::vector<std::pair<std::string, std::optional<double>>> chain_ess(
    const ChainOutput& chain, int max_lag = kDefaultEssMaxLag);

struct TraceRow {
    int iteration = 0;
    std::string parameter;
    double value = 0.0;
};

/// Scalar parameter names available for tracing, in chain order: the
/// coefficients, sigma_y2, sigma_mu2, sigma_nu2, loglik.
std::vector<std::string> trace_parameters(const ChainOutput& chain);

/// Long-format traces; all scalar parameters (loglik included) when
/// `parameters` is empty.
std::vector<TraceRow> export_traces(const ChainOutput& chain,
                                    std::vector<std::string> parameters = {});

std::string traces_csv(const std::vector<TraceRow>& rows);
std::vector<TraceRow> read_traces_csv(const std::filesystem::path& path);
std::string summary_csv(const std::vector<ParameterSummary>& rows);
std::string ess_csv(const std::vector<std::pair<std::string, std::optional<double>>>& rows);

}  // namespace slicedssm

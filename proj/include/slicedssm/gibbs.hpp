#pragma once

// Gibbs sampler for the state-space regression with a spike-and-slab prior
// on the coefficients and conjugate inverse-gamma priors on the variances.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slicedssm/rng.hpp"
#include "slicedssm/ssm.hpp"

namespace slicedssm {

/// beta_j ~ rho N(0, tau2) + (1 - rho) delta_0; every variance ~ IG(a, b).
struct PriorSpec {
    double tau2 = 1.0;
    double rho = 0.5;
    double a = 0.01;
    double b = 0.01;

    void validate() const;
};

struct GibbsConfig {
    int n_iter = 5000;
    int burn_in = 2000;
    std::uint64_t seed = 1;
    /// Fixed initial state alpha_0; never sampled.
    Eigen::Vector2d alpha0 = Eigen::Vector2d::Zero();
    /// Starting beta and variances; defaults to beta = 0, variances = 1.
    std::optional<ModelParams> init;
    /// Keep the full latent path of every kept draw (the final state is
    /// always kept).
    bool store_paths = true;

    void validate() const;
    int kept() const { return n_iter - burn_in; }
};

/// Post-burn-in draws, one row (or entry) per kept iteration.
struct ChainOutput {
    std::vector<std::string> names;  // coefficient names, one per design column
    std::vector<int> iteration;      // 1-based sweep number of each kept draw
    Eigen::MatrixXd beta;            // kept x p, exact zeros where gamma = 0
    Eigen::MatrixXi gamma;           // kept x p, 0/1
    Eigen::VectorXd sigma_y2;
    Eigen::VectorXd sigma_mu2;
    Eigen::VectorXd sigma_nu2;
    Eigen::VectorXd loglik;
    Eigen::MatrixXd last_state;      // kept x 2, (mu_T, nu_T)
    std::vector<LatentPath> paths;   // empty unless store_paths
    Eigen::Vector2d alpha0 = Eigen::Vector2d::Zero();

    std::size_t size() const { return iteration.size(); }
    Eigen::Index num_coefficients() const { return beta.cols(); }
    ModelParams params_at(std::size_t draw) const;
};

/// Draws beta_gamma from its Gaussian full conditional given residual
/// r = y - mu; inactive coordinates are exactly 0. Returns all zeros when no
/// coordinate is active.
Eigen::VectorXd sample_beta(const Eigen::VectorXd& residual, const Eigen::MatrixXd& x,
                            const Eigen::VectorXi& gamma, double sigma_y2,
                            const PriorSpec& prior, Rng& rng);

/// Draws from IG(T/2 + a, b + sum(residual^2) / 2).
double sample_variance(const Eigen::VectorXd& residuals, const PriorSpec& prior, Rng& rng);

/// Log marginal likelihood of r = y - mu under the active set, beta_gamma
/// integrated out under the slab. Terms that do not depend on gamma are
/// dropped.
double log_marginal_likelihood(const Eigen::VectorXd& residual, const Eigen::MatrixXd& x,
                               const Eigen::VectorXi& gamma, double sigma_y2,
                               const PriorSpec& prior);

/// P(gamma_j = 1 | gamma_{-j}, r, sigma_y2).
double inclusion_probability(const Eigen::VectorXd& residual, const Eigen::MatrixXd& x,
                             const Eigen::VectorXi& gamma, Eigen::Index j, double sigma_y2,
                             const PriorSpec& prior);

/// One systematic sweep over j = 1..p, each gamma_j drawn from its
/// conditional given the others. Returns the updated indicators.
Eigen::VectorXi sample_gamma(const Eigen::VectorXd& residual, const Eigen::MatrixXd& x,
                             Eigen::VectorXi gamma, double sigma_y2, const PriorSpec& prior,
                             Rng& rng);

/// Sweep order: latent path (FFBS), gamma, beta, the three variances; the
/// observed-data log-likelihood is recorded under the updated parameters.
ChainOutput run_gibbs(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                      const PriorSpec& prior, const GibbsConfig& config,
                      std::vector<std::string> names = {});

/// gamma column label for a coefficient name ("beta_u_lag3" -> "gamma_u_lag3").
std::string gamma_name(const std::string& coefficient);

std::string chain_csv(const ChainOutput& chain);
void write_chain_csv(const std::filesystem::path& path, const ChainOutput& chain);
/// Reads a chain written by write_chain_csv (latent paths are not restored).
ChainOutput read_chain_csv(const std::filesystem::path& path);

/// Long format: iteration,t,mu,nu. Requires stored paths.
void write_latent_csv(const std::filesystem::path& path, const ChainOutput& chain);

}  // namespace slicedssm

#include "slicedssm/gibbs.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "slicedssm/csv.hpp"
#include "slicedssm/error.hpp"

namespace slicedssm {

namespace {

std::vector<Eigen::Index> active_set(const Eigen::VectorXi& gamma) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < gamma.size(); ++j) {
        if (gamma(j) != 0) idx.push_back(j);
    }
    return idx;
}

// Sufficient statistics of the residual regression r ~ X beta + eps.
struct RegressionStats {
    Eigen::MatrixXd xtx;
    Eigen::VectorXd xtr;
    double rtr = 0.0;
    Eigen::Index n = 0;
};

RegressionStats regression_stats(const Eigen::VectorXd& r, const Eigen::MatrixXd& x) {
    RegressionStats s;
    s.xtx = x.transpose() * x;
    s.xtr = x.transpose() * r;
    s.rtr = r.squaredNorm();
    s.n = r.size();
    return s;
}

double log_ml(const RegressionStats& s, const std::vector<Eigen::Index>& idx, double sigma_y2,
              const PriorSpec& prior) {
    const auto k = static_cast<Eigen::Index>(idx.size());
    if (k == 0) return -0.5 * s.rtr / sigma_y2;
    Eigen::MatrixXd m(k, k);
    Eigen::VectorXd b(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        b(i) = s.xtr(idx[i]);
        for (Eigen::Index j = 0; j < k; ++j) m(i, j) = s.xtx(idx[i], idx[j]);
        m(i, i) += sigma_y2 / prior.tau2;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
        throw numerical_error("marginal likelihood: slab precision is not positive definite");
    }
    const Eigen::VectorXd w = llt.matrixL().solve(b);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) logdet += std::log(llt.matrixLLT()(i, i));
    logdet *= 2.0;
    return -0.5 * (static_cast<double>(k) * std::log(prior.tau2 / sigma_y2) + logdet) -
           0.5 * (s.rtr - w.squaredNorm()) / sigma_y2;
}

// P(gamma_j = 1) from the log marginal-likelihood difference, arranged so
// that a zero difference returns rho exactly.
double bernoulli_probability(double delta, double rho) {
    if (!std::isfinite(delta)) {
        throw numerical_error("inclusion probability: non-finite marginal likelihood ratio");
    }
    if (delta > 0.0) return rho / (rho + (1.0 - rho) * std::exp(-delta));
    const double w = rho * std::exp(delta);
    return w / (w + (1.0 - rho));
}

double inclusion_from_stats(const RegressionStats& s, Eigen::VectorXi gamma, Eigen::Index j,
                            double sigma_y2, const PriorSpec& prior) {
    gamma(j) = 1;
    const double with = log_ml(s, active_set(gamma), sigma_y2, prior);
    gamma(j) = 0;
    const double without = log_ml(s, active_set(gamma), sigma_y2, prior);
    return bernoulli_probability(with - without, prior.rho);
}

void check_design(const Eigen::VectorXd& r, const Eigen::MatrixXd& x, const Eigen::VectorXi& gamma) {
    if (x.rows() != r.size()) throw config_error("design rows do not match the residual length");
    if (gamma.size() != x.cols()) throw config_error("gamma length does not match design columns");
}

}  // namespace

void PriorSpec::validate() const {
    if (!(tau2 > 0.0) || !std::isfinite(tau2)) throw config_error("prior: tau2 must be positive");
    if (!(rho > 0.0 && rho < 1.0)) throw config_error("prior: rho must lie in (0, 1)");
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw config_error("prior: inverse-gamma a and b must be positive");
    }
}

void GibbsConfig::validate() const {
    if (n_iter < 1) throw config_error("gibbs: n_iter must be at least 1");
    if (burn_in < 0 || burn_in >= n_iter) {
        throw config_error("gibbs: burn_in must satisfy 0 <= burn_in < n_iter");
    }
    if (!alpha0.allFinite()) throw config_error("gibbs: alpha0 must be finite");
}

ModelParams ChainOutput::params_at(std::size_t draw) const {
    ModelParams p;
    const auto i = static_cast<Eigen::Index>(draw);
    p.beta = beta.row(i).transpose();
    p.sigma_y2 = sigma_y2(i);
    p.sigma_mu2 = sigma_mu2(i);
    p.sigma_nu2 = sigma_nu2(i);
    p.alpha0 = alpha0;
    return p;
}

Eigen::VectorXd sample_beta(const Eigen::VectorXd& residual, const Eigen::MatrixXd& x,
                            const Eigen::VectorXi& gamma, double sigma_y2,
                            const PriorSpec& prior, Rng& rng) {
    check_design(residual, x, gamma);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
    const auto idx = active_set(gamma);
    const auto k = static_cast<Eigen::Index>(idx.size());
    if (k == 0) return beta;

    Eigen::MatrixXd xg(x.rows(), k);
    for (Eigen::Index i = 0; i < k; ++i) xg.col(i) = x.col(idx[i]);
    // Precision Omega^{-1} = X'X / s2 + I / tau2, mean = Omega X'r / s2.
    Eigen::MatrixXd precision = xg.transpose() * xg / sigma_y2;
    precision.diagonal().array() += 1.0 / prior.tau2;
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) {
        throw numerical_error("sample_beta: posterior precision is not positive definite");
    }
    const Eigen::VectorXd mean = llt.solve(xg.transpose() * residual / sigma_y2);
    Eigen::VectorXd z(k);
    for (Eigen::Index i = 0; i < k; ++i) z(i) = rng.normal();
    const Eigen::VectorXd draw = mean + llt.matrixU().solve(z);
    for (Eigen::Index i = 0; i < k; ++i) beta(idx[i]) = draw(i);
    return beta;
}

double sample_variance(const Eigen::VectorXd& residuals, const PriorSpec& prior, Rng& rng) {
    if (residuals.size() == 0) throw config_error("sample_variance: no residuals");
    const double shape = 0.5 * static_cast<double>(residuals.size()) + prior.a;
    const double scale = prior.b + 0.5 * residuals.squaredNorm();
    if (!std::isfinite(scale)) throw numerical_error("sample_variance: non-finite residuals");
    const double draw = scale / rng.gamma(shape);
    if (!(draw > 0.0) || !std::isfinite(draw)) {
        throw numerical_error("sample_variance: degenerate inverse-gamma draw");
    }
    return draw;
}

double log_marginal_likelihood(const Eigen::VectorXd& residual, const Eigen::MatrixXd& x,
                               const Eigen::VectorXi& gamma, double sigma_y2,
                               const PriorSpec& prior) {
    check_design(residual, x, gamma);
    return log_ml(regression_stats(residual, x), active_set(gamma), sigma_y2, prior);
}

double inclusion_probability(const Eigen::VectorXd& residual, const Eigen::MatrixXd& x,
                             const Eigen::VectorXi& gamma, Eigen::Index j, double sigma_y2,
                             const PriorSpec& prior) {
    check_design(residual, x, gamma);
    if (j < 0 || j >= x.cols()) throw config_error("inclusion_probability: index out of range");
    return inclusion_from_stats(regression_stats(residual, x), gamma, j, sigma_y2, prior);
}

Eigen::VectorXi sample_gamma(const Eigen::VectorXd& residual, const Eigen::MatrixXd& x,
                             Eigen::VectorXi gamma, double sigma_y2, const PriorSpec& prior,
                             Rng& rng) {
    check_design(residual, x, gamma);
    const auto stats = regression_stats(residual, x);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double p = inclusion_from_stats(stats, gamma, j, sigma_y2, prior);
        gamma(j) = rng.bernoulli(p) ? 1 : 0;
    }
    return gamma;
}

ChainOutput run_gibbs(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                      const PriorSpec& prior, const GibbsConfig& config,
                      std::vector<std::string> names) {
    prior.validate();
    config.validate();
    const Eigen::Index n = y.size();
    const Eigen::Index p = x.cols();
    if (x.rows() != n) throw config_error("run_gibbs: design rows do not match the series");
    if (n < 1) throw data_error("run_gibbs: empty series");
    if (names.empty()) {
        for (Eigen::Index j = 0; j < p; ++j) names.push_back("beta" + std::to_string(j + 1));
    }
    if (static_cast<Eigen::Index>(names.size()) != p) {
        throw config_error("run_gibbs: one name per design column is required");
    }

    ModelParams params;
    params.beta = Eigen::VectorXd::Zero(p);
    if (config.init) {
        if (config.init->beta.size() != p) throw config_error("run_gibbs: init beta has wrong size");
        params = *config.init;
    }
    params.alpha0 = config.alpha0;
    params.validate();
    Eigen::VectorXi gamma = Eigen::VectorXi::Ones(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        if (config.init && params.beta(j) == 0.0) gamma(j) = 0;
    }

    const int kept = config.kept();
    ChainOutput chain;
    chain.names = std::move(names);
    chain.alpha0 = config.alpha0;
    chain.iteration.reserve(static_cast<std::size_t>(kept));
    chain.beta.resize(kept, p);
    chain.gamma.resize(kept, p);
    chain.sigma_y2.resize(kept);
    chain.sigma_mu2.resize(kept);
    chain.sigma_nu2.resize(kept);
    chain.loglik.resize(kept);
    chain.last_state.resize(kept, 2);
    if (config.store_paths) chain.paths.reserve(static_cast<std::size_t>(kept));

    Rng rng(config.seed);
    const Eigen::Matrix2d a_mat = transition_matrix();
    Eigen::VectorXd level_resid(n);
    Eigen::VectorXd slope_resid(n);

    for (int it = 1; it <= config.n_iter; ++it) {
        try {
            const auto filter = kalman_filter(params, y, x);
            const LatentPath path = ffbs_from_filter(filter, rng);

            const Eigen::VectorXd residual = y - path.col(0);
            gamma = sample_gamma(residual, x, gamma, params.sigma_y2, prior, rng);
            params.beta = sample_beta(residual, x, gamma, params.sigma_y2, prior, rng);

            const Eigen::VectorXd obs_resid =
                p > 0 ? Eigen::VectorXd(residual - x * params.beta) : residual;
            Eigen::Vector2d prev = config.alpha0;
            for (Eigen::Index t = 0; t < n; ++t) {
                const Eigen::Vector2d cur = path.row(t).transpose();
                const Eigen::Vector2d innov = cur - a_mat * prev;
                level_resid(t) = innov(0);
                slope_resid(t) = innov(1);
                prev = cur;
            }
            params.sigma_y2 = sample_variance(obs_resid, prior, rng);
            params.sigma_mu2 = sample_variance(level_resid, prior, rng);
            params.sigma_nu2 = sample_variance(slope_resid, prior, rng);

            if (it > config.burn_in) {
                const auto row = static_cast<Eigen::Index>(chain.iteration.size());
                chain.iteration.push_back(it);
                chain.beta.row(row) = params.beta.transpose();
                chain.gamma.row(row) = gamma.transpose();
                chain.sigma_y2(row) = params.sigma_y2;
                chain.sigma_mu2(row) = params.sigma_mu2;
                chain.sigma_nu2(row) = params.sigma_nu2;
                chain.loglik(row) = kalman_loglik(params, y, x);
                chain.last_state.row(row) = path.row(n - 1);
                if (config.store_paths) chain.paths.push_back(path);
            }
        } catch (const Error& e) {
            throw e.with_context("gibbs iteration " + std::to_string(it));
        }
    }
    return chain;
}

std::string gamma_name(const std::string& coefficient) {
    if (coefficient.rfind("beta", 0) == 0) return "gamma" + coefficient.substr(4);
    return "gamma_" + coefficient;
}

std::string chain_csv(const ChainOutput& chain) {
    std::ostringstream out;
    out << "iteration";
    for (const auto& name : chain.names) out << ',' << name;
    for (const auto& name : chain.names) out << ',' << gamma_name(name);
    out << ",sigma_y2,sigma_mu2,sigma_nu2,loglik\n";
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        out << chain.iteration[i];
        for (Eigen::Index j = 0; j < chain.beta.cols(); ++j) {
            out << ',' << csv::format_double(chain.beta(r, j));
        }
        for (Eigen::Index j = 0; j < chain.gamma.cols(); ++j) out << ',' << chain.gamma(r, j);
        out << ',' << csv::format_double(chain.sigma_y2(r)) << ','
            << csv::format_double(chain.sigma_mu2(r)) << ','
            << csv::format_double(chain.sigma_nu2(r)) << ','
            << csv::format_double(chain.loglik(r)) << '\n';
    }
    return out.str();
}

void write_chain_csv(const std::filesystem::path& path, const ChainOutput& chain) {
    csv::write_atomic(path, chain_csv(chain));
}

ChainOutput read_chain_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open chain file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw data_error(path.string() + ": empty chain file");
    const auto header = csv::split_line(line);
    if (header.size() < 5 || header.front() != "iteration" ||
        header[header.size() - 4] != "sigma_y2" || header.back() != "loglik" ||
        (header.size() - 5) % 2 != 0) {
        throw data_error(path.string() + ": not a chain file");
    }
    const auto p = static_cast<Eigen::Index>((header.size() - 5) / 2);
    ChainOutput chain;
    chain.names.assign(header.begin() + 1, header.begin() + 1 + p);

    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = csv::split_line(line);
        if (fields.size() != header.size()) {
            throw data_error(path.string() + ":" + std::to_string(lineno) + ": wrong field count");
        }
        std::vector<double> values;
        for (const auto& f : fields) values.push_back(csv::parse_double(f));
        rows.push_back(std::move(values));
    }
    const auto kept = static_cast<Eigen::Index>(rows.size());
    chain.beta.resize(kept, p);
    chain.gamma.resize(kept, p);
    chain.sigma_y2.resize(kept);
    chain.sigma_mu2.resize(kept);
    chain.sigma_nu2.resize(kept);
    chain.loglik.resize(kept);
    for (Eigen::Index r = 0; r < kept; ++r) {
        const auto& v = rows[static_cast<std::size_t>(r)];
        chain.iteration.push_back(static_cast<int>(v[0]));
        for (Eigen::Index j = 0; j < p; ++j) {
            chain.beta(r, j) = v[static_cast<std::size_t>(1 + j)];
            chain.gamma(r, j) = static_cast<int>(v[static_cast<std::size_t>(1 + p + j)]);
        }
        const auto base = static_cast<std::size_t>(1 + 2 * p);
        chain.sigma_y2(r) = v[base];
        chain.sigma_mu2(r) = v[base + 1];
        chain.sigma_nu2(r) = v[base + 2];
        chain.loglik(r) = v[base + 3];
    }
    return chain;
}

void write_latent_csv(const std::filesystem::path& path, const ChainOutput& chain) {
    if (chain.paths.size() != chain.size()) {
        throw config_error("write_latent_csv: chain was run without stored latent paths");
    }
    std::string out = "iteration,t,mu,nu\n";
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const auto& path_i = chain.paths[i];
        const std::string it = std::to_string(chain.iteration[i]) + ",";
        for (Eigen::Index t = 0; t < path_i.rows(); ++t) {
            out += it + std::to_string(t + 1) + "," + csv::format_double(path_i(t, 0)) + "," +
                   csv::format_double(path_i(t, 1)) + "\n";
        }
    }
    csv::write_atomic(path, out);
}

}  // namespace slicedssm

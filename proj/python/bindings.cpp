#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "slicedssm/diagnostics.hpp"
#include "slicedssm/error.hpp"
#include "slicedssm/forecast.hpp"
#include "slicedssm/gibbs.hpp"
#include "slicedssm/simulate.hpp"
#include "slicedssm/ssm.hpp"

namespace py = pybind11;
using namespace slicedssm;

namespace {

ModelParams make_params(const Eigen::VectorXd& beta, double sigma_y2, double sigma_mu2, double sigma_nu2,
                        const Eigen::Vector2d& alpha0) {
    ModelParams p;
    p.beta = beta;
    p.sigma_y2 = sigma_y2;
    p.sigma_mu2 = sigma_mu2;
    p.sigma_nu2 = sigma_nu2;
    p.alpha0 = alpha0;
    return p;
}

PriorSpec make_prior(double tau2, double rho, double a, double b) {
    PriorSpec prior;
    prior.tau2 = tau2;
    prior.rho = rho;
    prior.a = a;
    prior.b = b;
    return prior;
}

py::dict chain_dict(const ChainOutput& c) {
    py::dict d;
    d["names"] = c.names;
    d["iteration"] = c.iteration;
    d["beta"] = c.beta;
    d["gamma"] = c.gamma;
    d["sigma_y2"] = c.sigma_y2;
    d["sigma_mu2"] = c.sigma_mu2;
    d["sigma_nu2"] = c.sigma_nu2;
    d["loglik"] = c.loglik;
    d["last_state"] = c.last_state;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Sliced local-linear-trend state-space model";

    static py::exception<Error> base(m, "SlicedSsmError", PyExc_RuntimeError);
    static py::exception<Error> config(m, "ConfigError", base.ptr());
    static py::exception<Error> data(m, "DataError", base.ptr());
    static py::exception<Error> numerical(m, "NumericalError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            switch (e.kind()) {
                case ErrorKind::config: py::set_error(config, e.what()); break;
                case ErrorKind::data: py::set_error(data, e.what()); break;
                case ErrorKind::numerical: py::set_error(numerical, e.what()); break;
            }
        }
    });

    m.def(
        "kalman_loglik",
        [](const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const Eigen::VectorXd& beta, double sigma_y2,
           double sigma_mu2, double sigma_nu2, const Eigen::Vector2d& alpha0) {
            return kalman_loglik(make_params(beta, sigma_y2, sigma_mu2, sigma_nu2, alpha0), y, x);
        },
        py::arg("y"), py::arg("x"), py::arg("beta"), py::arg("sigma_y2"), py::arg("sigma_mu2"),
        py::arg("sigma_nu2"), py::arg("alpha0") = Eigen::Vector2d::Zero());

    m.def(
        "exact_joint_loglik",
        [](const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const Eigen::VectorXd& beta, double sigma_y2,
           double sigma_mu2, double sigma_nu2, const Eigen::Vector2d& alpha0) {
            return exact_joint_loglik(make_params(beta, sigma_y2, sigma_mu2, sigma_nu2, alpha0), y, x);
        },
        py::arg("y"), py::arg("x"), py::arg("beta"), py::arg("sigma_y2"), py::arg("sigma_mu2"),
        py::arg("sigma_nu2"), py::arg("alpha0") = Eigen::Vector2d::Zero());

    m.def(
        "ffbs_sample",
        [](const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const Eigen::VectorXd& beta, double sigma_y2,
           double sigma_mu2, double sigma_nu2, const Eigen::Vector2d& alpha0, std::uint64_t seed) {
            return Eigen::MatrixXd(
                ffbs_sample(make_params(beta, sigma_y2, sigma_mu2, sigma_nu2, alpha0), y, x, seed));
        },
        py::arg("y"), py::arg("x"), py::arg("beta"), py::arg("sigma_y2"), py::arg("sigma_mu2"),
        py::arg("sigma_nu2"), py::arg("alpha0") = Eigen::Vector2d::Zero(), py::arg("seed") = 1,
        "One latent path draw, shape (T, 2): level and slope.");

    m.def(
        "run_gibbs",
        [](const Eigen::VectorXd& y, const Eigen::MatrixXd& x, int n_iter, int burn_in, std::uint64_t seed,
           const Eigen::Vector2d& alpha0, double tau2, double rho, double a, double b,
           std::vector<std::string> names) {
            GibbsConfig cfg;
            cfg.n_iter = n_iter;
            cfg.burn_in = burn_in;
            cfg.seed = seed;
            cfg.alpha0 = alpha0;
            cfg.store_paths = false;
            ChainOutput chain;
            {
                py::gil_scoped_release release;
                chain = run_gibbs(y, x, make_prior(tau2, rho, a, b), cfg, std::move(names));
            }
            return chain_dict(chain);
        },
        py::arg("y"), py::arg("x"), py::arg("n_iter") = 5000, py::arg("burn_in") = 2000, py::arg("seed") = 1,
        py::arg("alpha0") = Eigen::Vector2d::Zero(), py::arg("tau2") = 1.0, py::arg("rho") = 0.5,
        py::arg("a") = 0.01, py::arg("b") = 0.01, py::arg("names") = std::vector<std::string>{},
        "Kept draws as a dict of arrays.");

    m.def(
        "summarize",
        [](const Eigen::VectorXd& y, const Eigen::MatrixXd& x, int n_iter, int burn_in, std::uint64_t seed,
           const Eigen::Vector2d& alpha0) {
            GibbsConfig cfg;
            cfg.n_iter = n_iter;
            cfg.burn_in = burn_in;
            cfg.seed = seed;
            cfg.alpha0 = alpha0;
            cfg.store_paths = false;
            py::list rows;
            for (const auto& s : summarize(run_gibbs(y, x, PriorSpec{}, cfg))) {
                py::dict r;
                r["parameter"] = s.parameter;
                r["rho_hat"] = s.rho_hat;
                r["mean"] = s.mean;
                r["sd"] = s.sd;
                r["ci_low"] = s.ci_low;
                r["ci_high"] = s.ci_high;
                rows.append(r);
            }
            return rows;
        },
        py::arg("y"), py::arg("x"), py::arg("n_iter") = 5000, py::arg("burn_in") = 2000, py::arg("seed") = 1,
        py::arg("alpha0") = Eigen::Vector2d::Zero(), "Fit with default priors and summarize the chain.");

    m.def(
        "ess", [](const std::vector<double>& draws, int max_lag) { return ess(draws, max_lag); },
        py::arg("draws"), py::arg("max_lag") = kDefaultEssMaxLag);

    m.def(
        "crps_quadrature",
        [](const std::vector<double>& samples, double y_obs, int nodes) {
            return crps_quadrature(samples, y_obs, CrpsConfig::trapezoid(nodes));
        },
        py::arg("samples"), py::arg("y_obs"), py::arg("nodes") = kDefaultCrpsNodes);

    m.def(
        "crps_empirical",
        [](const std::vector<double>& samples, double y_obs) { return crps_empirical(samples, y_obs); },
        py::arg("samples"), py::arg("y_obs"));

    m.def(
        "simulate",
        [](int horizon, std::uint64_t seed, double beta_upper, double beta_lower, double sigma_y2,
           double sigma_mu2, double sigma_nu2, double threshold) {
            DgpSpec spec;
            spec.horizon = horizon;
            spec.seed = seed;
            spec.beta_upper = beta_upper;
            spec.beta_lower = beta_lower;
            spec.sigma_y2 = sigma_y2;
            spec.sigma_mu2 = sigma_mu2;
            spec.sigma_nu2 = sigma_nu2;
            spec.threshold = threshold;
            const auto sim = simulate_dgp(spec);
            py::dict d;
            d["y"] = sim.y;
            d["x"] = sim.x;
            d["design"] = sim.design;
            d["mu"] = sim.mu;
            d["nu"] = sim.nu;
            d["rate"] = sim.rate;
            d["shock"] = sim.shock;
            return d;
        },
        py::arg("horizon") = 200, py::arg("seed") = 1, py::arg("beta_upper") = 1.0, py::arg("beta_lower") = 0.1,
        py::arg("sigma_y2") = 0.25, py::arg("sigma_mu2") = 0.01, py::arg("sigma_nu2") = 0.01,
        py::arg("threshold") = 2.0);

    m.def(
        "rolling_forecast",
        [](const Eigen::VectorXd& y, const Eigen::MatrixXd& x, int t0_first, int t0_last, int n_iter,
           int burn_in, std::uint64_t seed, const Eigen::Vector2d& alpha0, unsigned threads) {
            FitData data;
            data.y = y;
            data.x = x;
            data.rate = y.unaryExpr([](double v) { return inverse_response(v, ResponseLink::logit); });
            RollingOptions opts;
            opts.gibbs.n_iter = n_iter;
            opts.gibbs.burn_in = burn_in;
            opts.gibbs.seed = seed;
            opts.gibbs.alpha0 = alpha0;
            opts.threads = threads;
            RollingResult res;
            {
                py::gil_scoped_release release;
                res = rolling_forecast(data, t0_first, t0_last, opts);
            }
            py::list rows;
            for (const auto& r : res.records) {
                py::dict d;
                d["t0"] = r.t0;
                d["y_obs"] = r.y_obs;
                d["pred_mean"] = r.pred.mean_rate();
                d["crps"] = r.crps;
                rows.append(d);
            }
            return py::make_tuple(rows, res.mean_crps);
        },
        py::arg("y"), py::arg("x"), py::arg("t0_first"), py::arg("t0_last"), py::arg("n_iter") = 5000,
        py::arg("burn_in") = 2000, py::arg("seed") = 1, py::arg("alpha0") = Eigen::Vector2d::Zero(),
        py::arg("threads") = 0u, "Logit-scale response; returns (records, mean_crps).");

    m.def(
        "ols_baseline",
        [](const Eigen::VectorXd& y, const Eigen::MatrixXd& x, int t0_first, int t0_last) {
            FitData data;
            data.y = y;
            data.x = x;
            data.rate = y.unaryExpr([](double v) { return inverse_response(v, ResponseLink::logit); });
            const auto res = ols_baseline(data, t0_first, t0_last);
            return py::make_tuple(res.mean_abs_error, res.warnings);
        },
        py::arg("y"), py::arg("x"), py::arg("t0_first"), py::arg("t0_last"));

    m.def(
        "inverse_response",
        [](double y, const std::string& link) { return inverse_response(y, parse_link(link)); }, py::arg("y"),
        py::arg("link") = "logit");
    m.def(
        "transform_response",
        [](double r, const std::string& link) { return transform_response(r, parse_link(link)); },
        py::arg("r"), py::arg("link") = "logit");
}

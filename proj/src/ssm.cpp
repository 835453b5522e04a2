#include "slicedssm/ssm.hpp"

#include <cmath>
#include <string>

#include "slicedssm/error.hpp"

namespace slicedssm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_inputs(const ModelParams& params, const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
    params.validate();
    if (x.rows() != y.size()) {
        throw config_error("design has " + std::to_string(x.rows()) + " rows but the series has " +
                           std::to_string(y.size()) + " observations");
    }
    if (x.cols() != params.beta.size()) {
        throw config_error("design has " + std::to_string(x.cols()) +
                           " columns but beta has " + std::to_string(params.beta.size()));
    }
    if (y.size() == 0) throw data_error("empty response series");
    if (!y.allFinite()) throw data_error("response series contains non-finite values");
    if (!x.allFinite()) throw data_error("design contains non-finite values");
}

Eigen::Matrix2d symmetrize(const Eigen::Matrix2d& m) { return 0.5 * (m + m.transpose()); }

// Lower-triangular L with L L' = c for a symmetric PSD 2x2 c; negative
// round-off on the diagonal is treated as zero.
Eigen::Matrix2d psd_factor(const Eigen::Matrix2d& c) {
    Eigen::Matrix2d l = Eigen::Matrix2d::Zero();
    const double c00 = std::max(c(0, 0), 0.0);
    const double c11 = std::max(c(1, 1), 0.0);
    if (c00 > 0.0) {
        l(0, 0) = std::sqrt(c00);
        l(1, 0) = c(1, 0) / l(0, 0);
        l(1, 1) = std::sqrt(std::max(c11 - l(1, 0) * l(1, 0), 0.0));
    } else {
        l(1, 1) = std::sqrt(c11);
    }
    return l;
}

Eigen::Matrix2d pseudo_inverse(const Eigen::Matrix2d& s) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig;
    eig.computeDirect(s);
    const auto& vals = eig.eigenvalues();
    const double cutoff = 1e-13 * std::max(vals.cwiseAbs().maxCoeff(), 0.0);
    Eigen::Vector2d inv = Eigen::Vector2d::Zero();
    for (int i = 0; i < 2; ++i) {
        if (vals(i) > cutoff && vals(i) > 0.0) inv(i) = 1.0 / vals(i);
    }
    return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

template <bool kStore>
double run_filter(const ModelParams& params, const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                  FilterOutput* out) {
    const Eigen::Index n = y.size();
    const Eigen::Matrix2d a_mat = transition_matrix();
    const Eigen::Matrix2d q = state_noise(params);
    const Eigen::VectorXd offset =
        x.cols() > 0 ? Eigen::VectorXd(x * params.beta) : Eigen::VectorXd::Zero(n);

    if constexpr (kStore) {
        out->predicted_mean.resize(n);
        out->predicted_cov.resize(n);
        out->filtered_mean.resize(n);
        out->filtered_cov.resize(n);
        out->y_pred_mean.resize(n);
        out->y_pred_var.resize(n);
    }

    Eigen::Vector2d a = params.alpha0;
    Eigen::Matrix2d p = Eigen::Matrix2d::Zero();
    double loglik = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
        const Eigen::Vector2d a_pred = a_mat * a;
        const Eigen::Matrix2d p_pred = symmetrize(a_mat * p * a_mat.transpose() + q);
        const double y_mean = offset(t) + a_pred(0);
        const double f = p_pred(0, 0) + params.sigma_y2;
        if (!(f > 0.0) || !std::isfinite(f)) {
            throw numerical_error("non-positive prediction variance at t=" + std::to_string(t + 1));
        }
        const double v = y(t) - y_mean;
        loglik += -0.5 * (kLog2Pi + std::log(f) + v * v / f);

        const Eigen::Vector2d k = p_pred.col(0) / f;
        a = a_pred + k * v;
        Eigen::Matrix2d ikz = Eigen::Matrix2d::Identity();
        ikz.col(0) -= k;
        p = symmetrize(ikz * p_pred * ikz.transpose() + params.sigma_y2 * k * k.transpose());

        if constexpr (kStore) {
            out->predicted_mean[t] = a_pred;
            out->predicted_cov[t] = p_pred;
            out->filtered_mean[t] = a;
            out->filtered_cov[t] = p;
            out->y_pred_mean(t) = y_mean;
            out->y_pred_var(t) = f;
        }
    }
    if (!std::isfinite(loglik)) throw numerical_error("log-likelihood is not finite");
    if constexpr (kStore) out->loglik = loglik;
    return loglik;
}

}  // namespace

void ModelParams::validate() const {
    if (!(sigma_y2 > 0.0) || !std::isfinite(sigma_y2)) {
        throw config_error("sigma_y2 must be positive and finite");
    }
    if (!(sigma_mu2 >= 0.0) || !std::isfinite(sigma_mu2) || !(sigma_nu2 >= 0.0) ||
        !std::isfinite(sigma_nu2)) {
        throw config_error("state variances must be nonnegative and finite");
    }
    if (!alpha0.allFinite() || !beta.allFinite()) {
        throw config_error("alpha0 and beta must be finite");
    }
}

Eigen::Matrix2d transition_matrix() {
    Eigen::Matrix2d a;
    a << 1.0, 1.0, 0.0, 1.0;
    return a;
}

Eigen::Matrix2d state_noise(const ModelParams& params) {
    return Eigen::Vector2d(params.sigma_mu2, params.sigma_nu2).asDiagonal();
}

FilterOutput kalman_filter(const ModelParams& params, const Eigen::VectorXd& y,
                           const Eigen::MatrixXd& x) {
    check_inputs(params, y, x);
    FilterOutput out;
    run_filter<true>(params, y, x, &out);
    return out;
}

double kalman_loglik(const ModelParams& params, const Eigen::VectorXd& y,
                     const Eigen::MatrixXd& x) {
    check_inputs(params, y, x);
    return run_filter<false>(params, y, x, nullptr);
}

LatentPath ffbs_from_filter(const FilterOutput& filter, Rng& rng) {
    const auto n = static_cast<Eigen::Index>(filter.filtered_mean.size());
    const Eigen::Matrix2d a_mat = transition_matrix();
    LatentPath path(n, 2);

    auto draw = [&rng](const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov) {
        const Eigen::Vector2d z(rng.normal(), rng.normal());
        return Eigen::Vector2d(mean + psd_factor(cov) * z);
    };

    Eigen::Vector2d next = draw(filter.filtered_mean[n - 1], filter.filtered_cov[n - 1]);
    path.row(n - 1) = next.transpose();
    for (Eigen::Index t = n - 2; t >= 0; --t) {
        const Eigen::Matrix2d& p = filter.filtered_cov[t];
        const Eigen::Matrix2d& s = filter.predicted_cov[t + 1];
        const Eigen::Matrix2d gain = p * a_mat.transpose() * pseudo_inverse(s);
        const Eigen::Vector2d mean =
            filter.filtered_mean[t] + gain * (next - filter.predicted_mean[t + 1]);
        const Eigen::Matrix2d cov = symmetrize(p - gain * s * gain.transpose());
        next = draw(mean, cov);
        path.row(t) = next.transpose();
    }
    return path;
}

LatentPath ffbs_sample(const ModelParams& params, const Eigen::VectorXd& y,
                       const Eigen::MatrixXd& x, Rng& rng) {
    const auto filter = kalman_filter(params, y, x);
    return ffbs_from_filter(filter, rng);
}

LatentPath ffbs_sample(const ModelParams& params, const Eigen::VectorXd& y,
                       const Eigen::MatrixXd& x, std::uint64_t seed) {
    Rng rng(seed);
    return ffbs_sample(params, y, x, rng);
}

double exact_joint_loglik(const ModelParams& params, const Eigen::VectorXd& y,
                          const Eigen::MatrixXd& x) {
    check_inputs(params, y, x);
    const Eigen::Index n = y.size();
    if (n > kMaxDenseHorizon) {
        throw config_error("exact_joint_loglik: T=" + std::to_string(n) + " exceeds the dense limit " +
                           std::to_string(kMaxDenseHorizon));
    }
    const Eigen::Matrix2d a_mat = transition_matrix();
    const Eigen::Matrix2d q = state_noise(params);

    // state_var[t] = Var(alpha_{t+1}); state mean follows A^t alpha0.
    std::vector<Eigen::Matrix2d> state_var(n);
    Eigen::VectorXd mean(n);
    Eigen::Matrix2d var = Eigen::Matrix2d::Zero();
    Eigen::Vector2d m = params.alpha0;
    for (Eigen::Index t = 0; t < n; ++t) {
        var = a_mat * var * a_mat.transpose() + q;
        m = a_mat * m;
        state_var[t] = var;
        mean(t) = m(0) + (x.cols() > 0 ? x.row(t).dot(params.beta) : 0.0);
    }

    // Cov(alpha_t, alpha_s) = A^{t-s} Var(alpha_s) for t >= s.
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index s = 0; s < n; ++s) {
        Eigen::Matrix2d cross = state_var[s];
        for (Eigen::Index t = s; t < n; ++t) {
            cov(t, s) = cross(0, 0);
            cov(s, t) = cross(0, 0);
            cross = a_mat * cross;
        }
        cov(s, s) += params.sigma_y2;
    }

    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw numerical_error("exact_joint_loglik: covariance is not positive definite");
    }
    const Eigen::VectorXd resid = y - mean;
    const Eigen::VectorXd white = llt.matrixL().solve(resid);
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return -0.5 * (static_cast<double>(n) * kLog2Pi + logdet + white.squaredNorm());
}

}  // namespace slicedssm

#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "miscrit/error.hpp"
#include "miscrit/family.hpp"

namespace miscrit {

/// Response vector and n x d design matrix of one working model.
struct Dataset {
    Eigen::VectorXd y;
    Eigen::MatrixXd x;

    Eigen::Index n() const noexcept { return x.rows(); }
    Eigen::Index d() const noexcept { return x.cols(); }
};

/// Shape, finiteness and response-support checks. Rank is checked at fit time.
inline void validate(const Dataset& data, const Family& family) {
    const auto n = data.n();
    const auto d = data.d();
    if (n < 1) throw Error(ErrorCode::invalid_argument, "dataset has no rows");
    if (d < 1) throw Error(ErrorCode::invalid_argument, "design matrix has no columns");
    if (data.y.size() != n)
        throw Error(ErrorCode::invalid_argument, "response length " + std::to_string(data.y.size()) +
                                                     " does not match design rows " + std::to_string(n));
    if (d > n)
        throw Error(ErrorCode::design_rank, "design has more columns (" + std::to_string(d) +
                                                ") than rows (" + std::to_string(n) + ")");
    if (!data.x.allFinite()) throw Error(ErrorCode::invalid_argument, "design matrix has non-finite entries");
    for (Eigen::Index i = 0; i < n; ++i) {
        const double yi = data.y[i];
        if (!std::isfinite(yi))
            throw Error(ErrorCode::invalid_argument, "response row " + std::to_string(i) + " is not finite");
        if (family.kind() == FamilyKind::logistic && yi != 0.0 && yi != 1.0)
            throw Error(ErrorCode::invalid_argument,
                        "logistic response row " + std::to_string(i) + " is not 0 or 1");
        if (family.kind() == FamilyKind::poisson && (yi < 0.0 || yi != std::floor(yi)))
            throw Error(ErrorCode::invalid_argument,
                        "poisson response row " + std::to_string(i) + " is not a nonnegative integer");
    }
}

struct FitOptions {
    double tol_score = 1e-8;
    int max_iter = 100;
    /// Added to the Newton Hessian diagonal only if its Cholesky factorization fails.
    double ridge_on_singular = 0.0;
    std::optional<Eigen::VectorXd> initial_beta;
};

struct FitResult {
    Eigen::VectorXd beta_hat;
    double loglik = 0.0;
    double dispersion = 1.0;
    int iterations = 0;
    bool converged = false;
    double score_norm = std::numeric_limits<double>::infinity();
    bool separation = false;
    /// Quasi-log-likelihood at the start and after every accepted Newton step.
    std::vector<double> loglik_path;
};

/// y^T X beta - 1^T b(X beta); the base-measure term is dropped.
inline double quasi_log_likelihood(const Dataset& data, const Family& family, const Eigen::VectorXd& beta) {
    if (beta.size() != data.d())
        throw Error(ErrorCode::invalid_argument, "coefficient length does not match design columns");
    const Eigen::VectorXd theta = data.x * beta;
    return data.y.dot(theta) - b_sum(family, theta);
}

/// X^T (y - mu(X beta)).
inline Eigen::VectorXd score(const Dataset& data, const Family& family, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd theta = data.x * beta;
    Eigen::VectorXd resid(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) resid[i] = data.y[i] - family.b_prime(theta[i]);
    return data.x.transpose() * resid;
}

namespace detail {

inline void require_full_rank(const Eigen::MatrixXd& x) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < x.cols())
        throw Error(ErrorCode::design_rank, "design matrix has rank " + std::to_string(qr.rank()) +
                                                " < " + std::to_string(x.cols()) + " columns");
}

inline FitResult fit_linear(const Dataset& data, const Family& family, const FitOptions& opts) {
    const auto n = data.n();
    const auto d = data.d();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.x);
    if (qr.rank() < d)
        throw Error(ErrorCode::design_rank, "design matrix has rank " + std::to_string(qr.rank()) +
                                                " < " + std::to_string(d) + " columns");

    Eigen::VectorXd gamma = qr.solve(data.y);
    Eigen::VectorXd resid = data.y - data.x * gamma;
    // one step of iterative refinement pulls X^T r down to rounding level
    gamma += qr.solve(resid);
    resid = data.y - data.x * gamma;
    const double rss = resid.squaredNorm();

    double sigma2 = 0.0;
    if (family.estimates_dispersion()) {
        if (n <= d)
            throw Error(ErrorCode::dispersion_undefined,
                        "dispersion needs n > d (n=" + std::to_string(n) + ", d=" + std::to_string(d) + ")");
        if (rss <= 1e-28 * data.y.squaredNorm())
            throw Error(ErrorCode::dispersion_degenerate, "residual sum of squares is zero (exact fit)");
        sigma2 = rss / static_cast<double>(n - d);
    } else {
        sigma2 = family.dispersion();
    }

    FitResult fit;
    fit.beta_hat = gamma / sigma2;
    fit.dispersion = sigma2;
    const double nd = static_cast<double>(n);
    fit.loglik = -rss / (2.0 * sigma2) - 0.5 * nd * std::log(sigma2) -
                 0.5 * nd * std::log(2.0 * std::numbers::pi);
    fit.iterations = 0;
    fit.score_norm = (data.x.transpose() * resid).cwiseAbs().maxCoeff();
    fit.converged = fit.score_norm <= opts.tol_score && std::isfinite(fit.loglik);
    fit.loglik_path = {fit.loglik};
    return fit;
}

inline double loglik_or_neg_inf(const Dataset& data, const Family& family, const Eigen::VectorXd& beta) {
    try {
        return quasi_log_likelihood(data, family, beta);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::nonfinite_link) return -std::numeric_limits<double>::infinity();
        throw;
    }
}

inline FitResult fit_newton(const Dataset& data, const Family& family, const FitOptions& opts) {
    const auto d = data.d();
    require_full_rank(data.x);

    Eigen::VectorXd beta = opts.initial_beta ? *opts.initial_beta : Eigen::VectorXd::Zero(d);
    if (beta.size() != d) throw Error(ErrorCode::invalid_argument, "initial beta has wrong length");

    FitResult fit;
    double ll = quasi_log_likelihood(data, family, beta);
    fit.loglik_path.push_back(ll);

    constexpr int max_halvings = 30;
    for (;;) {
        const Eigen::VectorXd theta = data.x * beta;
        const LinkValues link = evaluate_link(family, theta);
        const Eigen::VectorXd grad = data.x.transpose() * (data.y - link.mu);
        fit.score_norm = grad.cwiseAbs().maxCoeff();
        if (fit.score_norm <= opts.tol_score) {
            fit.converged = true;
            break;
        }
        if (fit.iterations >= opts.max_iter) break;

        Eigen::MatrixXd hess = data.x.transpose() * link.sigma_diag.asDiagonal() * data.x;
        Eigen::LLT<Eigen::MatrixXd> llt(hess);
        if (llt.info() != Eigen::Success) {
            if (opts.ridge_on_singular <= 0.0) break;
            hess.diagonal().array() += opts.ridge_on_singular;
            llt.compute(hess);
            if (llt.info() != Eigen::Success) break;
        }
        const Eigen::VectorXd step = llt.solve(grad);

        // accept when the objective does not fall beyond rounding noise
        const double slack = 16.0 * std::numeric_limits<double>::epsilon() * (std::abs(ll) + 1.0);
        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h <= max_halvings; ++h, t *= 0.5) {
            const Eigen::VectorXd trial = beta + t * step;
            const double trial_ll = loglik_or_neg_inf(data, family, trial);
            if (trial_ll >= ll - slack) {
                beta = trial;
                ll = trial_ll;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        ++fit.iterations;
        fit.loglik_path.push_back(ll);
    }

    fit.beta_hat = beta;
    fit.loglik = ll;
    fit.dispersion = 1.0;

    const double beta_norm = beta.cwiseAbs().maxCoeff();
    if (beta_norm > 1e6 && fit.score_norm > opts.tol_score) fit.separation = true;
    if (family.kind() == FamilyKind::logistic) {
        const Eigen::VectorXd mu = evaluate_link(family, data.x * beta).mu;
        if ((data.y - mu).cwiseAbs().maxCoeff() < 1e-6) fit.separation = true;
    }
    if (fit.separation) fit.converged = false;
    if (!std::isfinite(fit.loglik)) fit.converged = false;
    return fit;
}

}  // namespace detail

/// Quasi-maximum likelihood fit: closed-form least squares for the linear
/// family, damped Newton on the concave quasi-log-likelihood otherwise.
///
/// Non-convergence is reported through FitResult::converged rather than thrown.
inline FitResult fit_qmle(const Dataset& data, const Family& family, const FitOptions& opts = {}) {
    validate(data, family);
    if (family.kind() == FamilyKind::linear) return detail::fit_linear(data, family, opts);
    return detail::fit_newton(data, family, opts);
}

}  // namespace miscrit

#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "miscrit/error.hpp"
#include "miscrit/family.hpp"
#include "miscrit/qmle.hpp"

namespace miscrit {

/// Model-based information A = X^T Sigma(X beta) X, outer-product matrix
/// B = X^T diag(r o r) X, and the spectral summaries of H = A^{-1} B.
struct SandwichPair {
    Eigen::MatrixXd A_hat;
    Eigen::MatrixXd B_hat;
    double trace_H = 0.0;
    /// -inf when B is numerically singular.
    double logdet_H = -std::numeric_limits<double>::infinity();
    bool B_rank_ok = false;
};

namespace detail {

inline double logdet_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

// Cholesky succeeded and the factor is not numerically rank deficient.
inline bool llt_full_rank(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    if (llt.info() != Eigen::Success) return false;
    const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
    const double lo = diag.minCoeff();
    const double hi = diag.maxCoeff();
    if (!(lo > 0.0) || !std::isfinite(hi)) return false;
    const double ratio = lo / hi;
    return ratio * ratio > static_cast<double>(diag.size()) * std::numeric_limits<double>::epsilon();
}

}  // namespace detail

/// Fills trace_H and logdet_H from a given (A, B) pair.
inline SandwichPair contrast(Eigen::MatrixXd a_hat, Eigen::MatrixXd b_hat) {
    if (a_hat.rows() != a_hat.cols() || b_hat.rows() != b_hat.cols() || a_hat.rows() != b_hat.rows())
        throw Error(ErrorCode::invalid_argument, "A and B must be square and of equal size");

    SandwichPair out;
    out.A_hat = std::move(a_hat);
    out.B_hat = std::move(b_hat);

    const Eigen::LLT<Eigen::MatrixXd> llt_a(out.A_hat);
    if (!detail::llt_full_rank(llt_a))
        throw Error(ErrorCode::model_degenerate, "model-based information matrix is not positive definite");

    // tr(L^{-1} B L^{-T}) with A = L L^T
    const Eigen::MatrixXd l_inv_b = llt_a.matrixL().solve(out.B_hat);
    const Eigen::MatrixXd m = llt_a.matrixL().solve(l_inv_b.transpose());
    out.trace_H = m.trace();

    const Eigen::LLT<Eigen::MatrixXd> llt_b(out.B_hat);
    out.B_rank_ok = detail::llt_full_rank(llt_b);
    out.logdet_H = out.B_rank_ok
                       ? detail::logdet_from_llt(llt_b) - detail::logdet_from_llt(llt_a)
                       : -std::numeric_limits<double>::infinity();
    return out;
}

inline SandwichPair estimate_sandwich(const Dataset& data, const Family& family, const FitResult& fit) {
    if (fit.beta_hat.size() != data.d())
        throw Error(ErrorCode::invalid_argument, "fit does not match the dataset's design");
    const Family resolved = family.estimates_dispersion() ? family.with_dispersion(fit.dispersion) : family;

    const LinkValues link = evaluate_link(resolved, data.x * fit.beta_hat);
    const Eigen::VectorXd resid = data.y - link.mu;
    const Eigen::VectorXd r2 = resid.cwiseProduct(resid);

    Eigen::MatrixXd a_hat = data.x.transpose() * link.sigma_diag.asDiagonal() * data.x;
    Eigen::MatrixXd b_hat = data.x.transpose() * r2.asDiagonal() * data.x;
    // exact symmetry; the products above agree only to rounding
    a_hat = 0.5 * (a_hat + a_hat.transpose()).eval();
    b_hat = 0.5 * (b_hat + b_hat.transpose()).eval();
    return contrast(std::move(a_hat), std::move(b_hat));
}

}  // namespace miscrit

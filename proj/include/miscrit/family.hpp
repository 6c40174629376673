#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <variant>

#include <Eigen/Dense>

#include "miscrit/error.hpp"

namespace miscrit {

enum class FamilyKind { linear, logistic, poisson };

inline const char* to_string(FamilyKind kind) {
    switch (kind) {
    case FamilyKind::linear: return "linear";
    case FamilyKind::logistic: return "logistic";
    case FamilyKind::poisson: return "poisson";
    }
    return "unknown";
}

inline FamilyKind parse_family_kind(std::string_view name) {
    if (name == "linear" || name == "Linear") return FamilyKind::linear;
    if (name == "logistic" || name == "Logistic") return FamilyKind::logistic;
    if (name == "poisson" || name == "Poisson") return FamilyKind::poisson;
    throw Error(ErrorCode::invalid_argument, "unknown family '" + std::string(name) + "'");
}

struct FixedDispersion {
    double value = 1.0;
};

/// Linear only: sigma^2 is resolved at fit time as RSS / (n - d).
struct EstimateFromRss {};

using DispersionPolicy = std::variant<FixedDispersion, EstimateFromRss>;

/// Canonical-link exponential family with cumulant function b(theta).
///
/// Linear:   b = s2 * theta^2 / 2, b' = s2 * theta, b'' = s2
/// Logistic: b = log(1 + e^theta), b' = sigmoid(theta), b'' = b'(1 - b')
/// Poisson:  b = b' = b'' = e^theta
class Family {
public:
    static Family linear(double sigma2) {
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
            throw Error(ErrorCode::invalid_argument, "linear dispersion must be positive and finite");
        return Family(FamilyKind::linear, FixedDispersion{sigma2});
    }
    static Family linear_estimated() { return Family(FamilyKind::linear, EstimateFromRss{}); }
    static Family logistic() { return Family(FamilyKind::logistic, FixedDispersion{1.0}); }
    static Family poisson() { return Family(FamilyKind::poisson, FixedDispersion{1.0}); }

    /// The family a user would mean by name; linear estimates its dispersion.
    static Family from_kind(FamilyKind kind) {
        switch (kind) {
        case FamilyKind::linear: return linear_estimated();
        case FamilyKind::logistic: return logistic();
        case FamilyKind::poisson: return poisson();
        }
        throw Error(ErrorCode::invalid_argument, "unknown family kind");
    }

    FamilyKind kind() const noexcept { return kind_; }
    const DispersionPolicy& dispersion_policy() const noexcept { return policy_; }

    bool estimates_dispersion() const noexcept {
        return std::holds_alternative<EstimateFromRss>(policy_);
    }
    bool dispersion_resolved() const noexcept { return !estimates_dispersion(); }

    double dispersion() const {
        if (const auto* fixed = std::get_if<FixedDispersion>(&policy_)) return fixed->value;
        throw Error(ErrorCode::dispersion_undefined,
                    "linear dispersion is estimated from the fit and not yet resolved");
    }

    /// Copy with the dispersion pinned, used once sigma^2 has been estimated.
    Family with_dispersion(double sigma2) const {
        if (kind_ != FamilyKind::linear)
            throw Error(ErrorCode::invalid_argument, "only the linear family carries a dispersion");
        return linear(sigma2);
    }

    double b(double theta) const {
        check_input(theta);
        switch (kind_) {
        case FamilyKind::linear: return finite_or_throw(0.5 * dispersion() * theta * theta);
        case FamilyKind::logistic:
            return std::max(theta, 0.0) + std::log1p(std::exp(-std::abs(theta)));
        case FamilyKind::poisson: return std::exp(poisson_guard(theta));
        }
        return 0.0;
    }

    double b_prime(double theta) const {
        check_input(theta);
        switch (kind_) {
        case FamilyKind::linear: return finite_or_throw(dispersion() * theta);
        case FamilyKind::logistic:
            if (theta >= 0.0) return 1.0 / (1.0 + std::exp(-theta));
            else {
                const double e = std::exp(theta);
                return e / (1.0 + e);
            }
        case FamilyKind::poisson: return std::exp(poisson_guard(theta));
        }
        return 0.0;
    }

    double b_double_prime(double theta) const {
        check_input(theta);
        switch (kind_) {
        case FamilyKind::linear: return dispersion();
        case FamilyKind::logistic: {
            // symmetric in theta; e^{-|t|} / (1 + e^{-|t|})^2 never overflows
            const double e = std::exp(-std::abs(theta));
            const double denom = 1.0 + e;
            return e / (denom * denom);
        }
        case FamilyKind::poisson: return std::exp(poisson_guard(theta));
        }
        return 0.0;
    }

    /// Largest theta for which e^theta is finite.
    static double poisson_theta_max() noexcept {
        return std::log(std::numeric_limits<double>::max());
    }

private:
    Family(FamilyKind kind, DispersionPolicy policy) : kind_(kind), policy_(policy) {}

    static void check_input(double theta) {
        if (!std::isfinite(theta))
            throw Error(ErrorCode::nonfinite_link, "linear predictor is NaN or infinite");
    }

    static double poisson_guard(double theta) {
        if (theta > poisson_theta_max())
            throw Error(ErrorCode::nonfinite_link,
                        "poisson linear predictor " + std::to_string(theta) + " overflows exp");
        return theta;
    }

    static double finite_or_throw(double value) {
        if (!std::isfinite(value))
            throw Error(ErrorCode::nonfinite_link, "linear-family cumulant overflowed");
        return value;
    }

    FamilyKind kind_;
    DispersionPolicy policy_;
};

struct LinkValues {
    Eigen::VectorXd theta;
    Eigen::VectorXd mu;
    Eigen::VectorXd sigma_diag;
};

inline LinkValues evaluate_link(const Family& family, const Eigen::VectorXd& theta) {
    const Eigen::Index n = theta.size();
    LinkValues out{theta, Eigen::VectorXd(n), Eigen::VectorXd(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        out.mu[i] = family.b_prime(theta[i]);
        out.sigma_diag[i] = family.b_double_prime(theta[i]);
    }
    return out;
}

/// sum_i b(theta_i), the 1^T b(X beta) term of the quasi-log-likelihood.
inline double b_sum(const Family& family, const Eigen::VectorXd& theta) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < theta.size(); ++i) total += family.b(theta[i]);
    if (!std::isfinite(total)) throw Error(ErrorCode::nonfinite_link, "sum of b(theta) overflowed");
    return total;
}

}  // namespace miscrit

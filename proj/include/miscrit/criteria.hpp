#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "miscrit/error.hpp"
#include "miscrit/sandwich.hpp"

namespace miscrit {

namespace detail {

inline void require_dim(long dim) {
    if (dim < 1) throw Error(ErrorCode::invalid_argument, "model dimension must be at least 1");
}

inline void require_n(long n) {
    if (n < 2) throw Error(ErrorCode::invalid_argument, "sample size must be at least 2");
}

inline constexpr double infinity = std::numeric_limits<double>::infinity();

}  // namespace detail

inline double gamma_star(double gamma) { return std::max(gamma, 1.0 - gamma); }
inline double gamma_star_star(double gamma) { return std::max(2.0 - 3.0 * gamma, 1.0 - gamma); }

inline double aic(double loglik, long dim) {
    detail::require_dim(dim);
    return -2.0 * loglik + 2.0 * static_cast<double>(dim);
}

inline double bic(double loglik, long dim, long n) {
    detail::require_dim(dim);
    detail::require_n(n);
    return -2.0 * loglik + std::log(static_cast<double>(n)) * static_cast<double>(dim);
}

inline double gaic(double loglik, const SandwichPair& sw) { return -2.0 * loglik + 2.0 * sw.trace_H; }

inline double gbic(double loglik, const SandwichPair& sw, long dim, long n) {
    detail::require_dim(dim);
    detail::require_n(n);
    if (!sw.B_rank_ok) return detail::infinity;
    return -2.0 * loglik + std::log(static_cast<double>(n)) * static_cast<double>(dim) - sw.logdet_H;
}

/// Semi-Bayesian criterion with index gamma; gamma = 0 is GAIC, gamma = 1 is GBIC.
///
/// Terms with a zero weight are skipped rather than multiplied by zero, so the
/// endpoints evaluate the exact same floating-point expression as gaic/gbic
/// and a -inf log-determinant never turns into NaN.
inline double sic(double loglik, const SandwichPair& sw, long dim, long n, double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw Error(ErrorCode::domain, "SIC index gamma must lie in [0, 1]");
    detail::require_dim(dim);
    detail::require_n(n);
    if (gamma > 0.0 && !sw.B_rank_ok) return detail::infinity;

    const double gs = gamma_star(gamma);
    const double gss = gamma_star_star(gamma);
    double value = -2.0 * gs * loglik;
    if (gamma > 0.0) {
        value += gamma * std::log(static_cast<double>(n)) * static_cast<double>(dim);
        value -= gamma * sw.logdet_H;
    }
    if (gss > 0.0) value += gss * sw.trace_H;
    return value;
}

/// SIC at gamma = 1/2 as goodness of fit + model complexity + misspecification.
struct SicDecomposition {
    double neg_loglik = 0.0;
    double complexity = 0.0;
    /// KL divergence of N(0, A) from N(0, B).
    double misspec_kl = 0.0;

    double total() const { return neg_loglik + complexity + misspec_kl; }
};

inline SicDecomposition sic_half_decomposition(double loglik, const SandwichPair& sw, long dim, long n) {
    detail::require_dim(dim);
    detail::require_n(n);
    if (!sw.B_rank_ok)
        throw Error(ErrorCode::decomposition_undefined, "outer-product matrix is singular");
    const double d = static_cast<double>(dim);
    return {-loglik, 0.5 * (1.0 + std::log(static_cast<double>(n))) * d,
            0.5 * (sw.trace_H - sw.logdet_H - d)};
}

enum class CriterionKind { aic, bic, gaic, gbic, sic };

/// A named scoring rule; gamma is only meaningful for SIC.
struct Criterion {
    CriterionKind kind = CriterionKind::sic;
    double gamma = 0.5;

    static Criterion aic() { return {CriterionKind::aic, 0.0}; }
    static Criterion bic() { return {CriterionKind::bic, 0.0}; }
    static Criterion gaic() { return {CriterionKind::gaic, 0.0}; }
    static Criterion gbic() { return {CriterionKind::gbic, 0.0}; }
    static Criterion sic(double gamma = 0.5) { return {CriterionKind::sic, gamma}; }

    std::string name() const {
        switch (kind) {
        case CriterionKind::aic: return "AIC";
        case CriterionKind::bic: return "BIC";
        case CriterionKind::gaic: return "GAIC";
        case CriterionKind::gbic: return "GBIC";
        case CriterionKind::sic: {
            if (gamma == 0.5) return "SIC";
            char buf[32];
            std::snprintf(buf, sizeof buf, "SIC_%g", gamma);
            return buf;
        }
        }
        return "?";
    }

    friend bool operator==(const Criterion&, const Criterion&) = default;
};

/// Parses AIC, BIC, GAIC, GBIC, SIC (gamma 1/2) or SIC_<gamma>, case-insensitively.
inline Criterion parse_criterion(std::string_view text) {
    std::string s(text);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
    if (s == "AIC") return Criterion::aic();
    if (s == "BIC") return Criterion::bic();
    if (s == "GAIC") return Criterion::gaic();
    if (s == "GBIC") return Criterion::gbic();
    if (s == "SIC") return Criterion::sic();
    if (s.rfind("SIC_", 0) == 0 || s.rfind("SIC@", 0) == 0) {
        const std::string num = s.substr(4);
        char* end = nullptr;
        const double g = std::strtod(num.c_str(), &end);
        if (num.empty() || end != num.c_str() + num.size())
            throw Error(ErrorCode::invalid_argument, "bad SIC index in '" + std::string(text) + "'");
        if (!(g >= 0.0 && g <= 1.0))
            throw Error(ErrorCode::domain, "SIC index must lie in [0, 1]: '" + std::string(text) + "'");
        return Criterion::sic(g);
    }
    throw Error(ErrorCode::invalid_argument, "unknown criterion '" + std::string(text) + "'");
}

inline std::vector<Criterion> default_criteria() {
    return {Criterion::aic(), Criterion::bic(), Criterion::gaic(), Criterion::gbic(), Criterion::sic()};
}

inline std::vector<double> default_gamma_grid() { return {0.0, 0.25, 0.5, 0.75, 1.0}; }

struct CriterionReport {
    double aic = 0.0;
    double bic = 0.0;
    double gaic = 0.0;
    double gbic = 0.0;
    std::map<double, double> sic;
    std::optional<SicDecomposition> decomposition_half;
    long model_dim = 0;
    long n = 0;

    double score(const Criterion& c) const {
        switch (c.kind) {
        case CriterionKind::aic: return aic;
        case CriterionKind::bic: return bic;
        case CriterionKind::gaic: return gaic;
        case CriterionKind::gbic: return gbic;
        case CriterionKind::sic: {
            auto it = sic.find(c.gamma);
            if (it == sic.end())
                throw Error(ErrorCode::invalid_argument, "SIC index " + std::to_string(c.gamma) + " was not scored");
            return it->second;
        }
        }
        return detail::infinity;
    }
};

/// Scores one fitted model on every criterion. gamma 1/2 is always included.
inline CriterionReport score_model(double loglik, const SandwichPair& sw, long dim, long n,
                                   const std::vector<double>& gammas = default_gamma_grid()) {
    CriterionReport rep;
    rep.model_dim = dim;
    rep.n = n;
    rep.aic = aic(loglik, dim);
    rep.bic = bic(loglik, dim, n);
    rep.gaic = gaic(loglik, sw);
    rep.gbic = gbic(loglik, sw, dim, n);
    for (double g : gammas) rep.sic[g] = sic(loglik, sw, dim, n, g);
    rep.sic[0.5] = sic(loglik, sw, dim, n, 0.5);
    if (sw.B_rank_ok) rep.decomposition_half = sic_half_decomposition(loglik, sw, dim, n);
    return rep;
}

}  // namespace miscrit

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "miscrit/criteria.hpp"
#include "miscrit/error.hpp"
#include "miscrit/family.hpp"
#include "miscrit/qmle.hpp"
#include "miscrit/sandwich.hpp"

namespace miscrit {

/// Response plus the full set of raw covariates, before a candidate picks its columns.
struct RawData {
    Eigen::VectorXd y;
    Eigen::MatrixXd x;

    Eigen::Index n() const noexcept { return x.rows(); }
    Eigen::Index p() const noexcept { return x.cols(); }
};

struct PolynomialOrder {
    int order = 1;
    friend bool operator==(const PolynomialOrder&, const PolynomialOrder&) = default;
};

/// Zero-based raw covariate columns, strictly increasing.
struct Subset {
    std::vector<int> indices;
    friend bool operator==(const Subset&, const Subset&) = default;
};

struct CandidateModel {
    std::variant<PolynomialOrder, Subset> kind;
    bool include_intercept = false;

    static CandidateModel polynomial(int order, bool intercept = true) { return {PolynomialOrder{order}, intercept}; }
    static CandidateModel subset(std::vector<int> indices, bool intercept = false) {
        return {Subset{std::move(indices)}, intercept};
    }

    bool is_polynomial() const noexcept { return std::holds_alternative<PolynomialOrder>(kind); }

    /// Order for polynomials, number of selected covariates for subsets.
    int reported_size() const {
        if (const auto* poly = std::get_if<PolynomialOrder>(&kind)) return poly->order;
        return static_cast<int>(std::get<Subset>(kind).indices.size());
    }

    /// Number of mean parameters, i.e. design columns.
    long dim() const { return reported_size() + (include_intercept ? 1 : 0); }

    std::string label() const {
        std::string out;
        if (const auto* poly = std::get_if<PolynomialOrder>(&kind)) {
            out = "poly(" + std::to_string(poly->order) + ")";
        } else {
            out = "{";
            const auto& idx = std::get<Subset>(kind).indices;
            for (std::size_t i = 0; i < idx.size(); ++i) out += (i ? "," : "") + std::to_string(idx[i] + 1);
            out += "}";
        }
        if (include_intercept) out += "+1";
        return out;
    }

    friend bool operator==(const CandidateModel&, const CandidateModel&) = default;
};

inline void validate(const CandidateModel& cand, const RawData& raw) {
    if (const auto* poly = std::get_if<PolynomialOrder>(&cand.kind)) {
        if (poly->order < 1) throw Error(ErrorCode::invalid_argument, "polynomial order must be at least 1");
        if (raw.p() != 1)
            throw Error(ErrorCode::invalid_argument, "polynomial candidates need exactly one raw covariate, got " +
                                                         std::to_string(raw.p()));
    } else {
        const auto& idx = std::get<Subset>(cand.kind).indices;
        if (idx.empty()) throw Error(ErrorCode::invalid_argument, "subset candidate is empty");
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (idx[i] < 0 || idx[i] >= raw.p())
                throw Error(ErrorCode::invalid_argument, "subset index " + std::to_string(idx[i] + 1) + " out of range");
            if (i > 0 && idx[i] <= idx[i - 1])
                throw Error(ErrorCode::invalid_argument, "subset indices must be strictly increasing");
        }
    }
    if (cand.dim() > raw.n())
        throw Error(ErrorCode::design_rank, "candidate " + cand.label() + " has more columns than rows");
}

/// Design matrix for one candidate: (1, x, ..., x^k) or the selected columns,
/// intercept first when requested.
inline Dataset build_design(const RawData& raw, const CandidateModel& cand) {
    validate(cand, raw);
    const Eigen::Index n = raw.n();
    const Eigen::Index offset = cand.include_intercept ? 1 : 0;
    Dataset out{raw.y, Eigen::MatrixXd(n, cand.dim())};
    if (cand.include_intercept) out.x.col(0).setOnes();
    if (const auto* poly = std::get_if<PolynomialOrder>(&cand.kind)) {
        Eigen::VectorXd power = raw.x.col(0);
        for (int k = 1; k <= poly->order; ++k) {
            out.x.col(offset + k - 1) = power;
            if (k < poly->order) power = power.cwiseProduct(raw.x.col(0));
        }
    } else {
        const auto& idx = std::get<Subset>(cand.kind).indices;
        for (std::size_t j = 0; j < idx.size(); ++j) out.x.col(offset + static_cast<Eigen::Index>(j)) = raw.x.col(idx[j]);
    }
    return out;
}

struct CandidateOutcome {
    CandidateModel model;
    std::optional<FitResult> fit;
    std::optional<SandwichPair> sandwich;
    std::optional<CriterionReport> report;
    /// Why the candidate was excluded; empty when it was scored.
    std::string failure;

    bool ok() const noexcept { return report.has_value(); }
};

struct SelectionResult {
    std::vector<Criterion> criteria;
    std::vector<CandidateOutcome> per_candidate;
    /// Criterion name -> index into per_candidate.
    std::map<std::string, std::size_t> chosen_index;
    long n = 0;

    const CandidateModel& chosen(const std::string& criterion) const {
        auto it = chosen_index.find(criterion);
        if (it == chosen_index.end())
            throw Error(ErrorCode::invalid_argument, "criterion '" + criterion + "' was not part of the selection");
        return per_candidate[it->second].model;
    }

    int reported_size(const std::string& criterion) const { return chosen(criterion).reported_size(); }
};

struct SelectOptions {
    std::vector<Criterion> criteria = default_criteria();
    std::vector<double> gammas = default_gamma_grid();
    FitOptions fit;
};

/// Fits and scores one candidate, recording a failure reason instead of throwing.
inline CandidateOutcome evaluate_candidate(const RawData& raw, const Family& family, const CandidateModel& cand,
                                           const SelectOptions& opts) {
    CandidateOutcome out{cand, {}, {}, {}, {}};
    try {
        const Dataset data = build_design(raw, cand);
        FitResult fit = fit_qmle(data, family, opts.fit);
        if (!fit.converged) {
            out.failure = fit.separation ? "separation detected" : "fit did not converge";
            out.fit = std::move(fit);
            return out;
        }
        SandwichPair sw = estimate_sandwich(data, family, fit);
        std::vector<double> gammas = opts.gammas;
        for (const auto& c : opts.criteria)
            if (c.kind == CriterionKind::sic) gammas.push_back(c.gamma);
        out.report = score_model(fit.loglik, sw, static_cast<long>(data.d()), static_cast<long>(data.n()), gammas);
        out.fit = std::move(fit);
        out.sandwich = std::move(sw);
    } catch (const Error& e) {
        out.failure = e.what();
    }
    return out;
}

namespace detail {

// Smallest score, then smaller dimension, then earlier candidate. NaN never wins.
inline std::optional<std::size_t> argmin(const std::vector<CandidateOutcome>& outcomes, const Criterion& c) {
    std::optional<std::size_t> best;
    double best_score = 0.0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].ok()) continue;
        const double s = outcomes[i].report->score(c);
        if (std::isnan(s)) continue;
        if (!best || s < best_score ||
            (s == best_score && outcomes[i].model.dim() < outcomes[*best].model.dim())) {
            best = i;
            best_score = s;
        }
    }
    return best;
}

}  // namespace detail

/// Picks the criterion-minimizing candidate for every requested criterion.
inline SelectionResult assemble_selection(std::vector<CandidateOutcome> outcomes, const std::vector<Criterion>& criteria,
                                          long n) {
    SelectionResult result;
    result.criteria = criteria;
    result.per_candidate = std::move(outcomes);
    result.n = n;
    bool any_ok = false;
    for (const auto& o : result.per_candidate) any_ok = any_ok || o.ok();
    if (!any_ok) {
        std::string reasons;
        for (const auto& o : result.per_candidate) reasons += "\n  " + o.model.label() + ": " + o.failure;
        throw Error(ErrorCode::selection_impossible, "no candidate could be fitted" + reasons);
    }
    for (const auto& c : criteria) {
        if (auto best = detail::argmin(result.per_candidate, c)) result.chosen_index[c.name()] = *best;
    }
    return result;
}

inline SelectionResult select(const std::vector<CandidateModel>& candidates, const RawData& raw, const Family& family,
                              const SelectOptions& opts = {}) {
    if (candidates.empty()) throw Error(ErrorCode::invalid_argument, "no candidate models given");
    std::vector<CandidateOutcome> outcomes;
    outcomes.reserve(candidates.size());
    for (const auto& cand : candidates) outcomes.push_back(evaluate_candidate(raw, family, cand, opts));
    return assemble_selection(std::move(outcomes), opts.criteria, static_cast<long>(raw.n()));
}

/// Largest covariate count accepted by exhaustive subset enumeration.
inline constexpr int max_enumerated_predictors = 20;

/// Visits every k-subset of {0..p-1} in lexicographic order.
template <typename Visitor>
void for_each_combination(int p, int k, Visitor&& visit) {
    if (k < 0 || k > p) return;
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (;;) {
        visit(static_cast<const std::vector<int>&>(idx));
        int i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == p - k + i) --i;
        if (i < 0) return;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
}

inline std::vector<int> checked_sizes(const RawData& raw, const std::vector<int>& sizes) {
    if (raw.p() > max_enumerated_predictors)
        throw Error(ErrorCode::too_many_predictors, std::to_string(raw.p()) + " predictors exceed the enumeration bound of " +
                                                        std::to_string(max_enumerated_predictors));
    for (int k : sizes)
        if (k < 1 || k > raw.p())
            throw Error(ErrorCode::invalid_argument, "subset size " + std::to_string(k) + " outside 1.." +
                                                         std::to_string(raw.p()));
    return sizes;
}

/// Every subset of the requested sizes, in size order then lexicographic order.
inline std::vector<CandidateModel> all_subsets(const RawData& raw, const std::vector<int>& sizes, bool intercept = false) {
    std::vector<CandidateModel> out;
    for (int k : checked_sizes(raw, sizes))
        for_each_combination(static_cast<int>(raw.p()), k,
                             [&](const std::vector<int>& idx) { out.push_back(CandidateModel::subset(idx, intercept)); });
    return out;
}

/// One maximum-quasi-log-likelihood subset per size (minimum RSS for the linear family).
inline std::vector<CandidateModel> best_subset_per_size(const RawData& raw, const std::vector<int>& sizes,
                                                        const Family& family, bool intercept = false,
                                                        const FitOptions& fit_opts = {}) {
    std::vector<CandidateModel> out;
    for (int k : checked_sizes(raw, sizes)) {
        std::optional<CandidateModel> best;
        double best_ll = -std::numeric_limits<double>::infinity();
        for_each_combination(static_cast<int>(raw.p()), k, [&](const std::vector<int>& idx) {
            auto cand = CandidateModel::subset(idx, intercept);
            try {
                const FitResult fit = fit_qmle(build_design(raw, cand), family, fit_opts);
                if (fit.converged && fit.loglik > best_ll) {
                    best_ll = fit.loglik;
                    best = std::move(cand);
                }
            } catch (const Error&) {
                // unfittable subsets cannot be the representative
            }
        });
        if (best) out.push_back(std::move(*best));
    }
    return out;
}

/// Best-subset selection: every subset of every size is scored on every
/// criterion, so each criterion compares its own per-size minimum across sizes.
inline SelectionResult select_best_subset(const RawData& raw, const std::vector<int>& sizes, const Family& family,
                                          const SelectOptions& opts = {}, bool intercept = false) {
    return select(all_subsets(raw, sizes, intercept), raw, family, opts);
}

inline std::vector<CandidateModel> polynomial_candidates(const std::vector<int>& orders, bool intercept = true) {
    std::vector<CandidateModel> out;
    for (int k : orders) out.push_back(CandidateModel::polynomial(k, intercept));
    return out;
}

}  // namespace miscrit

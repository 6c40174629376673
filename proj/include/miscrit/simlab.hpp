#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "miscrit/criteria.hpp"
#include "miscrit/error.hpp"
#include "miscrit/family.hpp"
#include "miscrit/rng.hpp"
#include "miscrit/search.hpp"

namespace miscrit {

// ---------------------------------------------------------------------------
// Data generators
// ---------------------------------------------------------------------------

enum class Correlation { ar_half, identity };

/// True coefficients of the sparse linear designs; entries past the third are zero.
inline Eigen::VectorXd sparse_beta0(int p = 6) {
    if (p < 3) throw Error(ErrorCode::invalid_argument, "sparse linear designs need p >= 3");
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    beta[0] = 1.0;
    beta[1] = -1.25;
    beta[2] = 0.75;
    return beta;
}

/// Sigma0 with entries rho^|i-j|.
inline Eigen::MatrixXd ar1_covariance(int p, double rho) {
    Eigen::MatrixXd s(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) s(i, j) = std::pow(rho, std::abs(i - j));
    return s;
}

inline double cubic_mean(double x) { return 1.0 + x * (5.0 + x * (-1.25 + x * 0.55)); }
inline double hetero_cubic_mean(double x) { return 1.0 + x * (5.0 + x * (-1.25 + x * 1.55)); }

/// f(z) = z^2 / (a + z).
inline double single_index_link(double z, double a) { return z * z / (a + z); }

inline RawData gen_poly_cubic(long n, double sigma, Rng& rng) {
    RawData out{Eigen::VectorXd(n), Eigen::MatrixXd(n, 1)};
    for (long i = 0; i < n; ++i) {
        const double x = standard_normal(rng);
        const double eps = standard_normal(rng);
        out.x(i, 0) = x;
        out.y[i] = cubic_mean(x) + sigma * eps;
    }
    return out;
}

inline RawData gen_hetero_poly(long n, double sigma, Rng& rng) {
    RawData out{Eigen::VectorXd(n), Eigen::MatrixXd(n, 1)};
    for (long i = 0; i < n; ++i) {
        const double x = standard_normal(rng);
        const double eps = standard_normal(rng);
        out.x(i, 0) = x;
        out.y[i] = hetero_cubic_mean(x) + std::sqrt(std::abs(x)) * sigma * eps;
    }
    return out;
}

namespace detail {

inline Eigen::MatrixXd draw_rows(long n, int p, Correlation corr, Rng& rng) {
    Eigen::MatrixXd z(n, p);
    for (long i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) z(i, j) = standard_normal(rng);
    if (corr == Correlation::identity) return z;
    const Eigen::MatrixXd chol = ar1_covariance(p, 0.5).llt().matrixL();
    return z * chol.transpose();
}

}  // namespace detail

/// Rows i.i.d. N(0, Sigma0); y = X beta0 + eps.
inline RawData gen_subset_linear(long n, double sigma, Correlation corr, Rng& rng, int p = 6) {
    const Eigen::VectorXd beta0 = sparse_beta0(p);
    RawData out;
    out.x = detail::draw_rows(n, p, corr, rng);
    out.y = out.x * beta0;
    for (long i = 0; i < n; ++i) out.y[i] += sigma * standard_normal(rng);
    return out;
}

/// As gen_subset_linear with Sigma0 = I plus a hidden 0.5 * x1 * x2 term.
inline RawData gen_interaction(long n, double sigma, Rng& rng, int p = 6) {
    const Eigen::VectorXd beta0 = sparse_beta0(p);
    RawData out;
    out.x = detail::draw_rows(n, p, Correlation::identity, rng);
    out.y = out.x * beta0 + 0.5 * out.x.col(0).cwiseProduct(out.x.col(1));
    for (long i = 0; i < n; ++i) out.y[i] += sigma * standard_normal(rng);
    return out;
}

struct SingleIndexSample {
    RawData data;
    long redraws = 0;
};

/// Rows with |a + x^T beta0| below this are redrawn.
inline constexpr double single_index_pole_guard = 1e-8;

/// y = f(X beta0) + eps with eps ~ N(0, 1) and Sigma0 = I.
inline SingleIndexSample gen_single_index(long n, double a, Rng& rng, int p = 6) {
    const Eigen::VectorXd beta0 = sparse_beta0(p);
    SingleIndexSample out;
    out.data.x.resize(n, p);
    out.data.y.resize(n);
    Eigen::VectorXd row(p);
    for (long i = 0; i < n; ++i) {
        double z = 0.0;
        for (;;) {
            for (int j = 0; j < p; ++j) row[j] = standard_normal(rng);
            z = row.dot(beta0);
            if (std::abs(a + z) >= single_index_pole_guard) break;
            ++out.redraws;
        }
        out.data.x.row(i) = row.transpose();
        out.data.y[i] = single_index_link(z, a) + standard_normal(rng);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Campaigns
// ---------------------------------------------------------------------------

enum class Experiment { poly_cubic, best_subset_linear, interaction, single_index, hetero_poly };

inline const char* to_string(Experiment e) {
    switch (e) {
    case Experiment::poly_cubic: return "PolyCubic";
    case Experiment::best_subset_linear: return "BestSubsetLinear";
    case Experiment::interaction: return "Interaction";
    case Experiment::single_index: return "SingleIndex";
    case Experiment::hetero_poly: return "HeteroPoly";
    }
    return "unknown";
}

inline Experiment parse_experiment(std::string_view name) {
    for (auto e : {Experiment::poly_cubic, Experiment::best_subset_linear, Experiment::interaction,
                   Experiment::single_index, Experiment::hetero_poly})
        if (name == to_string(e)) return e;
    throw Error(ErrorCode::invalid_argument, "unknown experiment '" + std::string(name) + "'");
}

/// Polynomial experiments select an order; the others select a subset size.
inline bool uses_polynomial_candidates(Experiment e) {
    return e == Experiment::poly_cubic || e == Experiment::hetero_poly;
}

/// The single-index experiment's noise knob is the curvature a, not sigma.
inline bool uses_curvature(Experiment e) { return e == Experiment::single_index; }

struct SimConfig {
    Experiment experiment = Experiment::poly_cubic;
    long n = 200;
    /// sigma, or the curvature a for the single-index experiment.
    double noise = 0.5;
    int replicates = 100;
    std::uint64_t seed = 0;
    std::vector<Criterion> criteria = default_criteria();
    /// Polynomial orders or subset sizes.
    std::vector<int> candidates = {1, 2, 3, 4, 5, 6};
    int p = 6;
};

inline void validate(const SimConfig& cfg) {
    if (cfg.replicates < 1) throw Error(ErrorCode::invalid_argument, "replicates must be at least 1");
    if (cfg.criteria.empty()) throw Error(ErrorCode::invalid_argument, "no criteria requested");
    if (cfg.candidates.empty()) throw Error(ErrorCode::invalid_argument, "no candidates requested");
    if (!(cfg.noise > 0.0) || !std::isfinite(cfg.noise))
        throw Error(ErrorCode::invalid_argument, std::string(uses_curvature(cfg.experiment) ? "a" : "sigma") +
                                                     " must be positive and finite");
    int max_dim = 0;
    for (int k : cfg.candidates) {
        if (k < 1) throw Error(ErrorCode::invalid_argument, "candidate orders/sizes must be at least 1");
        if (!uses_polynomial_candidates(cfg.experiment) && k > cfg.p)
            throw Error(ErrorCode::invalid_argument, "subset size " + std::to_string(k) + " exceeds p=" +
                                                         std::to_string(cfg.p));
        max_dim = std::max(max_dim, uses_polynomial_candidates(cfg.experiment) ? k + 1 : k);
    }
    if (!uses_polynomial_candidates(cfg.experiment) && (cfg.p < 3 || cfg.p > max_enumerated_predictors))
        throw Error(ErrorCode::invalid_argument, "p must lie in 3.." + std::to_string(max_enumerated_predictors));
    if (cfg.n < max_dim + 2)
        throw Error(ErrorCode::invalid_argument, "n=" + std::to_string(cfg.n) + " is below the largest candidate dimension + 2 (" +
                                                     std::to_string(max_dim + 2) + ")");
}

/// Criterion rows x candidate-size columns of selection counts.
struct FrequencyTable {
    std::vector<std::string> rows;
    std::vector<int> columns;
    std::vector<std::vector<long>> counts;
    /// Per row: replicates in which that criterion could not choose.
    std::vector<long> failures;
    long redraws = 0;
    SimConfig meta;

    long count(const std::string& row, int column) const {
        const auto r = std::find(rows.begin(), rows.end(), row);
        const auto c = std::find(columns.begin(), columns.end(), column);
        if (r == rows.end() || c == columns.end()) return 0;
        return counts[static_cast<std::size_t>(r - rows.begin())][static_cast<std::size_t>(c - columns.begin())];
    }

    long row_total(std::size_t r) const {
        long total = failures[r];
        for (long v : counts[r]) total += v;
        return total;
    }
};

/// Chosen order/size per criterion for one replicate; -1 marks a failure.
struct ReplicateOutcome {
    std::vector<int> chosen;
    long redraws = 0;
};

inline RawData generate(const SimConfig& cfg, Rng& rng, long* redraws = nullptr) {
    switch (cfg.experiment) {
    case Experiment::poly_cubic: return gen_poly_cubic(cfg.n, cfg.noise, rng);
    case Experiment::best_subset_linear: return gen_subset_linear(cfg.n, cfg.noise, Correlation::ar_half, rng, cfg.p);
    case Experiment::interaction: return gen_interaction(cfg.n, cfg.noise, rng, cfg.p);
    case Experiment::single_index: {
        auto sample = gen_single_index(cfg.n, cfg.noise, rng, cfg.p);
        if (redraws) *redraws = sample.redraws;
        return std::move(sample.data);
    }
    case Experiment::hetero_poly: return gen_hetero_poly(cfg.n, cfg.noise, rng);
    }
    throw Error(ErrorCode::invalid_argument, "unknown experiment");
}

/// Selection for replicate r, drawn from its own (seed, r) stream.
inline ReplicateOutcome run_replicate(const SimConfig& cfg, std::uint64_t replicate) {
    ReplicateOutcome out;
    out.chosen.assign(cfg.criteria.size(), -1);
    Rng rng(cfg.seed, replicate);
    const RawData raw = generate(cfg, rng, &out.redraws);

    SelectOptions opts;
    opts.criteria = cfg.criteria;
    opts.gammas = {};
    try {
        const SelectionResult sel =
            uses_polynomial_candidates(cfg.experiment)
                ? select(polynomial_candidates(cfg.candidates, true), raw, Family::linear_estimated(), opts)
                : select_best_subset(raw, cfg.candidates, Family::linear_estimated(), opts, false);
        for (std::size_t c = 0; c < cfg.criteria.size(); ++c) {
            auto it = sel.chosen_index.find(cfg.criteria[c].name());
            if (it != sel.chosen_index.end()) out.chosen[c] = sel.per_candidate[it->second].model.reported_size();
        }
    } catch (const Error&) {
        // whole replicate counted as a failure for every criterion
    }
    return out;
}

/// Worker count from MISCRIT_THREADS; unset or 0 means one per hardware thread.
inline int threads_from_env() {
    const char* env = std::getenv("MISCRIT_THREADS");
    long requested = 0;
    if (env && *env) {
        char* end = nullptr;
        requested = std::strtol(env, &end, 10);
        if (*end != '\0' || requested < 0)
            throw Error(ErrorCode::invalid_argument, "MISCRIT_THREADS must be a nonnegative integer");
    }
    if (requested == 0) return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return static_cast<int>(requested);
}

/// Runs every replicate and tallies the chosen order/size per criterion.
///
/// Replicates are independent streams and are reduced in index order, so the
/// table does not depend on the number of threads.
inline FrequencyTable run_campaign(const SimConfig& cfg, int threads = 1) {
    validate(cfg);
    const auto reps = static_cast<std::size_t>(cfg.replicates);
    std::vector<ReplicateOutcome> outcomes(reps);

    const int workers = std::clamp(threads <= 0 ? threads_from_env() : threads, 1, static_cast<int>(reps));
    if (workers == 1) {
        for (std::size_t r = 0; r < reps; ++r) outcomes[r] = run_replicate(cfg, r);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t r = next++; r < reps; r = next++) outcomes[r] = run_replicate(cfg, r);
            });
        for (auto& t : pool) t.join();
    }

    FrequencyTable table;
    table.meta = cfg;
    table.columns = cfg.candidates;
    std::sort(table.columns.begin(), table.columns.end());
    table.columns.erase(std::unique(table.columns.begin(), table.columns.end()), table.columns.end());
    for (const auto& c : cfg.criteria) table.rows.push_back(c.name());
    table.counts.assign(table.rows.size(), std::vector<long>(table.columns.size(), 0));
    table.failures.assign(table.rows.size(), 0);

    for (const auto& o : outcomes) {
        table.redraws += o.redraws;
        for (std::size_t c = 0; c < o.chosen.size(); ++c) {
            const auto col = std::find(table.columns.begin(), table.columns.end(), o.chosen[c]);
            if (o.chosen[c] < 0 || col == table.columns.end()) ++table.failures[c];
            else ++table.counts[c][static_cast<std::size_t>(col - table.columns.begin())];
        }
    }
    return table;
}

}  // namespace miscrit

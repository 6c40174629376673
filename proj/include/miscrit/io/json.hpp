#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "miscrit/criteria.hpp"
#include "miscrit/error.hpp"
#include "miscrit/search.hpp"
#include "miscrit/simlab.hpp"

namespace miscrit::io {

using nlohmann::json;

// JSON has no infinities; they travel as strings.
inline json encode_real(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "NaN";
    return v > 0 ? "Infinity" : "-Infinity";
}

inline double decode_real(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "Infinity") return std::numeric_limits<double>::infinity();
        if (s == "-Infinity") return -std::numeric_limits<double>::infinity();
        if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    }
    throw Error(ErrorCode::input, "expected a number, got " + j.dump());
}

/// Shortest round-trip spelling, used for SIC index keys.
inline std::string gamma_key(double gamma) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, gamma);
    return std::string(buf, ptr);
}

inline json encode_vector(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(encode_real(v[i]));
    return out;
}

inline Eigen::VectorXd decode_vector(const json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = decode_real(j[i]);
    return v;
}

inline json encode_matrix(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(encode_vector(m.row(i).transpose()));
    return out;
}

inline Eigen::MatrixXd decode_matrix(const json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) m.row(i) = decode_vector(j[static_cast<std::size_t>(i)]).transpose();
    return m;
}

// ---------------------------------------------------------------------------
// SelectionResult
// ---------------------------------------------------------------------------

inline json to_json(const CandidateModel& m) {
    json j;
    if (const auto* poly = std::get_if<PolynomialOrder>(&m.kind)) {
        j["kind"] = "polynomial";
        j["order"] = poly->order;
    } else {
        j["kind"] = "subset";
        j["indices"] = std::get<Subset>(m.kind).indices;
    }
    j["intercept"] = m.include_intercept;
    return j;
}

inline CandidateModel candidate_from_json(const json& j) {
    CandidateModel m;
    m.include_intercept = j.at("intercept").get<bool>();
    if (j.at("kind") == "polynomial") m.kind = PolynomialOrder{j.at("order").get<int>()};
    else m.kind = Subset{j.at("indices").get<std::vector<int>>()};
    return m;
}

inline json to_json(const CandidateOutcome& o, std::size_t index) {
    json j;
    j["index"] = index;
    j["label"] = o.model.label();
    j["model"] = to_json(o.model);
    j["size"] = o.model.reported_size();
    j["dim"] = o.model.dim();
    j["status"] = o.ok() ? "ok" : "failed";
    j["failure"] = o.failure;
    if (o.fit) {
        const auto& f = *o.fit;
        j["fit"] = {{"beta_hat", encode_vector(f.beta_hat)}, {"loglik", encode_real(f.loglik)},
                    {"dispersion", encode_real(f.dispersion)}, {"iterations", f.iterations},
                    {"converged", f.converged}, {"score_norm", encode_real(f.score_norm)},
                    {"separation", f.separation}};
    } else {
        j["fit"] = nullptr;
    }
    if (o.sandwich) {
        const auto& s = *o.sandwich;
        j["sandwich"] = {{"A_hat", encode_matrix(s.A_hat)}, {"B_hat", encode_matrix(s.B_hat)},
                         {"trace_H", encode_real(s.trace_H)}, {"logdet_H", encode_real(s.logdet_H)},
                         {"B_rank_ok", s.B_rank_ok}};
    } else {
        j["sandwich"] = nullptr;
    }
    if (o.report) {
        const auto& r = *o.report;
        j["scores"] = {{"AIC", encode_real(r.aic)}, {"BIC", encode_real(r.bic)},
                       {"GAIC", encode_real(r.gaic)}, {"GBIC", encode_real(r.gbic)}};
        json sic = json::object();
        for (const auto& [g, v] : r.sic) sic[gamma_key(g)] = encode_real(v);
        j["sic"] = sic;
        if (r.decomposition_half)
            j["decomposition"] = {{"neg_loglik", encode_real(r.decomposition_half->neg_loglik)},
                                  {"complexity", encode_real(r.decomposition_half->complexity)},
                                  {"misspec_kl", encode_real(r.decomposition_half->misspec_kl)}};
        else
            j["decomposition"] = nullptr;
        j["n"] = r.n;
    } else {
        j["scores"] = nullptr;
        j["sic"] = nullptr;
        j["decomposition"] = nullptr;
    }
    return j;
}

inline CandidateOutcome outcome_from_json(const json& j) {
    CandidateOutcome o;
    o.model = candidate_from_json(j.at("model"));
    o.failure = j.at("failure").get<std::string>();
    if (!j.at("fit").is_null()) {
        const auto& f = j.at("fit");
        FitResult fit;
        fit.beta_hat = decode_vector(f.at("beta_hat"));
        fit.loglik = decode_real(f.at("loglik"));
        fit.dispersion = decode_real(f.at("dispersion"));
        fit.iterations = f.at("iterations").get<int>();
        fit.converged = f.at("converged").get<bool>();
        fit.score_norm = decode_real(f.at("score_norm"));
        fit.separation = f.at("separation").get<bool>();
        o.fit = std::move(fit);
    }
    if (!j.at("sandwich").is_null()) {
        const auto& s = j.at("sandwich");
        SandwichPair sw;
        sw.A_hat = decode_matrix(s.at("A_hat"));
        sw.B_hat = decode_matrix(s.at("B_hat"));
        sw.trace_H = decode_real(s.at("trace_H"));
        sw.logdet_H = decode_real(s.at("logdet_H"));
        sw.B_rank_ok = s.at("B_rank_ok").get<bool>();
        o.sandwich = std::move(sw);
    }
    if (!j.at("scores").is_null()) {
        CriterionReport r;
        const auto& sc = j.at("scores");
        r.aic = decode_real(sc.at("AIC"));
        r.bic = decode_real(sc.at("BIC"));
        r.gaic = decode_real(sc.at("GAIC"));
        r.gbic = decode_real(sc.at("GBIC"));
        for (const auto& [key, v] : j.at("sic").items()) r.sic[std::stod(key)] = decode_real(v);
        if (!j.at("decomposition").is_null()) {
            const auto& d = j.at("decomposition");
            r.decomposition_half = SicDecomposition{decode_real(d.at("neg_loglik")), decode_real(d.at("complexity")),
                                                    decode_real(d.at("misspec_kl"))};
        }
        r.model_dim = o.model.dim();
        r.n = j.at("n").get<long>();
        o.report = std::move(r);
    }
    return o;
}

/// Always carries the keys criteria, candidates, chosen and meta.
inline json to_json(const SelectionResult& sel, json meta = json::object()) {
    json j;
    j["criteria"] = json::array();
    for (const auto& c : sel.criteria) j["criteria"].push_back(c.name());
    j["candidates"] = json::array();
    for (std::size_t i = 0; i < sel.per_candidate.size(); ++i) j["candidates"].push_back(to_json(sel.per_candidate[i], i));
    j["chosen"] = json::object();
    for (const auto& [name, idx] : sel.chosen_index) {
        const auto& m = sel.per_candidate[idx].model;
        j["chosen"][name] = {{"index", idx}, {"label", m.label()}, {"size", m.reported_size()}};
    }
    meta["n"] = sel.n;
    j["meta"] = std::move(meta);
    return j;
}

inline SelectionResult selection_from_json(const json& j) {
    SelectionResult sel;
    for (const auto& c : j.at("criteria")) sel.criteria.push_back(parse_criterion(c.get<std::string>()));
    for (const auto& c : j.at("candidates")) sel.per_candidate.push_back(outcome_from_json(c));
    for (const auto& [name, v] : j.at("chosen").items()) sel.chosen_index[name] = v.at("index").get<std::size_t>();
    sel.n = j.at("meta").at("n").get<long>();
    return sel;
}

// ---------------------------------------------------------------------------
// Simulation configs and frequency tables
// ---------------------------------------------------------------------------

inline json to_json(const SimConfig& cfg) {
    json j;
    j["experiment"] = to_string(cfg.experiment);
    j["n"] = cfg.n;
    j[uses_curvature(cfg.experiment) ? "a" : "sigma"] = cfg.noise;
    j["replicates"] = cfg.replicates;
    j["seed"] = cfg.seed;
    j["criteria"] = json::array();
    for (const auto& c : cfg.criteria) j["criteria"].push_back(c.name());
    j["candidates"] = {{uses_polynomial_candidates(cfg.experiment) ? "orders" : "sizes", cfg.candidates}};
    if (!uses_polynomial_candidates(cfg.experiment)) j["p"] = cfg.p;
    return j;
}

/// Parses a simulation config. A missing seed is reported through has_seed.
inline SimConfig sim_config_from_json(const json& j, bool* has_seed = nullptr) {
    try {
        if (!j.is_object()) throw Error(ErrorCode::input, "config must be a JSON object");
        SimConfig cfg;
        cfg.experiment = parse_experiment(j.at("experiment").get<std::string>());
        cfg.n = j.at("n").get<long>();
        const char* noise_key = uses_curvature(cfg.experiment) ? "a" : "sigma";
        if (!j.contains(noise_key))
            throw Error(ErrorCode::input, std::string("config for ") + to_string(cfg.experiment) + " needs '" +
                                              noise_key + "'");
        cfg.noise = j.at(noise_key).get<double>();
        if (j.contains("replicates")) cfg.replicates = j.at("replicates").get<int>();
        if (has_seed) *has_seed = j.contains("seed");
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("criteria")) {
            cfg.criteria.clear();
            for (const auto& c : j.at("criteria")) cfg.criteria.push_back(parse_criterion(c.get<std::string>()));
        }
        if (j.contains("p")) cfg.p = j.at("p").get<int>();
        if (j.contains("candidates")) {
            const auto& c = j.at("candidates");
            const char* key = uses_polynomial_candidates(cfg.experiment) ? "orders" : "sizes";
            if (!c.contains(key))
                throw Error(ErrorCode::input, std::string("candidates for ") + to_string(cfg.experiment) +
                                                  " must list '" + key + "'");
            cfg.candidates = c.at(key).get<std::vector<int>>();
        }
        validate(cfg);
        return cfg;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::input, std::string("malformed config: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::input) throw;
        throw Error(ErrorCode::input, e.what());
    }
}

inline SimConfig read_sim_config(const std::string& path, bool* has_seed = nullptr) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::input, "cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::input, path + ": " + e.what());
    }
    return sim_config_from_json(j, has_seed);
}

inline json to_json(const FrequencyTable& t) {
    json j;
    j["criteria"] = t.rows;
    j["candidates"] = t.columns;
    j["chosen"] = json::object();
    j["failures"] = json::object();
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        j["chosen"][t.rows[r]] = t.counts[r];
        j["failures"][t.rows[r]] = t.failures[r];
    }
    json meta = to_json(t.meta);
    meta["candidate_kind"] = uses_polynomial_candidates(t.meta.experiment) ? "order" : "size";
    meta["redraws"] = t.redraws;
    meta["rng"] = "xoshiro256** keyed by splitmix64(seed, replicate)";
    meta["normal_sampler"] = "inverse-cdf";
    j["meta"] = std::move(meta);
    return j;
}

}  // namespace miscrit::io

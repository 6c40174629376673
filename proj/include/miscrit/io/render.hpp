#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "miscrit/io/json.hpp"
#include "miscrit/search.hpp"
#include "miscrit/simlab.hpp"

namespace miscrit::io {

enum class Format { text, csv, json };

inline Format parse_format(const std::string& s) {
    if (s == "text") return Format::text;
    if (s == "csv") return Format::csv;
    if (s == "json") return Format::json;
    throw Error(ErrorCode::invalid_argument, "unknown output format '" + s + "'");
}

/// Fixed 10-decimal rendering; text and JSON scores agree to 5e-11.
inline std::string fmt_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10f", v);
    return buf;
}

inline std::string pad(std::string s, std::size_t width, bool left = false) {
    if (s.size() >= width) return s;
    return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

inline std::string display_label(const CandidateModel& m, const std::vector<std::string>& names) {
    if (names.empty() || m.is_polynomial()) return m.label();
    std::string out = "{";
    const auto& idx = std::get<Subset>(m.kind).indices;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto j = static_cast<std::size_t>(idx[i]);
        out += (i ? "," : "") + (j < names.size() ? names[j] : std::to_string(j + 1));
    }
    out += "}";
    if (m.include_intercept) out += "+1";
    return out;
}

namespace detail {

inline std::vector<std::string> score_columns(const SelectionResult& sel) {
    std::vector<std::string> cols = {"AIC", "BIC", "GAIC", "GBIC"};
    for (const auto& o : sel.per_candidate) {
        if (!o.report) continue;
        for (const auto& [g, v] : o.report->sic) cols.push_back("SIC_" + gamma_key(g));
        break;
    }
    return cols;
}

inline double score_by_column(const CriterionReport& r, const std::string& col) {
    if (col == "AIC") return r.aic;
    if (col == "BIC") return r.bic;
    if (col == "GAIC") return r.gaic;
    if (col == "GBIC") return r.gbic;
    return r.sic.at(std::stod(col.substr(4)));
}

inline std::string chosen_by(const SelectionResult& sel, std::size_t idx, char sep) {
    std::string out;
    for (const auto& [name, i] : sel.chosen_index)
        if (i == idx) out += (out.empty() ? "" : std::string(1, sep)) + name;
    return out;
}

}  // namespace detail

/// Detailed report of the single model scored by `fit`.
inline void render_fit_text(std::ostream& os, const SelectionResult& sel, const std::string& family,
                            const std::vector<std::string>& names) {
    const auto& o = sel.per_candidate.at(0);
    os << "model       " << display_label(o.model, names) << "\n";
    os << "family      " << family << "\n";
    os << "n           " << sel.n << "\n";
    os << "dim         " << o.model.dim() << "\n";
    if (o.fit) {
        const auto& f = *o.fit;
        os << "converged   " << (f.converged ? "yes" : "no") << " (iterations " << f.iterations << ", score_norm "
           << fmt_real(f.score_norm) << ")\n";
        os << "beta_hat   ";
        for (Eigen::Index i = 0; i < f.beta_hat.size(); ++i) os << " " << fmt_real(f.beta_hat[i]);
        os << "\n";
        os << "loglik      " << fmt_real(f.loglik) << "\n";
        if (family == "linear") os << "sigma2_hat  " << fmt_real(f.dispersion) << "\n";
    }
    if (o.sandwich) {
        os << "trace_H     " << fmt_real(o.sandwich->trace_H) << "\n";
        os << "logdet_H    " << fmt_real(o.sandwich->logdet_H) << (o.sandwich->B_rank_ok ? "" : " (B singular)")
           << "\n";
    }
    if (o.report) {
        const auto& r = *o.report;
        os << "AIC         " << fmt_real(r.aic) << "\n";
        os << "BIC         " << fmt_real(r.bic) << "\n";
        os << "GAIC        " << fmt_real(r.gaic) << "\n";
        os << "GBIC        " << fmt_real(r.gbic) << "\n";
        for (const auto& [g, v] : r.sic) os << pad("SIC_" + gamma_key(g), 12, true) << fmt_real(v) << "\n";
        if (r.decomposition_half) {
            const auto& d = *r.decomposition_half;
            os << "SIC_0.5 = " << fmt_real(d.neg_loglik) << " (fit) + " << fmt_real(d.complexity)
               << " (complexity) + " << fmt_real(d.misspec_kl) << " (misspecification)\n";
        }
    } else {
        os << "failure     " << o.failure << "\n";
    }
}

inline void render_selection_text(std::ostream& os, const SelectionResult& sel, const std::vector<std::string>& names) {
    const auto cols = detail::score_columns(sel);
    std::size_t label_w = 9;
    for (const auto& o : sel.per_candidate) label_w = std::max(label_w, display_label(o.model, names).size());
    constexpr std::size_t w = 18;

    os << pad("candidate", label_w, true) << pad("size", 6) << pad("dim", 5) << pad("loglik", w) << pad("trace_H", w)
       << pad("logdet_H", w);
    for (const auto& c : cols) os << pad(c, w);
    os << "\n";
    for (const auto& o : sel.per_candidate) {
        os << pad(display_label(o.model, names), label_w, true) << pad(std::to_string(o.model.reported_size()), 6)
           << pad(std::to_string(o.model.dim()), 5);
        if (!o.ok()) {
            os << "  failed: " << o.failure << "\n";
            continue;
        }
        os << pad(fmt_real(o.fit->loglik), w) << pad(fmt_real(o.sandwich->trace_H), w)
           << pad(fmt_real(o.sandwich->logdet_H), w);
        for (const auto& c : cols) os << pad(fmt_real(detail::score_by_column(*o.report, c)), w);
        os << "\n";
    }
    os << "\nchosen\n";
    for (const auto& c : sel.criteria) {
        auto it = sel.chosen_index.find(c.name());
        os << "  " << pad(c.name(), 10, true);
        if (it == sel.chosen_index.end()) os << "(none)\n";
        else {
            const auto& m = sel.per_candidate[it->second].model;
            os << display_label(m, names) << "  size " << m.reported_size() << "\n";
        }
    }
}

inline void render_selection_csv(std::ostream& os, const SelectionResult& sel, const std::vector<std::string>& names) {
    const auto cols = detail::score_columns(sel);
    os << "index,candidate,size,dim,status,loglik,trace_H,logdet_H";
    for (const auto& c : cols) os << "," << c;
    os << ",chosen_by\n";
    for (std::size_t i = 0; i < sel.per_candidate.size(); ++i) {
        const auto& o = sel.per_candidate[i];
        std::string label = display_label(o.model, names);
        for (auto& ch : label)
            if (ch == ',') ch = ';';
        os << i << "," << label << "," << o.model.reported_size() << "," << o.model.dim() << ","
           << (o.ok() ? "ok" : "failed");
        if (o.ok()) {
            os << "," << fmt_real(o.fit->loglik) << "," << fmt_real(o.sandwich->trace_H) << ","
               << fmt_real(o.sandwich->logdet_H);
            for (const auto& c : cols) os << "," << fmt_real(detail::score_by_column(*o.report, c));
        } else {
            for (std::size_t k = 0; k < cols.size() + 3; ++k) os << ",";
        }
        os << "," << detail::chosen_by(sel, i, ';') << "\n";
    }
}

inline void render_table_text(std::ostream& os, const FrequencyTable& t) {
    const auto& m = t.meta;
    os << "experiment " << to_string(m.experiment) << "  n=" << m.n << "  "
       << (uses_curvature(m.experiment) ? "a=" : "sigma=") << m.noise << "  replicates=" << m.replicates
       << "  seed=" << m.seed << "\n";
    os << pad(uses_polynomial_candidates(m.experiment) ? "order" : "size", 10, true);
    for (int c : t.columns) os << pad(std::to_string(c), 6);
    os << pad("fail", 6) << "\n";
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        os << pad(t.rows[r], 10, true);
        for (long v : t.counts[r]) os << pad(std::to_string(v), 6);
        os << pad(std::to_string(t.failures[r]), 6) << "\n";
    }
    if (t.redraws > 0) os << "redrawn rows: " << t.redraws << "\n";
}

inline void render_table_csv(std::ostream& os, const FrequencyTable& t) {
    os << "criterion";
    for (int c : t.columns) os << "," << c;
    os << ",failures\n";
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        os << t.rows[r];
        for (long v : t.counts[r]) os << "," << v;
        os << "," << t.failures[r] << "\n";
    }
}

}  // namespace miscrit::io

#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "miscrit/error.hpp"
#include "miscrit/family.hpp"
#include "miscrit/search.hpp"

namespace miscrit::io {

/// Numeric table read from a headered, comma-separated file.
struct CsvTable {
    std::string source;
    std::vector<std::string> headers;
    /// rows x columns
    Eigen::MatrixXd values;

    /// 1-based file line of data row i (the header is line 1 unless blank lines precede it).
    std::vector<long> line_of_row;

    Eigen::Index column_index(std::string_view key) const {
        for (std::size_t j = 0; j < headers.size(); ++j)
            if (headers[j] == key) return static_cast<Eigen::Index>(j);
        long idx = -1;
        const auto* end = key.data() + key.size();
        auto [ptr, ec] = std::from_chars(key.data(), end, idx);
        if (ec == std::errc() && ptr == end && idx >= 0 && idx < static_cast<long>(headers.size())) return idx;
        throw Error(ErrorCode::input, source + ": no column named or indexed '" + std::string(key) + "'");
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    for (;;) {
        const auto pos = line.find(',');
        out.push_back(trim(line.substr(0, pos)));
        if (pos == std::string_view::npos) break;
        line.remove_prefix(pos + 1);
    }
    return out;
}

inline bool blank(std::string_view line) { return trim(line).empty(); }

}  // namespace detail

inline CsvTable read_csv(std::istream& in, const std::string& source = "<input>") {
    CsvTable table;
    table.source = source;
    std::string line;
    long line_no = 0;
    bool have_header = false;
    std::vector<std::vector<double>> rows;

    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        if (detail::blank(line)) continue;
        const auto fields = detail::split_commas(line);
        if (!have_header) {
            for (std::size_t j = 0; j < fields.size(); ++j) {
                if (fields[j].empty())
                    throw Error(ErrorCode::input, source + ":" + std::to_string(line_no) + ":" + std::to_string(j + 1) +
                                                      ": empty column name in header");
                table.headers.emplace_back(fields[j]);
            }
            have_header = true;
            continue;
        }
        if (fields.size() != table.headers.size())
            throw Error(ErrorCode::input, source + ":" + std::to_string(line_no) + ": expected " +
                                              std::to_string(table.headers.size()) + " fields, found " +
                                              std::to_string(fields.size()));
        std::vector<double> row(fields.size());
        for (std::size_t j = 0; j < fields.size(); ++j) {
            const auto f = fields[j];
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v))
                throw Error(ErrorCode::input, source + ":" + std::to_string(line_no) + ":" + std::to_string(j + 1) +
                                                  ": column '" + table.headers[j] + "' value '" + std::string(f) +
                                                  "' is not a finite number");
            row[j] = v;
        }
        rows.push_back(std::move(row));
        table.line_of_row.push_back(line_no);
    }
    if (!have_header) throw Error(ErrorCode::input, source + ": file is empty (no header row)");
    if (rows.empty()) throw Error(ErrorCode::input, source + ": no data rows after the header");

    table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.headers.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return table;
}

inline CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::input, "cannot open '" + path + "'");
    return read_csv(in, path);
}

/// Response and covariates split out of a table.
struct TableData {
    RawData raw;
    std::string response_name;
    std::vector<std::string> covariate_names;
};

/// covariates empty means every column except the response.
inline TableData split_table(const CsvTable& table, std::string_view response,
                             const std::vector<std::string>& covariates = {}) {
    const Eigen::Index resp = table.column_index(response);
    std::vector<Eigen::Index> cols;
    if (covariates.empty()) {
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(table.headers.size()); ++j)
            if (j != resp) cols.push_back(j);
    } else {
        for (const auto& c : covariates) {
            const Eigen::Index j = table.column_index(c);
            if (j == resp) throw Error(ErrorCode::input, "column '" + c + "' is the response");
            cols.push_back(j);
        }
    }
    if (cols.empty()) throw Error(ErrorCode::input, table.source + ": no covariate columns");

    TableData out;
    out.response_name = table.headers[static_cast<std::size_t>(resp)];
    out.raw.y = table.values.col(resp);
    out.raw.x.resize(table.values.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
        out.raw.x.col(static_cast<Eigen::Index>(k)) = table.values.col(cols[k]);
        out.covariate_names.push_back(table.headers[static_cast<std::size_t>(cols[k])]);
    }
    return out;
}

/// Rejects responses outside the family's support, naming the file line.
inline void check_response_support(const CsvTable& table, const TableData& data, FamilyKind family) {
    for (Eigen::Index i = 0; i < data.raw.y.size(); ++i) {
        const double v = data.raw.y[i];
        const bool ok = family == FamilyKind::logistic  ? (v == 0.0 || v == 1.0)
                        : family == FamilyKind::poisson ? (v >= 0.0 && v == std::floor(v))
                                                        : true;
        if (!ok)
            throw Error(ErrorCode::input, table.source + ":" + std::to_string(table.line_of_row[static_cast<std::size_t>(i)]) +
                                              ": response '" + data.response_name + "' = " + std::to_string(v) +
                                              (family == FamilyKind::logistic ? " is not 0 or 1"
                                                                              : " is not a nonnegative integer"));
    }
}

}  // namespace miscrit::io

#pragma once

#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fabart/data/transform.hpp"
#include "fabart/favar/panel.hpp"

namespace fabart::data {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\"");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\"");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

/// Accepts YYYY-MM-DD, YYYY-MM and plain integer period labels.
inline bool is_date(const std::string& s) {
    if (s.empty()) return false;
    int y = 0, m = 0, d = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(s);
    if (s.size() == 10 && (is >> y >> c1 >> m >> c2 >> d) && c1 == '-' && c2 == '-')
        return m >= 1 && m <= 12 && d >= 1 && d <= 31;
    is.clear();
    is.str(s);
    if (s.size() == 7 && (is >> y >> c1 >> m) && c1 == '-') return m >= 1 && m <= 12;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

inline double parse_value(const std::string& s, const std::string& where) {
    if (s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == ".") return std::numeric_limits<double>::quiet_NaN();
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("cannot parse '" + s + "' as a number at " + where);
    }
}

/// Raw rectangular table: dates, column names, optional transform codes.
struct RawTable {
    std::vector<std::string> dates;
    std::vector<std::string> names;
    std::vector<int> codes;  // empty when the file has no code row
    Matrix values;
};

inline RawTable read_table(std::istream& is, const std::string& source) {
    RawTable t;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        const std::string where = source + " line " + std::to_string(line_no);
        if (t.names.empty()) {
            if (cells.size() < 2) throw DataError(where + ": header needs a date column and at least one series");
            t.names.assign(cells.begin() + 1, cells.end());
            continue;
        }
        if (cells.size() != t.names.size() + 1)
            throw DataError(where + ": expected " + std::to_string(t.names.size() + 1) + " fields, found " +
                            std::to_string(cells.size()));
        if (!is_date(cells[0])) {
            if (rows.empty() && t.codes.empty()) {
                for (std::size_t j = 1; j < cells.size(); ++j) {
                    int c = 0;
                    const auto& s = cells[j];
                    const auto r = std::from_chars(s.data(), s.data() + s.size(), c);
                    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
                        throw DataError(where + ": transform code '" + s + "' for " + t.names[j - 1] + " is not an integer");
                    to_transform_code(c);
                    t.codes.push_back(c);
                }
                continue;
            }
            throw DataError(where + ": unparseable date '" + cells[0] + "'");
        }
        t.dates.push_back(cells[0]);
        std::vector<double> r(t.names.size());
        for (std::size_t j = 1; j < cells.size(); ++j) r[j - 1] = parse_value(cells[j], where + " column " + t.names[j - 1]);
        rows.push_back(std::move(r));
    }
    if (t.names.empty() || rows.empty()) throw DataError(source + ": no data rows");
    t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.names.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return t;
}

inline RawTable read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return read_table(in, path);
}

struct LoadOptions {
    /// Name of the observed-factor column; empty for none.
    std::string z_column;
    /// Overrides Z's transform code when > 0.
    int z_transform = 0;
    /// Columns to drop before estimation (e.g. evaluation targets kept aside).
    std::vector<std::string> exclude;
};

struct LoadReport {
    /// First date with a usable transformed value, per variable (Z included).
    std::map<std::string, std::string> first_date;
    std::string start;
    std::string end;
};

/// Transforms every column per its code, puts the result on the input date
/// grid, and trims to the common complete window.
inline favar::PanelData load_panel(const RawTable& raw, const LoadOptions& options, LoadReport* report = nullptr) {
    const Eigen::Index T = raw.values.rows();
    const auto n_cols = raw.names.size();
    Matrix grid = Matrix::Constant(T, static_cast<Eigen::Index>(n_cols), std::numeric_limits<double>::quiet_NaN());
    std::vector<int> codes(n_cols, 1);
    for (std::size_t j = 0; j < n_cols; ++j) {
        int c = raw.codes.empty() ? 1 : raw.codes[j];
        if (raw.names[j] == options.z_column && options.z_transform > 0) c = options.z_transform;
        codes[j] = c;
        const auto code = to_transform_code(c);
        const Vector tr = apply_transform(raw.values.col(static_cast<Eigen::Index>(j)), code, raw.names[j], &raw.dates);
        const Eigen::Index off = is_differenced(code) ? 1 : 0;
        grid.col(static_cast<Eigen::Index>(j)).segment(off, tr.size()) = tr;
    }
    std::vector<std::size_t> keep;
    std::ptrdiff_t z_idx = -1;
    for (std::size_t j = 0; j < n_cols; ++j) {
        if (raw.names[j] == options.z_column) {
            z_idx = static_cast<std::ptrdiff_t>(j);
            continue;
        }
        bool drop = false;
        for (const auto& e : options.exclude) drop = drop || e == raw.names[j];
        if (!drop) keep.push_back(j);
    }
    if (!options.z_column.empty() && z_idx < 0) throw DataError("observed-factor column '" + options.z_column + "' not found");
    if (keep.empty()) throw DataError("no panel columns left after removing Z and exclusions");

    std::vector<std::size_t> used = keep;
    if (z_idx >= 0) used.push_back(static_cast<std::size_t>(z_idx));
    Eigen::Index start = 0, end = T - 1;
    LoadReport rep;
    for (std::size_t j : used) {
        const auto col = grid.col(static_cast<Eigen::Index>(j));
        Eigen::Index first = 0, last = T - 1;
        while (first < T && !std::isfinite(col(first))) ++first;
        while (last >= 0 && !std::isfinite(col(last))) --last;
        if (first >= T) throw DataError("column " + raw.names[j] + " has no usable values");
        rep.first_date[raw.names[j]] = raw.dates[static_cast<std::size_t>(first)];
        start = std::max(start, first);
        end = std::min(end, last);
    }
    if (end - start + 1 < 2) throw DataError("common complete window is empty");
    for (std::size_t j : used)
        for (Eigen::Index t = start; t <= end; ++t)
            if (!std::isfinite(grid(t, static_cast<Eigen::Index>(j))))
                throw DataError("missing value for " + raw.names[j] + " at " + raw.dates[static_cast<std::size_t>(t)] +
                                " inside the common window");
    rep.start = raw.dates[static_cast<std::size_t>(start)];
    rep.end = raw.dates[static_cast<std::size_t>(end)];

    favar::PanelData p;
    const Eigen::Index len = end - start + 1;
    p.dates.assign(raw.dates.begin() + start, raw.dates.begin() + end + 1);
    p.x.resize(len, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        p.x.col(static_cast<Eigen::Index>(k)) = grid.col(static_cast<Eigen::Index>(keep[k])).segment(start, len);
        p.names.push_back(raw.names[keep[k]]);
        p.transform_codes.push_back(codes[keep[k]]);
    }
    if (z_idx >= 0) {
        p.z = grid.col(z_idx).segment(start, len);
        p.z_name = options.z_column;
    }
    p.validate();
    if (report) *report = std::move(rep);
    return p;
}

inline favar::PanelData load_panel(const std::string& path, const LoadOptions& options, LoadReport* report = nullptr) {
    return load_panel(read_table(path), options, report);
}

/// Two-column dated series (date,value), aligned to `dates`; NaN where absent.
inline Vector read_instrument(const std::string& path, const std::vector<std::string>& dates) {
    const auto t = read_table(path);
    if (t.names.size() != 1) throw DataError(path + ": instrument file must have exactly one value column");
    std::map<std::string, double> by_date;
    for (std::size_t i = 0; i < t.dates.size(); ++i) by_date[t.dates[i]] = t.values(static_cast<Eigen::Index>(i), 0);
    Vector m = Vector::Constant(static_cast<Eigen::Index>(dates.size()), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < dates.size(); ++i) {
        const auto it = by_date.find(dates[i]);
        if (it != by_date.end()) m(static_cast<Eigen::Index>(i)) = it->second;
    }
    return m;
}

/// Writes a dated matrix with a header row.
inline void write_matrix(std::ostream& os, const std::vector<std::string>& header, const Matrix& m,
                         const std::vector<std::string>& row_labels = {}) {
    os.precision(17);
    for (std::size_t j = 0; j < header.size(); ++j) os << (j ? "," : "") << header[j];
    os << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::size_t c = 0;
        if (!row_labels.empty()) {
            os << row_labels[static_cast<std::size_t>(i)];
            ++c;
        }
        for (Eigen::Index j = 0; j < m.cols(); ++j, ++c) os << (c ? "," : "") << m(i, j);
        os << '\n';
    }
}

}  // namespace fabart::data

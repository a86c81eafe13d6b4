#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sand/error.hpp"
#include "sand/model.hpp"

namespace sand {

namespace detail {

/// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc{} && res.ptr == end;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace detail

/// In-memory dataset: a dense feature matrix plus labels or regression
/// targets, standardization statistics once standardize() ran, and the
/// planted ground-truth support when a synthetic generator produced it.
struct Dataset {
    TaskKind task = TaskKind::Regression;
    std::size_t n_samples = 0;
    std::size_t n_features = 0;
    std::size_t target_dim = 1;
    std::size_t n_classes = 0;

    std::vector<double> X;        // row-major n_samples x n_features
    std::vector<int> labels;      // classification
    std::vector<double> targets;  // regression, row-major n_samples x target_dim

    std::vector<std::string> feature_names;
    std::string target_name = "target";
    std::vector<std::string> class_names;  // class id -> original label text

    bool standardized = false;
    std::vector<double> feature_mean;
    std::vector<double> feature_std;

    std::vector<std::size_t> ground_truth_support;  // ascending

    double x_at(std::size_t row, std::size_t col) const { return X[row * n_features + col]; }
};

/// Loads a comma-separated file with a mandatory header row. The target
/// column is selected by name, or defaults to the last column when the name
/// is empty. Classification targets are mapped to dense 0-based ids in order
/// of first appearance.
inline Dataset load_csv(const std::string& path, const std::string& target_column,
                        TaskKind task) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file: " + path);
    const auto header = detail::split_csv_line(line);
    if (header.empty()) throw ParseError("missing header row: " + path);

    std::size_t target_idx = header.size() - 1;
    if (!target_column.empty()) {
        auto it = std::find(header.begin(), header.end(), target_column);
        if (it == header.end())
            throw ConfigError("target column '" + target_column + "' not found in " + path);
        target_idx = static_cast<std::size_t>(it - header.begin());
    }

    Dataset ds;
    ds.task = task;
    ds.n_features = header.size() - 1;
    if (ds.n_features == 0) throw ConfigError("dataset has no feature columns: " + path);
    for (std::size_t i = 0; i < header.size(); ++i)
        if (i != target_idx) ds.feature_names.push_back(header[i]);
    ds.target_name = header[target_idx];

    std::map<std::string, int> class_ids;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++row;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw ParseError("row " + std::to_string(row) + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(header.size()));
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i == target_idx) continue;
            double v;
            if (!detail::parse_double(fields[i], v))
                throw ParseError("row " + std::to_string(row) + ", column '" + header[i] +
                                 "': cannot parse '" + fields[i] + "' as a number");
            ds.X.push_back(v);
        }
        const std::string& cell = fields[target_idx];
        if (task == TaskKind::Classification) {
            auto [it, inserted] = class_ids.try_emplace(cell, static_cast<int>(ds.class_names.size()));
            if (inserted) ds.class_names.push_back(cell);
            ds.labels.push_back(it->second);
        } else {
            double v;
            if (!detail::parse_double(cell, v))
                throw ParseError("row " + std::to_string(row) + ", target column '" +
                                 header[target_idx] + "': cannot parse '" + cell + "'");
            ds.targets.push_back(v);
        }
    }
    if (row == 0) throw ConfigError("dataset is empty (header only): " + path);
    ds.n_samples = row;
    ds.n_classes = ds.class_names.size();
    return ds;
}

inline void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write file: " + path);
    for (std::size_t i = 0; i < ds.n_features; ++i) {
        const std::string name =
            i < ds.feature_names.size() ? ds.feature_names[i] : "f" + std::to_string(i);
        out << name << ",";
    }
    out << ds.target_name << "\n";
    for (std::size_t r = 0; r < ds.n_samples; ++r) {
        for (std::size_t c = 0; c < ds.n_features; ++c)
            out << detail::format_double(ds.x_at(r, c)) << ",";
        if (ds.task == TaskKind::Classification) {
            const int label = ds.labels[r];
            if (static_cast<std::size_t>(label) < ds.class_names.size())
                out << ds.class_names[label];
            else
                out << label;
        } else {
            out << detail::format_double(ds.targets[r * ds.target_dim]);
        }
        out << "\n";
    }
}

/// Per-feature transform to zero mean and unit population standard deviation.
/// Constant columns become all-zero with their std recorded as 1. Requires at
/// least two rows. The returned stats invert the transform exactly.
inline Dataset standardize(const Dataset& input) {
    if (input.n_samples < 2)
        throw ConfigError("standardize requires at least 2 rows, got " +
                          std::to_string(input.n_samples));
    Dataset ds = input;
    ds.feature_mean.assign(ds.n_features, 0.0);
    ds.feature_std.assign(ds.n_features, 1.0);
    const double inv_n = 1.0 / static_cast<double>(ds.n_samples);
    for (std::size_t c = 0; c < ds.n_features; ++c) {
        double lo = ds.x_at(0, c), hi = lo, mean = 0.0;
        for (std::size_t r = 0; r < ds.n_samples; ++r) {
            const double v = ds.x_at(r, c);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            mean += v;
        }
        mean *= inv_n;
        if (lo == hi) {
            // constant column: mark uninformative
            ds.feature_mean[c] = lo;
            ds.feature_std[c] = 1.0;
            for (std::size_t r = 0; r < ds.n_samples; ++r) ds.X[r * ds.n_features + c] = 0.0;
            continue;
        }
        double var = 0.0;
        for (std::size_t r = 0; r < ds.n_samples; ++r) {
            const double d = ds.x_at(r, c) - mean;
            var += d * d;
        }
        const double sd = std::sqrt(var * inv_n);
        ds.feature_mean[c] = mean;
        ds.feature_std[c] = sd;
        for (std::size_t r = 0; r < ds.n_samples; ++r)
            ds.X[r * ds.n_features + c] = (ds.x_at(r, c) - mean) / sd;
    }
    ds.standardized = true;
    return ds;
}

/// Inverse of standardize() using the recorded per-feature stats.
inline Dataset destandardize(const Dataset& input) {
    if (!input.standardized || input.feature_mean.size() != input.n_features)
        throw ContractError("destandardize: dataset carries no standardization stats");
    Dataset ds = input;
    for (std::size_t c = 0; c < ds.n_features; ++c)
        for (std::size_t r = 0; r < ds.n_samples; ++r)
            ds.X[r * ds.n_features + c] =
                ds.x_at(r, c) * ds.feature_std[c] + ds.feature_mean[c];
    ds.standardized = false;
    return ds;
}

}  // namespace sand

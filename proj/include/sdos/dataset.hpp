#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sdos/errors.hpp"
#include "sdos/linalg.hpp"

namespace sdos {

// Tabular data for the regression models: all columns but the last are
// features, the last is the target. Binary labels "good"/"bad" map to 1/0.
struct Dataset {
    Matrix features;
    Vector target;
    std::vector<std::string> columns;

    int rows() const { return static_cast<int>(features.rows()); }
    int cols() const { return static_cast<int>(features.cols()); }
};

namespace dataset_detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_cell(const std::string& raw, int row, int col) {
    const std::string s = trim(raw);
    if (s == "good" || s == "g") return 1.0;
    if (s == "bad" || s == "b") return 0.0;
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError("malformed cell at row " + std::to_string(row) + ", column " + std::to_string(col));
    }
}

inline void standardize_column(Eigen::Ref<Vector> col) {
    const int n = static_cast<int>(col.size());
    const double mean = col.mean();
    col.array() -= mean;
    const double var = col.squaredNorm() / n;
    if (var > 0.0) col /= std::sqrt(var);
}

}  // namespace dataset_detail

// Comma-separated, UTF-8, first row is a header, '.' decimal point. Row and
// column numbers in errors are 1-based over data rows.
inline Dataset load_dataset(const std::string& path, bool standardize = true) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open dataset file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw EmptyDataset("dataset has no header row: " + path);
    Dataset ds;
    ds.columns = dataset_detail::split_csv_line(line);
    const int ncol = static_cast<int>(ds.columns.size());
    if (ncol < 2) throw ParseError("dataset needs at least one feature and a target column: " + path);

    std::vector<std::vector<double>> rows;
    int rowno = 0;
    while (std::getline(in, line)) {
        if (dataset_detail::trim(line).empty()) continue;
        ++rowno;
        const auto cells = dataset_detail::split_csv_line(line);
        if (static_cast<int>(cells.size()) != ncol) {
            throw ParseError("row " + std::to_string(rowno) + " has " + std::to_string(cells.size()) +
                             " cells, expected " + std::to_string(ncol));
        }
        std::vector<double> vals(ncol);
        for (int c = 0; c < ncol; ++c) vals[c] = dataset_detail::parse_cell(cells[c], rowno, c + 1);
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw EmptyDataset("dataset has no data rows: " + path);

    const int n = static_cast<int>(rows.size());
    ds.features.resize(n, ncol - 1);
    ds.target.resize(n);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < ncol - 1; ++c) ds.features(r, c) = rows[r][c];
        ds.target[r] = rows[r][ncol - 1];
    }
    if (standardize) {
        for (int c = 0; c < ncol - 1; ++c) dataset_detail::standardize_column(ds.features.col(c));
        // binary labels stay as they are; a real-valued target is standardized
        // so the unit-noise-variance convention of the regression model holds
        bool binary = true;
        for (int r = 0; r < n; ++r) {
            if (ds.target[r] != 0.0 && ds.target[r] != 1.0) binary = false;
        }
        if (!binary) dataset_detail::standardize_column(ds.target);
    }
    return ds;
}

}  // namespace sdos

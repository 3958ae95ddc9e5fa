#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace moldqc {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Malformed artifact file: carries enough context to point at the
/// offending cell.
class SchemaError : public std::runtime_error {
public:
    SchemaError(std::string file, long row, std::string column, const std::string& what)
        : std::runtime_error("schema error in " + file + " (row " + std::to_string(row) +
                             ", column " + column + "): " + what),
          file_(std::move(file)), row_(row), column_(std::move(column)) {}

    const std::string& file() const { return file_; }
    long row() const { return row_; }
    const std::string& column() const { return column_; }

private:
    std::string file_;
    long row_;
    std::string column_;
};

/// Artifacts that do not fit together (feature-name mismatch, wrong
/// selection target for the requested model, ...).
class CompatError : public std::runtime_error {
public:
    explicit CompatError(const std::string& what) : std::runtime_error(what) {}
};

inline double vec_mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

/// Population variance (denominator n).
inline double vec_variance(std::span<const double> x) {
    const double m = vec_mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size());
}

inline double vec_stddev(std::span<const double> x) { return std::sqrt(vec_variance(x)); }

/// Sample standard deviation (denominator n-1).
inline double vec_sample_stddev(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = vec_mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size() - 1));
}

}  // namespace moldqc

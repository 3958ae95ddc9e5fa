#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace moldqc {

/// Positive = reject.
struct ConfusionMatrix {
    int64_t tp = 0;
    int64_t fp = 0;
    int64_t fn = 0;
    int64_t tn = 0;

    int64_t total() const { return tp + fp + fn + tn; }
};

struct Rates {
    double accuracy = 0.0;
    double specificity = 0.0;  // tn / (tn + fp)
    double sensitivity = 0.0;  // tp / (tp + fn)
};

struct EvalReport {
    ConfusionMatrix confusion;
    Rates rates;
    std::string approach;
    std::string dataset;
    uint64_t seed = 0;
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred);

/// Zero denominators yield NaN for the affected rate.
Rates metrics(const ConfusionMatrix& cm);

/// Percentage with one decimal, rounding halves away from zero
/// ("0.94737" -> "94.7"). NaN prints as "nan".
std::string format_pct(double fraction);

std::string render_report_table(std::span<const EvalReport> reports);

}  // namespace moldqc

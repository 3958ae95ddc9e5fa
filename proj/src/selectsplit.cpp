#include "moldqc/selectsplit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "moldqc/common.hpp"
#include "moldqc/parallel.hpp"
#include "moldqc/rng.hpp"

namespace moldqc {

void SplitConfig::validate() const {
    if (!(train_fraction > 0.0 && test_fraction > 0.0 && holdout_fraction > 0.0))
        throw std::invalid_argument("split fractions must be positive");
    if (std::abs(train_fraction + test_fraction + holdout_fraction - 1.0) > 1e-12)
        throw std::invalid_argument("split fractions must sum to 1");
}

std::vector<std::string> SelectionResult::names() const {
    std::vector<std::string> out;
    out.reserve(selected.size());
    for (const auto& f : selected) out.push_back(f.name);
    return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
    if (x.size() < 2) throw std::invalid_argument("pearson: need at least 2 observations");
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) return kNaN;  // zero variance or NaN input
    return sxy / std::sqrt(sxx * syy);
}

SelectionResult select_top_k(const FeatureMatrix& matrix, std::span<const double> target,
                             const SelectionConfig& cfg) {
    if (cfg.k < 1) throw std::invalid_argument("selection k must be at least 1");
    if (target.size() != matrix.rows())
        throw std::invalid_argument("selection target length must match the row count");

    const std::size_t cols = matrix.cols();
    std::vector<double> correlations(cols);
    parallel_for(cols, [&](std::size_t c) {
        const std::vector<double> column = matrix.column(c);
        correlations[c] = pearson(column, target);
    });

    std::vector<std::size_t> order;
    order.reserve(cols);
    for (std::size_t c = 0; c < cols; ++c)
        if (!std::isnan(correlations[c])) order.push_back(c);
    if (order.empty())
        throw std::invalid_argument("no feature has a defined correlation with the target");

    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double fa = std::fabs(correlations[a]), fb = std::fabs(correlations[b]);
        if (fa != fb) return fa > fb;
        return matrix.column_names[a] < matrix.column_names[b];
    });

    SelectionResult result;
    const std::size_t take = std::min<std::size_t>(order.size(), static_cast<std::size_t>(cfg.k));
    result.selected.reserve(take);
    for (std::size_t i = 0; i < take; ++i)
        result.selected.push_back(
            {matrix.column_names[order[i]], correlations[order[i]], static_cast<int>(i + 1)});
    return result;
}

namespace {

/// Largest-remainder apportionment of `count` over the three fractions.
std::array<std::size_t, 3> apportion(std::size_t count, const SplitConfig& cfg) {
    const double fractions[3] = {cfg.train_fraction, cfg.test_fraction, cfg.holdout_fraction};
    std::array<std::size_t, 3> out{};
    double remainders[3];
    std::size_t assigned = 0;
    for (int p = 0; p < 3; ++p) {
        const double exact = fractions[p] * static_cast<double>(count);
        out[p] = static_cast<std::size_t>(std::floor(exact));
        remainders[p] = exact - std::floor(exact);
        assigned += out[p];
    }
    for (std::size_t left = count - assigned; left > 0; --left) {
        int best = 0;
        for (int p = 1; p < 3; ++p)
            if (remainders[p] > remainders[best]) best = p;
        ++out[best];
        remainders[best] = -1.0;
    }
    return out;
}

}  // namespace

SplitResult stratified_split(std::span<const int> labels, const SplitConfig& cfg) {
    cfg.validate();
    std::vector<std::size_t> class_members[2];
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1)
            throw std::invalid_argument("labels must be 0 or 1");
        class_members[labels[i]].push_back(i);
    }
    for (int c = 0; c < 2; ++c)
        if (class_members[c].size() < 3)
            throw std::invalid_argument("class " + std::to_string(c) +
                                        " has fewer than 3 members; cannot populate three parts");

    Rng rng(cfg.seed);
    SplitResult result;
    for (auto& members : class_members) {
        rng.shuffle(members);
        const auto counts = apportion(members.size(), cfg);
        std::size_t pos = 0;
        for (std::size_t i = 0; i < counts[0]; ++i) result.train.push_back(members[pos++]);
        for (std::size_t i = 0; i < counts[1]; ++i) result.test.push_back(members[pos++]);
        for (std::size_t i = 0; i < counts[2]; ++i) result.holdout.push_back(members[pos++]);
    }
    std::sort(result.train.begin(), result.train.end());
    std::sort(result.test.begin(), result.test.end());
    std::sort(result.holdout.begin(), result.holdout.end());
    return result;
}

}  // namespace moldqc

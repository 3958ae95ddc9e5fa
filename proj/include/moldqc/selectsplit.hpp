#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "moldqc/tsfeat.hpp"

namespace moldqc {

enum class SelectionTarget { opening_distance, quality_class };
enum class LeakageMode { whole_dataset, train_only };

struct SelectionConfig {
    int k = 300;
    SelectionTarget target = SelectionTarget::opening_distance;
    /// whole_dataset ranks features on every run before splitting;
    /// train_only restricts the ranking to training rows.
    LeakageMode leakage_mode = LeakageMode::whole_dataset;
};

struct SplitConfig {
    double train_fraction = 0.80;
    double test_fraction = 0.10;
    double holdout_fraction = 0.10;
    uint64_t seed = 0;

    void validate() const;
};

struct RankedFeature {
    std::string name;
    double correlation = 0.0;
    int rank = 0;  // 1-based
};

struct SelectionResult {
    std::vector<RankedFeature> selected;

    std::vector<std::string> names() const;
};

struct SplitResult {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::vector<std::size_t> holdout;
};

/// Sample Pearson correlation; NaN when either input has zero variance
/// or contains NaN.
double pearson(std::span<const double> x, std::span<const double> y);

/// Drops NaN-correlation columns, ranks the rest by |r| descending with
/// ties broken by ascending column name, returns the first k.
SelectionResult select_top_k(const FeatureMatrix& matrix, std::span<const double> target,
                             const SelectionConfig& cfg);

/// Per class: seeded shuffle, then largest-remainder allocation over
/// (train, test, holdout). Index sets come back sorted.
SplitResult stratified_split(std::span<const int> labels, const SplitConfig& cfg);

}  // namespace moldqc

#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "moldqc/simcore.hpp"

namespace moldqc {

struct FeatureDescriptor {
    std::string name;
    std::vector<std::pair<std::string, std::string>> params;

    /// `name` or `name__key_value__key_value`.
    std::string label() const;
};

/// Ordered extractor registry. The same catalog is applied to every
/// series of a run; the default_catalog() order is fixed and the
/// manifest written next to the feature matrix documents it.
struct FeatureCatalog {
    std::vector<FeatureDescriptor> entries;

    std::size_t size() const { return entries.size(); }
};

FeatureCatalog default_catalog();

struct FeatureMatrix {
    std::vector<std::string> column_names;
    std::vector<int64_t> run_ids;
    std::vector<double> values;  // row-major

    std::size_t rows() const { return run_ids.size(); }
    std::size_t cols() const { return column_names.size(); }
    double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
    std::span<const double> row(std::size_t r) const {
        return {values.data() + r * cols(), cols()};
    }
    std::vector<double> column(std::size_t c) const;
};

/// One value per catalog entry, in catalog order. Undefined statistics
/// (autocorrelation of a constant series, chunk counts exceeding the
/// length, ...) come back as NaN, never as an error.
std::vector<double> extract_series_features(std::span<const double> series,
                                            const FeatureCatalog& catalog);

/// Row per run: features of (injection pressure, cavity pressure, ram
/// position) concatenated in that order. Parallel over runs; row content
/// does not depend on the worker count.
FeatureMatrix extract_matrix(std::span<const MouldingRun> runs, const FeatureCatalog& catalog);

/// The fixed series order used for matrix columns.
inline constexpr const char* kSeriesNames[3] = {"injection_pressure", "cavity_pressure",
                                                "ram_position"};

}  // namespace moldqc

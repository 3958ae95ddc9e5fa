#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "moldqc/metrics.hpp"
#include "moldqc/pipeline.hpp"
#include "moldqc/selectsplit.hpp"
#include "moldqc/simcore.hpp"
#include "moldqc/tsfeat.hpp"

namespace moldqc {

/// Embedded in every artifact file (comment line for CSV, an object for
/// JSON). Deliberately free of timestamps so reruns are byte-identical.
struct Provenance {
    int format_version = 1;
    std::string command;
    uint64_t seed = 0;
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// ---- runs summary -------------------------------------------------------

struct RunsTable {
    std::vector<int64_t> run_ids;
    std::vector<ProcessParams> params;
    std::vector<double> distances;
    std::vector<int> labels;

    std::size_t size() const { return run_ids.size(); }
};

void write_runs_csv(const std::string& path, std::span<const MouldingRun> runs,
                    const Provenance& prov);
RunsTable read_runs_csv(const std::string& path);

// ---- time series (long format) ------------------------------------------

void write_series_csv(const std::string& path, std::span<const MouldingRun> runs,
                      double sample_rate_hz, const Provenance& prov);
/// Returns runs with run_id and the three series filled in.
std::vector<MouldingRun> read_series_csv(const std::string& path);

// ---- feature matrix ------------------------------------------------------

void write_features_csv(const std::string& path, const FeatureMatrix& m, const Provenance& prov);
FeatureMatrix read_features_csv(const std::string& path);

void write_catalog_json(const std::string& path, const FeatureCatalog& catalog,
                        const Provenance& prov);

// ---- labelling -----------------------------------------------------------

void write_labeling_json(const std::string& path, const LabelingSummary& summary,
                         const Provenance& prov);
LabelingSummary read_labeling_json(const std::string& path);

// ---- selection ------------------------------------------------------------

struct SelectionArtifact {
    SelectionTarget target = SelectionTarget::opening_distance;
    LeakageMode leakage_mode = LeakageMode::whole_dataset;
    int k = 300;
    std::vector<RankedFeature> features;
};

void write_selection_json(const std::string& path, const SelectionArtifact& sel,
                          const Provenance& prov);
SelectionArtifact read_selection_json(const std::string& path);

// ---- split manifest --------------------------------------------------------

struct SplitManifest {
    uint64_t seed = 0;
    double train_fraction = 0.8, test_fraction = 0.1, holdout_fraction = 0.1;
    std::vector<int64_t> train_ids, test_ids, holdout_ids;
};

void write_split_json(const std::string& path, const SplitManifest& manifest,
                      const Provenance& prov);
SplitManifest read_split_json(const std::string& path);

// ---- model bundle -----------------------------------------------------------

void write_bundle_json(const std::string& path, const ModelBundle& bundle, const Provenance& prov);
ModelBundle read_bundle_json(const std::string& path);

void write_trials_csv(const std::string& path, std::span<const TrialRecord> trials,
                      const Provenance& prov);

// ---- evaluation -----------------------------------------------------------

void write_report_json(const std::string& path, const EvalReport& report, const Provenance& prov);
EvalReport read_report_json(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

void write_predictions_csv(const std::string& path, std::span<const int64_t> run_ids,
                           std::span<const int> labels, std::span<const double> scores,
                           const Provenance& prov);

// ---- run configuration -------------------------------------------------------

enum class DatasetPart { test, holdout };

struct RunConfig {
    uint64_t seed = 7;
    int jobs = 0;
    std::string out_dir = "artifacts";
    std::size_t n_runs = 3147;
    ParamDistributions dists;
    SimConfig sim;
    SelectionConfig selection;
    SplitConfig split;
    SearchSpace search;
    int cv_folds = 5;
    double threshold_k = 2.0;

    std::string runs_path() const;
    std::string series_path() const;
    std::string labeling_path() const;
    std::string features_path() const;
    std::string catalog_path() const;
    std::string selection_path(SelectionTarget target) const;
    std::string split_path() const;
    std::string bundle_path(Approach approach) const;
    std::string trials_path(Approach approach) const;
    std::string report_json_path(Approach approach, DatasetPart part) const;
    std::string report_txt_path(Approach approach, DatasetPart part) const;
    std::string predictions_path(Approach approach) const;
};

/// Defaults, overlaid with the JSON config when `json_path` is non-empty.
RunConfig load_run_config(const std::string& json_path);

std::string selection_target_name(SelectionTarget t);
SelectionTarget parse_selection_target(const std::string& s);
std::string leakage_mode_name(LeakageMode m);
LeakageMode parse_leakage_mode(const std::string& s);
Approach parse_approach(const std::string& s);
std::string dataset_part_name(DatasetPart p);
DatasetPart parse_dataset_part(const std::string& s);

}  // namespace moldqc

#include "moldqc/artifacts.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "moldqc/common.hpp"

namespace moldqc {

namespace {

using Json = nlohmann::ordered_json;

// ---- CSV plumbing ---------------------------------------------------------

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, const Provenance& prov) : path_(path), out_(path) {
        if (!out_) throw IoError("cannot open " + path + " for writing");
        buf_.reserve(1 << 20);
        buf_ += "# moldqc format_version=";
        buf_ += std::to_string(prov.format_version);
        buf_ += " command=";
        buf_ += prov.command;
        buf_ += " seed=";
        buf_ += std::to_string(prov.seed);
        buf_ += '\n';
    }
    ~CsvWriter() { flush(); }

    void field(const std::string& s) {
        sep();
        buf_ += s;
    }
    void field(const char* s) {
        sep();
        buf_ += s;
    }
    void field(double v) {
        sep();
        char tmp[32];
        const auto res = std::to_chars(tmp, tmp + sizeof(tmp), v);
        buf_.append(tmp, res.ptr);
    }
    void field_or_empty(double v) {
        if (std::isnan(v))
            sep();
        else
            field(v);
    }
    /// RFC-4180 quoting for fields that may contain commas or quotes.
    void field_quoted(const std::string& s) {
        sep();
        buf_ += '"';
        for (char c : s) {
            buf_ += c;
            if (c == '"') buf_ += '"';
        }
        buf_ += '"';
    }
    void field(int64_t v) {
        sep();
        buf_ += std::to_string(v);
    }
    void end_row() {
        buf_ += '\n';
        row_open_ = false;
        if (buf_.size() > (1 << 20)) flush();
    }

private:
    void sep() {
        if (row_open_) buf_ += ',';
        row_open_ = true;
    }
    void flush() {
        out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        if (!out_) throw IoError("write failed for " + path_);
        buf_.clear();
    }

    std::string path_;
    std::ofstream out_;
    std::string buf_;
    bool row_open_ = false;
};

class CsvReader {
public:
    explicit CsvReader(const std::string& path) : path_(path), in_(path) {
        if (!in_) throw IoError("cannot open " + path);
        std::string line;
        while (std::getline(in_, line)) {
            ++line_number_;
            if (!line.empty() && line[0] == '#') continue;
            split(line, header_);
            return;
        }
        throw SchemaError(path_, line_number_, "-", "missing header row");
    }

    const std::vector<std::string>& header() const { return header_; }
    const std::string& path() const { return path_; }
    long row_number() const { return line_number_; }

    void expect_header(std::span<const std::string> expected) {
        if (header_.size() != expected.size())
            throw SchemaError(path_, line_number_, "-",
                              "expected " + std::to_string(expected.size()) + " columns, found " +
                                  std::to_string(header_.size()));
        for (std::size_t i = 0; i < expected.size(); ++i)
            if (header_[i] != expected[i])
                throw SchemaError(path_, line_number_, header_[i],
                                  "expected column '" + expected[i] + "'");
    }

    bool next_row() {
        while (std::getline(in_, line_)) {
            ++line_number_;
            if (!line_.empty() && line_[0] == '#') continue;
            if (line_.empty()) continue;
            split(line_, fields_);
            if (fields_.size() != header_.size())
                throw SchemaError(path_, line_number_, "-",
                                  "expected " + std::to_string(header_.size()) +
                                      " fields, found " + std::to_string(fields_.size()));
            return true;
        }
        return false;
    }

    double as_double(std::size_t col) const {
        const std::string& f = fields_[col];
        if (f.empty()) return kNaN;
        double v = 0.0;
        const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
        if (res.ec != std::errc{} || res.ptr != f.data() + f.size())
            throw SchemaError(path_, line_number_, header_[col], "not a number: '" + f + "'");
        return v;
    }

    int64_t as_int(std::size_t col) const {
        const std::string& f = fields_[col];
        int64_t v = 0;
        const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
        if (res.ec != std::errc{} || res.ptr != f.data() + f.size())
            throw SchemaError(path_, line_number_, header_[col], "not an integer: '" + f + "'");
        return v;
    }

    const std::string& as_string(std::size_t col) const { return fields_[col]; }

private:
    static void split(const std::string& line, std::vector<std::string>& out) {
        out.clear();
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                out.emplace_back(line.substr(start));
                return;
            }
            out.emplace_back(line.substr(start, comma - start));
            start = comma + 1;
        }
    }

    std::string path_;
    std::ifstream in_;
    std::string line_;
    std::vector<std::string> header_;
    std::vector<std::string> fields_;
    long line_number_ = 0;
};

// ---- JSON plumbing ----------------------------------------------------------

Json provenance_json(const Provenance& prov) {
    return Json{{"format_version", prov.format_version},
                {"command", prov.command},
                {"seed", prov.seed}};
}

void write_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path);
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    Json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path, 0, "-", e.what());
    }
    return j;
}

double json_double(const Json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) throw SchemaError(path, 0, key, "missing key");
    if (j[key].is_null()) return kNaN;
    if (!j[key].is_number()) throw SchemaError(path, 0, key, "expected a number");
    return j[key].get<double>();
}

Json number_or_null(double v) { return std::isnan(v) ? Json(nullptr) : Json(v); }

// ---- hyperparameter (de)serialization -----------------------------------------

Json hp_to_json(const GbmHyperParams& hp) {
    return Json{{"n_estimators", hp.n_estimators},
                {"alpha", hp.alpha},
                {"lambda", hp.lambda},
                {"subsample", hp.subsample},
                {"min_child_weight", hp.min_child_weight},
                {"min_child_samples", hp.min_child_samples},
                {"num_leaves", hp.num_leaves},
                {"learning_rate", hp.learning_rate}};
}

GbmHyperParams hp_from_json(const Json& j, const std::string& path) {
    GbmHyperParams hp;
    hp.n_estimators = static_cast<int>(json_double(j, path, "n_estimators"));
    hp.alpha = json_double(j, path, "alpha");
    hp.lambda = json_double(j, path, "lambda");
    hp.subsample = json_double(j, path, "subsample");
    hp.min_child_weight = json_double(j, path, "min_child_weight");
    hp.min_child_samples = static_cast<int>(json_double(j, path, "min_child_samples"));
    hp.num_leaves = static_cast<int>(json_double(j, path, "num_leaves"));
    hp.learning_rate = json_double(j, path, "learning_rate");
    return hp;
}

Json tree_node_to_json(const Tree& tree, int index) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(index)];
    if (n.is_leaf) return Json{{"leaf", n.value}};
    return Json{{"feature", n.feature},
                {"threshold", n.threshold},
                {"default_left", n.default_left},
                {"left", tree_node_to_json(tree, n.left)},
                {"right", tree_node_to_json(tree, n.right)}};
}

int tree_node_from_json(const Json& j, Tree& tree, const std::string& path) {
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    if (j.contains("leaf")) {
        tree.nodes[static_cast<std::size_t>(index)].value = json_double(j, path, "leaf");
        return index;
    }
    if (!j.contains("feature") || !j.contains("left") || !j.contains("right"))
        throw SchemaError(path, 0, "trees", "split node needs feature/threshold/left/right");
    TreeNode node;
    node.is_leaf = false;
    node.feature = static_cast<int>(json_double(j, path, "feature"));
    node.threshold = json_double(j, path, "threshold");
    node.default_left = j.value("default_left", true);
    tree.nodes[static_cast<std::size_t>(index)] = node;
    const int left = tree_node_from_json(j["left"], tree, path);
    const int right = tree_node_from_json(j["right"], tree, path);
    tree.nodes[static_cast<std::size_t>(index)].left = left;
    tree.nodes[static_cast<std::size_t>(index)].right = right;
    return index;
}

}  // namespace

// ---- runs summary --------------------------------------------------------------

static const std::vector<std::string> kRunsHeader = {
    "run_id",     "cool_temp_K",       "melt_temp_K", "flowrate_cm3s", "pack_pressure_bar",
    "power_law_n", "d1_Pas",            "opening_distance_mm", "label"};

void write_runs_csv(const std::string& path, std::span<const MouldingRun> runs,
                    const Provenance& prov) {
    CsvWriter w(path, prov);
    for (const auto& h : kRunsHeader) w.field(h);
    w.end_row();
    for (const auto& run : runs) {
        w.field(run.run_id);
        w.field(run.params.cooling_water_temp_k);
        w.field(run.params.melt_temp_k);
        w.field(run.params.flowrate_cm3_s);
        w.field(run.params.packing_pressure_bar);
        w.field(run.params.power_law_n);
        w.field(run.params.d1_pa_s);
        w.field(run.opening_distance_mm);
        w.field(static_cast<int64_t>(run.label.value_or(0)));
        w.end_row();
    }
}

RunsTable read_runs_csv(const std::string& path) {
    CsvReader r(path);
    r.expect_header(kRunsHeader);
    RunsTable t;
    while (r.next_row()) {
        t.run_ids.push_back(r.as_int(0));
        ProcessParams p;
        p.cooling_water_temp_k = r.as_double(1);
        p.melt_temp_k = r.as_double(2);
        p.flowrate_cm3_s = r.as_double(3);
        p.packing_pressure_bar = r.as_double(4);
        p.power_law_n = r.as_double(5);
        p.d1_pa_s = r.as_double(6);
        t.params.push_back(p);
        t.distances.push_back(r.as_double(7));
        const int64_t label = r.as_int(8);
        if (label != 0 && label != 1)
            throw SchemaError(path, r.row_number(), "label", "label must be 0 or 1");
        t.labels.push_back(static_cast<int>(label));
    }
    return t;
}

// ---- time series ------------------------------------------------------------------

static const std::vector<std::string> kSeriesHeader = {"run_id", "series", "t_s", "value"};

void write_series_csv(const std::string& path, std::span<const MouldingRun> runs,
                      double sample_rate_hz, const Provenance& prov) {
    CsvWriter w(path, prov);
    for (const auto& h : kSeriesHeader) w.field(h);
    w.end_row();
    for (const auto& run : runs) {
        const std::span<const double> series[3] = {run.injection_pressure_bar,
                                                   run.cavity_pressure_bar, run.ram_position_mm};
        for (int s = 0; s < 3; ++s) {
            for (std::size_t k = 0; k < series[s].size(); ++k) {
                w.field(run.run_id);
                w.field(kSeriesNames[s]);
                w.field(static_cast<double>(k) / sample_rate_hz);
                w.field(series[s][k]);
                w.end_row();
            }
        }
    }
}

std::vector<MouldingRun> read_series_csv(const std::string& path) {
    CsvReader r(path);
    r.expect_header(kSeriesHeader);
    std::vector<MouldingRun> runs;
    MouldingRun* current = nullptr;
    while (r.next_row()) {
        const int64_t id = r.as_int(0);
        if (!current || current->run_id != id) {
            if (!runs.empty() && runs.back().run_id >= id)
                throw SchemaError(path, r.row_number(), "run_id",
                                  "run blocks must be in ascending run_id order");
            runs.emplace_back();
            current = &runs.back();
            current->run_id = id;
        }
        const std::string& name = r.as_string(1);
        const double value = r.as_double(3);
        if (name == kSeriesNames[0])
            current->injection_pressure_bar.push_back(value);
        else if (name == kSeriesNames[1])
            current->cavity_pressure_bar.push_back(value);
        else if (name == kSeriesNames[2])
            current->ram_position_mm.push_back(value);
        else
            throw SchemaError(path, r.row_number(), "series", "unknown series '" + name + "'");
    }
    if (runs.empty()) throw SchemaError(path, r.row_number(), "-", "no series rows");
    return runs;
}

// ---- feature matrix -----------------------------------------------------------------

void write_features_csv(const std::string& path, const FeatureMatrix& m, const Provenance& prov) {
    CsvWriter w(path, prov);
    w.field("run_id");
    for (const auto& name : m.column_names) w.field(name);
    w.end_row();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        w.field(m.run_ids[r]);
        const auto row = m.row(r);
        for (double v : row) w.field_or_empty(v);
        w.end_row();
    }
}

FeatureMatrix read_features_csv(const std::string& path) {
    CsvReader r(path);
    if (r.header().empty() || r.header()[0] != "run_id")
        throw SchemaError(path, r.row_number(), "run_id", "first column must be run_id");
    FeatureMatrix m;
    m.column_names.assign(r.header().begin() + 1, r.header().end());
    while (r.next_row()) {
        m.run_ids.push_back(r.as_int(0));
        for (std::size_t c = 0; c < m.column_names.size(); ++c)
            m.values.push_back(r.as_double(c + 1));
    }
    if (m.run_ids.empty()) throw SchemaError(path, r.row_number(), "-", "no feature rows");
    return m;
}

void write_catalog_json(const std::string& path, const FeatureCatalog& catalog,
                        const Provenance& prov) {
    Json entries = Json::array();
    for (const auto& e : catalog.entries) {
        Json params = Json::object();
        for (const auto& [k, v] : e.params) params[k] = v;
        entries.push_back(Json{{"name", e.name}, {"params", params}, {"label", e.label()}});
    }
    write_json_file(path, Json{{"provenance", provenance_json(prov)},
                               {"per_series_count", catalog.entries.size()},
                               {"series", Json::array({kSeriesNames[0], kSeriesNames[1],
                                                       kSeriesNames[2]})},
                               {"entries", entries}});
}

// ---- labelling ------------------------------------------------------------------------

void write_labeling_json(const std::string& path, const LabelingSummary& summary,
                         const Provenance& prov) {
    write_json_file(path, Json{{"provenance", provenance_json(prov)},
                               {"mu_mm", summary.mu_mm},
                               {"sigma_mm", summary.sigma_mm},
                               {"k", summary.k},
                               {"reject_count", summary.reject_count},
                               {"accept_count", summary.accept_count}});
}

LabelingSummary read_labeling_json(const std::string& path) {
    const Json j = read_json_file(path);
    LabelingSummary s;
    s.mu_mm = json_double(j, path, "mu_mm");
    s.sigma_mm = json_double(j, path, "sigma_mm");
    s.k = json_double(j, path, "k");
    s.reject_count = static_cast<int64_t>(json_double(j, path, "reject_count"));
    s.accept_count = static_cast<int64_t>(json_double(j, path, "accept_count"));
    return s;
}

// ---- selection ---------------------------------------------------------------------------

void write_selection_json(const std::string& path, const SelectionArtifact& sel,
                          const Provenance& prov) {
    Json features = Json::array();
    for (const auto& f : sel.features)
        features.push_back(Json{{"feature_name", f.name},
                                {"correlation", f.correlation},
                                {"rank", f.rank}});
    write_json_file(path, Json{{"provenance", provenance_json(prov)},
                               {"target", selection_target_name(sel.target)},
                               {"leakage_mode", leakage_mode_name(sel.leakage_mode)},
                               {"k", sel.k},
                               {"features", features}});
}

SelectionArtifact read_selection_json(const std::string& path) {
    const Json j = read_json_file(path);
    SelectionArtifact sel;
    if (!j.contains("target") || !j.contains("features"))
        throw SchemaError(path, 0, "-", "selection file needs 'target' and 'features'");
    sel.target = parse_selection_target(j["target"].get<std::string>());
    sel.leakage_mode = parse_leakage_mode(j.value("leakage_mode", "whole_dataset"));
    sel.k = static_cast<int>(json_double(j, path, "k"));
    for (const auto& f : j["features"]) {
        RankedFeature rf;
        rf.name = f.at("feature_name").get<std::string>();
        rf.correlation = json_double(f, path, "correlation");
        rf.rank = static_cast<int>(json_double(f, path, "rank"));
        sel.features.push_back(std::move(rf));
    }
    if (sel.features.empty()) throw SchemaError(path, 0, "features", "no selected features");
    return sel;
}

// ---- split manifest -------------------------------------------------------------------------

void write_split_json(const std::string& path, const SplitManifest& manifest,
                      const Provenance& prov) {
    write_json_file(path, Json{{"provenance", provenance_json(prov)},
                               {"seed", manifest.seed},
                               {"fractions", Json{{"train", manifest.train_fraction},
                                                  {"test", manifest.test_fraction},
                                                  {"holdout", manifest.holdout_fraction}}},
                               {"train_ids", manifest.train_ids},
                               {"test_ids", manifest.test_ids},
                               {"holdout_ids", manifest.holdout_ids}});
}

SplitManifest read_split_json(const std::string& path) {
    const Json j = read_json_file(path);
    SplitManifest m;
    m.seed = j.value("seed", 0ULL);
    if (!j.contains("fractions") || !j.contains("train_ids") || !j.contains("test_ids") ||
        !j.contains("holdout_ids"))
        throw SchemaError(path, 0, "-", "split manifest needs fractions and the three id lists");
    m.train_fraction = json_double(j["fractions"], path, "train");
    m.test_fraction = json_double(j["fractions"], path, "test");
    m.holdout_fraction = json_double(j["fractions"], path, "holdout");
    m.train_ids = j["train_ids"].get<std::vector<int64_t>>();
    m.test_ids = j["test_ids"].get<std::vector<int64_t>>();
    m.holdout_ids = j["holdout_ids"].get<std::vector<int64_t>>();
    return m;
}

// ---- model bundle ------------------------------------------------------------------------------

void write_bundle_json(const std::string& path, const ModelBundle& bundle, const Provenance& prov) {
    Json j{{"provenance", provenance_json(prov)},
           {"format_version", bundle.format_version},
           {"approach", approach_name(bundle.approach)}};
    j["selected_features"] = bundle.selected_features;
    if (bundle.approach != Approach::naive) {
        j["scaler"] = Json{{"mean", bundle.scaler.mean}, {"scale", bundle.scaler.scale}};
        Json trees = Json::array();
        for (const auto& tree : bundle.model->trees) trees.push_back(tree_node_to_json(tree, 0));
        j["model"] = Json{{"objective", bundle.model->objective == Objective::weighted_logistic
                                            ? "weighted_logistic"
                                            : "squared"},
                          {"base_score", bundle.model->base_score},
                          {"feature_count", bundle.model->feature_count},
                          {"trees", trees}};
        j["best_hyperparams"] = hp_to_json(*bundle.best_hyperparams);
        j["cv_score"] = bundle.cv_score;
    } else {
        j["naive_label"] = bundle.naive_label;
        j["naive_score"] = bundle.naive_score;
    }
    if (bundle.threshold)
        j["threshold"] = Json{{"x_bar", bundle.threshold->x_bar},
                              {"s", bundle.threshold->s},
                              {"k", bundle.threshold->k}};
    if (bundle.labeling) {
        const LabelingSummary& s = *bundle.labeling;
        j["labeling"] = Json{{"mu_mm", s.mu_mm},
                             {"sigma_mm", s.sigma_mm},
                             {"k", s.k},
                             {"reject_count", s.reject_count},
                             {"accept_count", s.accept_count}};
    }
    write_json_file(path, j);
}

ModelBundle read_bundle_json(const std::string& path) {
    const Json j = read_json_file(path);
    ModelBundle bundle;
    if (!j.contains("approach")) throw SchemaError(path, 0, "approach", "missing key");
    bundle.format_version = static_cast<int>(json_double(j, path, "format_version"));
    bundle.approach = parse_approach(j["approach"].get<std::string>());
    bundle.selected_features = j.value("selected_features", std::vector<std::string>{});
    if (bundle.approach != Approach::naive) {
        if (!j.contains("scaler") || !j.contains("model"))
            throw SchemaError(path, 0, "model", "non-naive bundle needs scaler and model");
        bundle.scaler.mean = j["scaler"]["mean"].get<std::vector<double>>();
        bundle.scaler.scale = j["scaler"]["scale"].get<std::vector<double>>();
        GbmModel model;
        const Json& mj = j["model"];
        const std::string obj = mj.at("objective").get<std::string>();
        if (obj == "weighted_logistic")
            model.objective = Objective::weighted_logistic;
        else if (obj == "squared")
            model.objective = Objective::squared;
        else
            throw SchemaError(path, 0, "objective", "unknown objective '" + obj + "'");
        model.base_score = json_double(mj, path, "base_score");
        model.feature_count = static_cast<std::size_t>(json_double(mj, path, "feature_count"));
        for (const auto& tj : mj.at("trees")) {
            Tree tree;
            tree_node_from_json(tj, tree, path);
            model.trees.push_back(std::move(tree));
        }
        bundle.model = std::move(model);
        bundle.best_hyperparams = hp_from_json(j.at("best_hyperparams"), path);
        bundle.cv_score = json_double(j, path, "cv_score");
    } else {
        bundle.naive_label = static_cast<int>(json_double(j, path, "naive_label"));
        bundle.naive_score = json_double(j, path, "naive_score");
    }
    if (j.contains("threshold")) {
        ThresholdRule rule;
        rule.x_bar = json_double(j["threshold"], path, "x_bar");
        rule.s = json_double(j["threshold"], path, "s");
        rule.k = json_double(j["threshold"], path, "k");
        bundle.threshold = rule;
    }
    if (bundle.approach == Approach::regress_threshold && !bundle.threshold)
        throw SchemaError(path, 0, "threshold", "regress_threshold bundle needs a threshold rule");
    if (j.contains("labeling")) {
        LabelingSummary s;
        const Json& lj = j["labeling"];
        s.mu_mm = json_double(lj, path, "mu_mm");
        s.sigma_mm = json_double(lj, path, "sigma_mm");
        s.k = json_double(lj, path, "k");
        s.reject_count = static_cast<int64_t>(json_double(lj, path, "reject_count"));
        s.accept_count = static_cast<int64_t>(json_double(lj, path, "accept_count"));
        bundle.labeling = s;
    }
    return bundle;
}

void write_trials_csv(const std::string& path, std::span<const TrialRecord> trials,
                      const Provenance& prov) {
    CsvWriter w(path, prov);
    w.field("draw_index");
    w.field("hyperparams_json");
    w.field("cv_score");
    w.end_row();
    for (const auto& t : trials) {
        w.field(static_cast<int64_t>(t.draw_index));
        w.field_quoted(hp_to_json(t.hp).dump());
        w.field(t.cv_score);
        w.end_row();
    }
}

// ---- evaluation -----------------------------------------------------------------------------------

void write_report_json(const std::string& path, const EvalReport& report, const Provenance& prov) {
    write_json_file(
        path,
        Json{{"provenance", provenance_json(prov)},
             {"approach", report.approach},
             {"dataset", report.dataset},
             {"seed", report.seed},
             {"confusion", Json{{"tp", report.confusion.tp},
                                {"fp", report.confusion.fp},
                                {"fn", report.confusion.fn},
                                {"tn", report.confusion.tn}}},
             {"rates", Json{{"accuracy", number_or_null(report.rates.accuracy)},
                            {"specificity", number_or_null(report.rates.specificity)},
                            {"sensitivity", number_or_null(report.rates.sensitivity)}}},
             {"formatted", Json{{"accuracy_pct", format_pct(report.rates.accuracy)},
                                {"specificity_pct", format_pct(report.rates.specificity)},
                                {"sensitivity_pct", format_pct(report.rates.sensitivity)}}}});
}

EvalReport read_report_json(const std::string& path) {
    const Json j = read_json_file(path);
    EvalReport r;
    if (!j.contains("confusion") || !j.contains("rates"))
        throw SchemaError(path, 0, "-", "report needs confusion and rates");
    r.approach = j.value("approach", "");
    r.dataset = j.value("dataset", "");
    r.seed = j.value("seed", 0ULL);
    r.confusion.tp = static_cast<int64_t>(json_double(j["confusion"], path, "tp"));
    r.confusion.fp = static_cast<int64_t>(json_double(j["confusion"], path, "fp"));
    r.confusion.fn = static_cast<int64_t>(json_double(j["confusion"], path, "fn"));
    r.confusion.tn = static_cast<int64_t>(json_double(j["confusion"], path, "tn"));
    r.rates.accuracy = json_double(j["rates"], path, "accuracy");
    r.rates.specificity = json_double(j["rates"], path, "specificity");
    r.rates.sensitivity = json_double(j["rates"], path, "sensitivity");
    return r;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << content;
    if (!out) throw IoError("write failed for " + path);
}

void write_predictions_csv(const std::string& path, std::span<const int64_t> run_ids,
                           std::span<const int> labels, std::span<const double> scores,
                           const Provenance& prov) {
    CsvWriter w(path, prov);
    w.field("run_id");
    w.field("predicted_label");
    w.field("score");
    w.end_row();
    for (std::size_t i = 0; i < run_ids.size(); ++i) {
        w.field(run_ids[i]);
        w.field(static_cast<int64_t>(labels[i]));
        w.field(scores[i]);
        w.end_row();
    }
}

// ---- run configuration --------------------------------------------------------------------------------

namespace {

std::string join_path(const std::string& dir, const std::string& name) {
    if (dir.empty()) return name;
    return (std::filesystem::path(dir) / name).string();
}

std::string approach_file_tag(Approach a) { return approach_name(a); }

void load_range(const Json& j, const char* key, ParamRange& r, const std::string& path) {
    if (!j.contains(key)) return;
    const Json& v = j[key];
    r.median = json_double(v, path, "median");
    r.iqr_low = json_double(v, path, "iqr_low");
    r.iqr_high = json_double(v, path, "iqr_high");
}

template <typename T>
void load_list(const Json& j, const char* key, std::vector<T>& out) {
    if (j.contains(key)) out = j[key].get<std::vector<T>>();
}

}  // namespace

std::string RunConfig::runs_path() const { return join_path(out_dir, "runs.csv"); }
std::string RunConfig::series_path() const { return join_path(out_dir, "series.csv"); }
std::string RunConfig::labeling_path() const { return join_path(out_dir, "labeling.json"); }
std::string RunConfig::features_path() const { return join_path(out_dir, "features.csv"); }
std::string RunConfig::catalog_path() const { return join_path(out_dir, "catalog.json"); }
std::string RunConfig::selection_path(SelectionTarget target) const {
    return join_path(out_dir, "selection_" + selection_target_name(target) + ".json");
}
std::string RunConfig::split_path() const { return join_path(out_dir, "split.json"); }
std::string RunConfig::bundle_path(Approach approach) const {
    return join_path(out_dir, "bundle_" + approach_file_tag(approach) + ".json");
}
std::string RunConfig::trials_path(Approach approach) const {
    return join_path(out_dir, "trials_" + approach_file_tag(approach) + ".csv");
}
std::string RunConfig::report_json_path(Approach approach, DatasetPart part) const {
    return join_path(out_dir,
                     "report_" + approach_file_tag(approach) + "_" + dataset_part_name(part) + ".json");
}
std::string RunConfig::report_txt_path(Approach approach, DatasetPart part) const {
    return join_path(out_dir,
                     "report_" + approach_file_tag(approach) + "_" + dataset_part_name(part) + ".txt");
}
std::string RunConfig::predictions_path(Approach approach) const {
    return join_path(out_dir, "predictions_" + approach_file_tag(approach) + ".csv");
}

RunConfig load_run_config(const std::string& json_path) {
    RunConfig cfg;
    cfg.sim = default_sim_config(cfg.dists);
    if (json_path.empty()) return cfg;

    const Json j = read_json_file(json_path);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.jobs = j.value("jobs", cfg.jobs);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.n_runs = j.value("n_runs", cfg.n_runs);
    cfg.cv_folds = j.value("cv_folds", cfg.cv_folds);
    cfg.threshold_k = j.value("threshold_k", cfg.threshold_k);

    if (j.contains("distributions")) {
        const Json& d = j["distributions"];
        load_range(d, "cooling_water_temp_k", cfg.dists.cooling_water_temp_k, json_path);
        load_range(d, "melt_temp_k", cfg.dists.melt_temp_k, json_path);
        load_range(d, "flowrate_cm3_s", cfg.dists.flowrate_cm3_s, json_path);
        load_range(d, "packing_pressure_bar", cfg.dists.packing_pressure_bar, json_path);
        load_range(d, "power_law_n", cfg.dists.power_law_n, json_path);
        load_range(d, "d1_pa_s", cfg.dists.d1_pa_s, json_path);
    }
    if (j.contains("sim")) {
        const Json& s = j["sim"];
        SimConfig& sim = cfg.sim;
        sim.nominal_opening_distance_mm =
            s.value("nominal_opening_distance_mm", sim.nominal_opening_distance_mm);
        sim.shot_volume_cm3 = s.value("shot_volume_cm3", sim.shot_volume_cm3);
        sim.cycle_duration_s = s.value("cycle_duration_s", sim.cycle_duration_s);
        sim.sample_rate_hz = s.value("sample_rate_hz", sim.sample_rate_hz);
        sim.noise_std_mm = s.value("noise_std_mm", sim.noise_std_mm);
        sim.label_sigma_multiplier = s.value("label_sigma_multiplier", sim.label_sigma_multiplier);
        if (s.contains("cross_wlf")) {
            const Json& w = s["cross_wlf"];
            sim.cross_wlf.tau_star_pa = w.value("tau_star_pa", sim.cross_wlf.tau_star_pa);
            sim.cross_wlf.d2_ref_temp_k = w.value("d2_ref_temp_k", sim.cross_wlf.d2_ref_temp_k);
            sim.cross_wlf.a1 = w.value("a1", sim.cross_wlf.a1);
            sim.cross_wlf.a2_k = w.value("a2_k", sim.cross_wlf.a2_k);
        }
        if (s.contains("series")) {
            const Json& sh = s["series"];
            SeriesShape& shape = sim.series;
            shape.packing_duration_s = sh.value("packing_duration_s", shape.packing_duration_s);
            shape.ram_start_mm = sh.value("ram_start_mm", shape.ram_start_mm);
            shape.screw_area_cm2 = sh.value("screw_area_cm2", shape.screw_area_cm2);
            shape.flow_ref_cm3_s = sh.value("flow_ref_cm3_s", shape.flow_ref_cm3_s);
            shape.fill_pressure_coeff_bar =
                sh.value("fill_pressure_coeff_bar", shape.fill_pressure_coeff_bar);
            shape.switchover_tau_s = sh.value("switchover_tau_s", shape.switchover_tau_s);
            shape.cavity_lag_tau_s = sh.value("cavity_lag_tau_s", shape.cavity_lag_tau_s);
            shape.cavity_gain = sh.value("cavity_gain", shape.cavity_gain);
            shape.cavity_gain_melt_slope_per_k =
                sh.value("cavity_gain_melt_slope_per_k", shape.cavity_gain_melt_slope_per_k);
            shape.release_tau_base_s = sh.value("release_tau_base_s", shape.release_tau_base_s);
            shape.release_tau_cool_slope_s_per_k =
                sh.value("release_tau_cool_slope_s_per_k", shape.release_tau_cool_slope_s_per_k);
            shape.release_tau_melt_slope_s_per_k =
                sh.value("release_tau_melt_slope_s_per_k", shape.release_tau_melt_slope_s_per_k);
            shape.creep_depth_mm = sh.value("creep_depth_mm", shape.creep_depth_mm);
            shape.creep_tau_s = sh.value("creep_tau_s", shape.creep_tau_s);
            shape.shear_rate_ref_per_s = sh.value("shear_rate_ref_per_s", shape.shear_rate_ref_per_s);
        }
        if (s.contains("shrinkage")) {
            const Json& sk = s["shrinkage"];
            sim.shrinkage.base = sk.value("base", sim.shrinkage.base);
            if (sk.contains("coefficients")) {
                const auto coeffs = sk["coefficients"].get<std::vector<double>>();
                if (coeffs.size() != 4)
                    throw SchemaError(json_path, 0, "shrinkage.coefficients",
                                      "expected 4 sensitivities (melt, pack, cool, log_visc)");
                std::copy(coeffs.begin(), coeffs.end(), sim.shrinkage.coefficients.begin());
            }
        }
        // Standardization references follow the (possibly overridden)
        // distributions unless pinned explicitly.
        if (s.contains("shrinkage_refs")) {
            const Json& rf = s["shrinkage_refs"];
            ShrinkageRefs& refs = sim.refs;
            refs.melt_ref_k = json_double(rf, json_path, "melt_ref_k");
            refs.melt_sigma_k = json_double(rf, json_path, "melt_sigma_k");
            refs.pack_ref_bar = json_double(rf, json_path, "pack_ref_bar");
            refs.pack_sigma_bar = json_double(rf, json_path, "pack_sigma_bar");
            refs.cool_ref_k = json_double(rf, json_path, "cool_ref_k");
            refs.cool_sigma_k = json_double(rf, json_path, "cool_sigma_k");
            refs.log_visc_ref = json_double(rf, json_path, "log_visc_ref");
            refs.log_visc_sigma = json_double(rf, json_path, "log_visc_sigma");
        } else {
            cfg.sim.refs = derive_shrinkage_refs(cfg.dists, cfg.sim.cross_wlf,
                                                 cfg.sim.series.shear_rate_ref_per_s);
        }
    } else {
        cfg.sim.refs =
            derive_shrinkage_refs(cfg.dists, cfg.sim.cross_wlf, cfg.sim.series.shear_rate_ref_per_s);
    }

    if (j.contains("selection")) {
        const Json& s = j["selection"];
        cfg.selection.k = s.value("k", cfg.selection.k);
        if (s.contains("target"))
            cfg.selection.target = parse_selection_target(s["target"].get<std::string>());
        if (s.contains("leakage_mode"))
            cfg.selection.leakage_mode = parse_leakage_mode(s["leakage_mode"].get<std::string>());
    }
    if (j.contains("split")) {
        const Json& s = j["split"];
        cfg.split.train_fraction = s.value("train", cfg.split.train_fraction);
        cfg.split.test_fraction = s.value("test", cfg.split.test_fraction);
        cfg.split.holdout_fraction = s.value("holdout", cfg.split.holdout_fraction);
    }
    if (j.contains("search")) {
        const Json& s = j["search"];
        load_list(s, "n_estimators", cfg.search.n_estimators);
        load_list(s, "alpha", cfg.search.alpha);
        load_list(s, "lambda", cfg.search.lambda);
        load_list(s, "subsample", cfg.search.subsample);
        load_list(s, "min_child_weight", cfg.search.min_child_weight);
        load_list(s, "min_child_samples", cfg.search.min_child_samples);
        load_list(s, "num_leaves", cfg.search.num_leaves);
        cfg.search.n_draws = s.value("n_draws", cfg.search.n_draws);
        cfg.search.learning_rate = s.value("learning_rate", cfg.search.learning_rate);
    }
    return cfg;
}

std::string selection_target_name(SelectionTarget t) {
    return t == SelectionTarget::opening_distance ? "opening_distance" : "quality_class";
}

SelectionTarget parse_selection_target(const std::string& s) {
    if (s == "opening_distance") return SelectionTarget::opening_distance;
    if (s == "quality_class") return SelectionTarget::quality_class;
    throw std::invalid_argument("unknown selection target '" + s + "'");
}

std::string leakage_mode_name(LeakageMode m) {
    return m == LeakageMode::whole_dataset ? "whole_dataset" : "train_only";
}

LeakageMode parse_leakage_mode(const std::string& s) {
    if (s == "whole_dataset") return LeakageMode::whole_dataset;
    if (s == "train_only") return LeakageMode::train_only;
    throw std::invalid_argument("unknown leakage mode '" + s + "'");
}

Approach parse_approach(const std::string& s) {
    if (s == "classify") return Approach::classify;
    if (s == "regress_threshold" || s == "regress-threshold") return Approach::regress_threshold;
    if (s == "naive") return Approach::naive;
    throw std::invalid_argument("unknown approach '" + s + "'");
}

std::string dataset_part_name(DatasetPart p) { return p == DatasetPart::test ? "test" : "holdout"; }

DatasetPart parse_dataset_part(const std::string& s) {
    if (s == "test") return DatasetPart::test;
    if (s == "holdout") return DatasetPart::holdout;
    throw std::invalid_argument("unknown dataset part '" + s + "'");
}

}  // namespace moldqc

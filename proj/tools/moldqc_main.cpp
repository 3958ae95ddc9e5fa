// Batch front end: simulate shots, extract features, rank and split,
// train the quality models, evaluate and report. Every stage reads and
// writes plain CSV/JSON artifacts so any step can be rerun or inspected
// in isolation.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <unordered_map>

#include "moldqc/artifacts.hpp"
#include "moldqc/common.hpp"
#include "moldqc/metrics.hpp"
#include "moldqc/parallel.hpp"
#include "moldqc/rng.hpp"

namespace {

using namespace moldqc;

struct Cli {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::optional<int> jobs;
    std::optional<std::string> out_dir;

    // per-command options
    std::size_t n_runs = 0;
    std::string target;
    std::optional<int> k;
    std::string approach = "regress-threshold";
    std::string part = "test";
    std::optional<int> draws;
    std::string bundle_path;
    std::string features_path;
    std::string output_path;
    std::vector<std::string> report_inputs;
};

RunConfig effective_config(const Cli& cli) {
    RunConfig cfg = load_run_config(cli.config_path);
    if (cli.seed) cfg.seed = *cli.seed;
    if (cli.jobs) cfg.jobs = *cli.jobs;
    if (cli.out_dir) cfg.out_dir = *cli.out_dir;
    if (cli.n_runs > 0) cfg.n_runs = cli.n_runs;
    if (cli.k) cfg.selection.k = *cli.k;
    if (!cli.target.empty()) cfg.selection.target = parse_selection_target(cli.target);
    if (cli.draws) cfg.search.n_draws = *cli.draws;
    set_max_jobs(cfg.jobs);
    return cfg;
}

void require_input(const std::string& path) {
    if (!std::filesystem::exists(path)) throw IoError("required input does not exist: " + path);
}

/// Feature rows and the runs table must describe the same runs in the
/// same order.
void check_alignment(const FeatureMatrix& features, const RunsTable& runs) {
    if (features.rows() != runs.size())
        throw CompatError("feature matrix has " + std::to_string(features.rows()) +
                          " rows but the runs table has " + std::to_string(runs.size()));
    for (std::size_t i = 0; i < runs.size(); ++i)
        if (features.run_ids[i] != runs.run_ids[i])
            throw CompatError("run_id mismatch at row " + std::to_string(i) + ": features say " +
                              std::to_string(features.run_ids[i]) + ", runs say " +
                              std::to_string(runs.run_ids[i]));
}

std::vector<std::size_t> ids_to_rows(const FeatureMatrix& features,
                                     std::span<const int64_t> ids) {
    std::unordered_map<int64_t, std::size_t> row_of;
    row_of.reserve(features.rows());
    for (std::size_t r = 0; r < features.rows(); ++r) row_of[features.run_ids[r]] = r;
    std::vector<std::size_t> rows;
    rows.reserve(ids.size());
    for (int64_t id : ids) {
        const auto it = row_of.find(id);
        if (it == row_of.end())
            throw CompatError("run " + std::to_string(id) + " is missing from the feature matrix");
        rows.push_back(it->second);
    }
    return rows;
}

/// Gathers the named columns (bundle order) for the given rows.
std::vector<double> gather_selected(const FeatureMatrix& features,
                                    const std::vector<std::string>& names,
                                    std::span<const std::size_t> rows) {
    std::unordered_map<std::string, std::size_t> col_of;
    col_of.reserve(features.cols());
    for (std::size_t c = 0; c < features.cols(); ++c) col_of[features.column_names[c]] = c;
    std::vector<std::size_t> cols;
    cols.reserve(names.size());
    for (const auto& name : names) {
        const auto it = col_of.find(name);
        if (it == col_of.end()) throw CompatError("feature-name mismatch: '" + name + "'");
        cols.push_back(it->second);
    }
    std::vector<double> out;
    out.reserve(rows.size() * cols.size());
    for (std::size_t r : rows)
        for (std::size_t c : cols) out.push_back(features.at(r, c));
    return out;
}

int cmd_simulate(const Cli& cli) {
    RunConfig cfg = effective_config(cli);
    if (cfg.n_runs < 2) throw std::invalid_argument("simulate needs --n of at least 2");
    cfg.sim.rng_seed = stage_seed(cfg.seed, "simulate");
    LabelingSummary summary;
    const std::vector<MouldingRun> runs =
        generate_dataset(cfg.dists, cfg.sim, cfg.n_runs, cfg.sim.rng_seed, &summary);
    std::filesystem::create_directories(cfg.out_dir);
    const Provenance prov{1, "simulate", cfg.seed};
    write_runs_csv(cfg.runs_path(), runs, prov);
    write_series_csv(cfg.series_path(), runs, cfg.sim.sample_rate_hz, prov);
    write_labeling_json(cfg.labeling_path(), summary, prov);
    std::cout << "simulated " << runs.size() << " runs (" << summary.reject_count << " rejects, mu="
              << summary.mu_mm << " mm, sigma=" << summary.sigma_mm << " mm)\n";
    return 0;
}

int cmd_extract(const Cli& cli) {
    RunConfig cfg = effective_config(cli);
    require_input(cfg.series_path());
    const std::vector<MouldingRun> runs = read_series_csv(cfg.series_path());
    const FeatureCatalog catalog = default_catalog();
    const FeatureMatrix matrix = extract_matrix(runs, catalog);
    std::filesystem::create_directories(cfg.out_dir);
    const Provenance prov{1, "extract", cfg.seed};
    write_features_csv(cfg.features_path(), matrix, prov);
    write_catalog_json(cfg.catalog_path(), catalog, prov);
    std::cout << "extracted " << matrix.cols() << " features for " << matrix.rows() << " runs\n";
    return 0;
}

int cmd_select(const Cli& cli) {
    RunConfig cfg = effective_config(cli);
    require_input(cfg.features_path());
    require_input(cfg.runs_path());
    const FeatureMatrix features = read_features_csv(cfg.features_path());
    const RunsTable runs = read_runs_csv(cfg.runs_path());
    check_alignment(features, runs);

    std::vector<double> target(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i)
        target[i] = cfg.selection.target == SelectionTarget::opening_distance
                        ? runs.distances[i]
                        : static_cast<double>(runs.labels[i]);

    SelectionResult result;
    if (cfg.selection.leakage_mode == LeakageMode::train_only) {
        require_input(cfg.split_path());
        const SplitManifest manifest = read_split_json(cfg.split_path());
        const std::vector<std::size_t> rows = ids_to_rows(features, manifest.train_ids);
        FeatureMatrix sub;
        sub.column_names = features.column_names;
        sub.run_ids.reserve(rows.size());
        sub.values.reserve(rows.size() * features.cols());
        std::vector<double> sub_target;
        for (std::size_t r : rows) {
            sub.run_ids.push_back(features.run_ids[r]);
            const auto row = features.row(r);
            sub.values.insert(sub.values.end(), row.begin(), row.end());
            sub_target.push_back(target[r]);
        }
        result = select_top_k(sub, sub_target, cfg.selection);
    } else {
        result = select_top_k(features, target, cfg.selection);
    }

    SelectionArtifact artifact;
    artifact.target = cfg.selection.target;
    artifact.leakage_mode = cfg.selection.leakage_mode;
    artifact.k = cfg.selection.k;
    artifact.features = result.selected;
    std::filesystem::create_directories(cfg.out_dir);
    write_selection_json(cfg.selection_path(cfg.selection.target), artifact,
                         Provenance{1, "select", cfg.seed});
    std::cout << "selected " << artifact.features.size() << " features by |correlation| with "
              << selection_target_name(cfg.selection.target) << "\n";
    return 0;
}

int cmd_split(const Cli& cli) {
    RunConfig cfg = effective_config(cli);
    require_input(cfg.runs_path());
    const RunsTable runs = read_runs_csv(cfg.runs_path());
    cfg.split.seed = stage_seed(cfg.seed, "split");
    const SplitResult split = stratified_split(runs.labels, cfg.split);

    SplitManifest manifest;
    manifest.seed = cfg.split.seed;
    manifest.train_fraction = cfg.split.train_fraction;
    manifest.test_fraction = cfg.split.test_fraction;
    manifest.holdout_fraction = cfg.split.holdout_fraction;
    const auto to_ids = [&](const std::vector<std::size_t>& rows) {
        std::vector<int64_t> ids;
        ids.reserve(rows.size());
        for (std::size_t r : rows) ids.push_back(runs.run_ids[r]);
        return ids;
    };
    manifest.train_ids = to_ids(split.train);
    manifest.test_ids = to_ids(split.test);
    manifest.holdout_ids = to_ids(split.holdout);
    std::filesystem::create_directories(cfg.out_dir);
    write_split_json(cfg.split_path(), manifest, Provenance{1, "split", cfg.seed});
    std::cout << "split " << runs.size() << " runs into " << manifest.train_ids.size() << "/"
              << manifest.test_ids.size() << "/" << manifest.holdout_ids.size()
              << " (train/test/holdout)\n";
    return 0;
}

int cmd_train(const Cli& cli) {
    RunConfig cfg = effective_config(cli);
    const Approach approach = parse_approach(cli.approach);
    require_input(cfg.runs_path());
    require_input(cfg.split_path());
    require_input(cfg.labeling_path());
    const RunsTable runs = read_runs_csv(cfg.runs_path());
    const SplitManifest manifest = read_split_json(cfg.split_path());
    const LabelingSummary labeling = read_labeling_json(cfg.labeling_path());

    const Provenance prov{1, "train", cfg.seed};
    std::filesystem::create_directories(cfg.out_dir);

    if (approach == Approach::naive) {
        std::unordered_map<int64_t, std::size_t> row_of;
        for (std::size_t i = 0; i < runs.size(); ++i) row_of[runs.run_ids[i]] = i;
        std::vector<int> labels;
        for (int64_t id : manifest.train_ids) {
            const auto it = row_of.find(id);
            if (it == row_of.end())
                throw CompatError("run " + std::to_string(id) + " is missing from the runs table");
            labels.push_back(runs.labels[it->second]);
        }
        const ModelBundle bundle = train_naive(labels, labeling);
        write_bundle_json(cfg.bundle_path(approach), bundle, prov);
        std::cout << "naive bundle: majority label " << bundle.naive_label << "\n";
        return 0;
    }

    require_input(cfg.features_path());
    const SelectionTarget wanted_target = approach == Approach::classify
                                              ? SelectionTarget::quality_class
                                              : SelectionTarget::opening_distance;
    const std::string selection_file = cfg.selection_path(wanted_target);
    require_input(selection_file);
    const SelectionArtifact selection = read_selection_json(selection_file);
    if (selection.target != wanted_target)
        throw CompatError("selection target '" + selection_target_name(selection.target) +
                          "' does not match approach '" + approach_name(approach) + "'");

    const FeatureMatrix features = read_features_csv(cfg.features_path());
    check_alignment(features, runs);
    const std::vector<std::size_t> train_rows = ids_to_rows(features, manifest.train_ids);

    std::vector<std::string> names;
    names.reserve(selection.features.size());
    for (const auto& f : selection.features) names.push_back(f.name);
    std::vector<double> data = gather_selected(features, names, train_rows);
    const RowMatrixView X{data.data(), train_rows.size(), names.size()};

    TrainOutput out;
    if (approach == Approach::classify) {
        std::vector<int> labels;
        for (std::size_t r : train_rows) labels.push_back(runs.labels[r]);
        out = train_approach_classify(X, names, labels, cfg.search, cfg.cv_folds,
                                      stage_seed(cfg.seed, "train-classify"), labeling);
    } else {
        std::vector<double> distances;
        for (std::size_t r : train_rows) distances.push_back(runs.distances[r]);
        out = train_approach_regress(X, names, distances, cfg.search, cfg.cv_folds,
                                     stage_seed(cfg.seed, "train-regress"), labeling,
                                     cfg.threshold_k);
    }
    write_bundle_json(cfg.bundle_path(approach), out.bundle, prov);
    write_trials_csv(cfg.trials_path(approach), out.trials, prov);
    std::cout << "trained " << approach_name(approach) << " (cv score " << out.bundle.cv_score
              << ", " << out.trials.size() << " draws)\n";
    return 0;
}

int cmd_evaluate(const Cli& cli) {
    RunConfig cfg = effective_config(cli);
    const Approach approach = parse_approach(cli.approach);
    const DatasetPart part = parse_dataset_part(cli.part);
    const std::string bundle_file =
        cli.bundle_path.empty() ? cfg.bundle_path(approach) : cli.bundle_path;
    require_input(bundle_file);
    require_input(cfg.runs_path());
    require_input(cfg.split_path());
    const ModelBundle bundle = read_bundle_json(bundle_file);
    const RunsTable runs = read_runs_csv(cfg.runs_path());
    const SplitManifest manifest = read_split_json(cfg.split_path());
    const std::vector<int64_t>& part_ids =
        part == DatasetPart::test ? manifest.test_ids : manifest.holdout_ids;

    std::unordered_map<int64_t, std::size_t> run_row;
    for (std::size_t i = 0; i < runs.size(); ++i) run_row[runs.run_ids[i]] = i;
    std::vector<int> truth;
    truth.reserve(part_ids.size());
    for (int64_t id : part_ids) {
        const auto it = run_row.find(id);
        if (it == run_row.end())
            throw CompatError("run " + std::to_string(id) + " is missing from the runs table");
        truth.push_back(runs.labels[it->second]);
    }

    BundlePrediction pred;
    if (bundle.approach == Approach::naive) {
        pred = bundle_predict(bundle, RowMatrixView{nullptr, part_ids.size(), 0});
    } else {
        require_input(cfg.features_path());
        const FeatureMatrix features = read_features_csv(cfg.features_path());
        const std::vector<std::size_t> rows = ids_to_rows(features, part_ids);
        std::vector<double> data = gather_selected(features, bundle.selected_features, rows);
        pred = bundle_predict(bundle,
                              RowMatrixView{data.data(), rows.size(), bundle.selected_features.size()});
    }

    EvalReport report;
    report.confusion = confusion(truth, pred.labels);
    report.rates = metrics(report.confusion);
    report.approach = approach_name(bundle.approach);
    report.dataset = dataset_part_name(part);
    report.seed = cfg.seed;

    std::filesystem::create_directories(cfg.out_dir);
    const Provenance prov{1, "evaluate", cfg.seed};
    write_report_json(cfg.report_json_path(approach, part), report, prov);
    const std::string table = render_report_table(std::span<const EvalReport>(&report, 1));
    write_text_file(cfg.report_txt_path(approach, part), table);
    std::cout << table;
    return 0;
}

int cmd_predict(const Cli& cli) {
    RunConfig cfg = effective_config(cli);
    const Approach approach = parse_approach(cli.approach);
    const std::string bundle_file =
        cli.bundle_path.empty() ? cfg.bundle_path(approach) : cli.bundle_path;
    const std::string features_file =
        cli.features_path.empty() ? cfg.features_path() : cli.features_path;
    require_input(bundle_file);
    require_input(features_file);
    const ModelBundle bundle = read_bundle_json(bundle_file);
    const FeatureMatrix features = read_features_csv(features_file);

    BundlePrediction pred;
    if (bundle.approach == Approach::naive) {
        pred = bundle_predict(bundle, RowMatrixView{nullptr, features.rows(), 0});
    } else {
        std::vector<std::size_t> rows(features.rows());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        std::vector<double> data = gather_selected(features, bundle.selected_features, rows);
        pred = bundle_predict(bundle, RowMatrixView{data.data(), features.rows(),
                                                    bundle.selected_features.size()});
    }
    const std::string out_file =
        cli.output_path.empty() ? cfg.predictions_path(bundle.approach) : cli.output_path;
    std::filesystem::create_directories(std::filesystem::path(out_file).parent_path().string());
    write_predictions_csv(out_file, features.run_ids, pred.labels, pred.scores,
                          Provenance{1, "predict", cfg.seed});
    std::cout << "wrote " << pred.labels.size() << " predictions to " << out_file << "\n";
    return 0;
}

int cmd_report(const Cli& cli) {
    std::vector<EvalReport> reports;
    for (const auto& path : cli.report_inputs) {
        require_input(path);
        reports.push_back(read_report_json(path));
    }
    const std::string table = render_report_table(reports);
    std::cout << table;
    if (!cli.output_path.empty()) write_text_file(cli.output_path, table);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    Cli cli;
    CLI::App app{"moulding quality-control pipeline"};
    app.require_subcommand(1);
    app.add_option("--config", cli.config_path, "JSON config; flags override its values");
    app.add_option("--seed", cli.seed, "global seed (stage seeds derive from it)");
    app.add_option("--jobs", cli.jobs, "worker cap for parallel kernels; never changes results");
    app.add_option("--out", cli.out_dir, "artifact directory");

    CLI::App* sim = app.add_subcommand("simulate", "sample, simulate and label runs");
    sim->add_option("--n", cli.n_runs, "number of runs");
    CLI::App* extract = app.add_subcommand("extract", "time series -> feature matrix");
    CLI::App* select = app.add_subcommand("select", "rank features by |correlation|");
    select->add_option("--target", cli.target, "opening_distance or quality_class");
    select->add_option("--k", cli.k, "number of features to keep");
    CLI::App* split = app.add_subcommand("split", "stratified train/test/holdout split");
    CLI::App* train = app.add_subcommand("train", "train a model bundle on the train part");
    train->add_option("--approach", cli.approach, "classify | regress-threshold | naive");
    train->add_option("--draws", cli.draws, "random search draws");
    CLI::App* evaluate = app.add_subcommand("evaluate", "score a bundle on a split part");
    evaluate->add_option("--approach", cli.approach, "classify | regress-threshold | naive");
    evaluate->add_option("--part", cli.part, "test | holdout");
    evaluate->add_option("--bundle", cli.bundle_path, "bundle file (default per approach)");
    CLI::App* predict = app.add_subcommand("predict", "per-run verdicts for a feature CSV");
    predict->add_option("--approach", cli.approach, "picks the default bundle file");
    predict->add_option("--bundle", cli.bundle_path, "bundle file");
    predict->add_option("--features", cli.features_path, "feature CSV");
    predict->add_option("--output", cli.output_path, "verdict CSV path");
    CLI::App* report = app.add_subcommand("report", "combine evaluation reports into one table");
    report->add_option("--in", cli.report_inputs, "report JSON files")->required();
    report->add_option("--output", cli.output_path, "also write the table to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(cli);
        if (extract->parsed()) return cmd_extract(cli);
        if (select->parsed()) return cmd_select(cli);
        if (split->parsed()) return cmd_split(cli);
        if (train->parsed()) return cmd_train(cli);
        if (evaluate->parsed()) return cmd_evaluate(cli);
        if (predict->parsed()) return cmd_predict(cli);
        if (report->parsed()) return cmd_report(cli);
    } catch (const moldqc::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const moldqc::CompatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

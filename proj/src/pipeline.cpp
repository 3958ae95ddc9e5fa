#include "moldqc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "moldqc/common.hpp"
#include "moldqc/parallel.hpp"
#include "moldqc/rng.hpp"

namespace moldqc {

namespace {

std::vector<double> gather_rows(const RowMatrixView& X, std::span<const std::size_t> rows) {
    std::vector<double> out;
    out.reserve(rows.size() * X.col_count);
    for (std::size_t r : rows) {
        const auto row = X.row(r);
        out.insert(out.end(), row.begin(), row.end());
    }
    return out;
}

std::string hp_key(const GbmHyperParams& hp) {
    std::string key = std::to_string(hp.n_estimators);
    const double vals[] = {hp.alpha, hp.lambda, hp.subsample, hp.min_child_weight};
    for (double v : vals) {
        key += '|';
        key += std::to_string(v);
    }
    key += '|' + std::to_string(hp.min_child_samples);
    key += '|' + std::to_string(hp.num_leaves);
    return key;
}

}  // namespace

Scaler fit_scaler(const RowMatrixView& X) {
    if (X.row_count == 0 || X.col_count == 0)
        throw std::invalid_argument("scaler requires a non-empty matrix");
    Scaler s;
    s.mean.assign(X.col_count, 0.0);
    s.scale.assign(X.col_count, 1.0);
    for (std::size_t c = 0; c < X.col_count; ++c) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t r = 0; r < X.row_count; ++r) {
            const double v = X.at(r, c);
            if (std::isnan(v)) continue;
            sum += v;
            ++n;
        }
        if (n == 0) continue;  // all-NaN column: identity transform
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t r = 0; r < X.row_count; ++r) {
            const double v = X.at(r, c);
            if (std::isnan(v)) continue;
            ss += (v - mean) * (v - mean);
        }
        const double std_pop = std::sqrt(ss / static_cast<double>(n));
        s.mean[c] = mean;
        s.scale[c] = std_pop > 0.0 ? std_pop : 1.0;
    }
    return s;
}

std::vector<double> transform(const Scaler& s, const RowMatrixView& X) {
    if (X.col_count != s.mean.size())
        throw std::invalid_argument("scaler feature count mismatch");
    std::vector<double> out(X.row_count * X.col_count);
    for (std::size_t r = 0; r < X.row_count; ++r)
        for (std::size_t c = 0; c < X.col_count; ++c)
            out[r * X.col_count + c] = (X.at(r, c) - s.mean[c]) / s.scale[c];
    return out;
}

int ThresholdRule::classify(double predicted_distance) const {
    return std::fabs(predicted_distance - x_bar) > k * s ? 1 : 0;
}

void SearchSpace::validate() const {
    if (n_estimators.empty() || alpha.empty() || lambda.empty() || subsample.empty() ||
        min_child_weight.empty() || min_child_samples.empty() || num_leaves.empty())
        throw std::invalid_argument("every hyperparameter candidate list must be non-empty");
    if (n_draws < 1) throw std::invalid_argument("n_draws must be at least 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0))
        throw std::invalid_argument("learning_rate must lie in (0,1]");
}

std::vector<int> assign_folds(std::span<const double> y, int k, bool stratify, uint64_t seed) {
    const std::size_t n = y.size();
    std::vector<int> fold(n, -1);
    Rng rng(seed);
    const auto chunk = [&](std::vector<std::size_t>& idx) {
        rng.shuffle(idx);
        const std::size_t base = idx.size() / static_cast<std::size_t>(k);
        const std::size_t rem = idx.size() % static_cast<std::size_t>(k);
        std::size_t pos = 0;
        for (int f = 0; f < k; ++f) {
            const std::size_t len = base + (static_cast<std::size_t>(f) < rem ? 1 : 0);
            for (std::size_t i = 0; i < len; ++i) fold[idx[pos++]] = f;
        }
    };
    if (stratify) {
        std::vector<std::size_t> members[2];
        for (std::size_t i = 0; i < n; ++i) {
            if (y[i] != 0.0 && y[i] != 1.0)
                throw std::invalid_argument("stratified folds require 0/1 targets");
            members[y[i] == 1.0 ? 1 : 0].push_back(i);
        }
        chunk(members[0]);
        chunk(members[1]);
    } else {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        chunk(idx);
    }
    return fold;
}

double log_loss(std::span<const double> y, std::span<const double> p) {
    if (y.size() != p.size()) throw std::invalid_argument("log_loss: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double pc = std::clamp(p[i], 1e-15, 1.0 - 1e-15);
        s -= y[i] * std::log(pc) + (1.0 - y[i]) * std::log(1.0 - pc);
    }
    return s / static_cast<double>(y.size());
}

double mean_absolute_error(std::span<const double> y, std::span<const double> pred) {
    if (y.size() != pred.size()) throw std::invalid_argument("mae: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += std::fabs(pred[i] - y[i]);
    return s / static_cast<double>(y.size());
}

double kfold_cv(const RowMatrixView& X, std::span<const double> y,
                std::span<const double> weights, const GbmHyperParams& hp, int k, CvScore score,
                bool stratify, uint64_t seed) {
    if (k < 2) throw std::invalid_argument("cross-validation needs k >= 2");
    if (X.row_count < static_cast<std::size_t>(k))
        throw std::invalid_argument("cross-validation needs at least k rows");
    const std::vector<int> fold = assign_folds(y, k, stratify, seed);

    double total = 0.0;
    for (int f = 0; f < k; ++f) {
        std::vector<std::size_t> train_rows, eval_rows;
        for (std::size_t i = 0; i < X.row_count; ++i)
            (fold[i] == f ? eval_rows : train_rows).push_back(i);
        if (train_rows.empty() || eval_rows.empty())
            throw std::invalid_argument("cross-validation fold is empty");

        std::vector<double> y_train, y_eval, w_train;
        for (std::size_t r : train_rows) {
            y_train.push_back(y[r]);
            w_train.push_back(weights.empty() ? 1.0 : weights[r]);
        }
        for (std::size_t r : eval_rows) y_eval.push_back(y[r]);
        if (stratify) {
            const auto has_both = [](std::span<const double> v) {
                bool h0 = false, h1 = false;
                for (double t : v) (t == 1.0 ? h1 : h0) = true;
                return h0 && h1;
            };
            if (!has_both(y_train) || !has_both(y_eval))
                throw std::invalid_argument("a stratified fold is missing a class");
        }

        std::vector<double> train_data = gather_rows(X, train_rows);
        const RowMatrixView train_view{train_data.data(), train_rows.size(), X.col_count};
        const Scaler scaler = fit_scaler(train_view);
        std::vector<double> train_scaled = transform(scaler, train_view);
        std::vector<double> eval_data = gather_rows(X, eval_rows);
        std::vector<double> eval_scaled =
            transform(scaler, RowMatrixView{eval_data.data(), eval_rows.size(), X.col_count});
        const RowMatrixView train_sview{train_scaled.data(), train_rows.size(), X.col_count};
        const RowMatrixView eval_sview{eval_scaled.data(), eval_rows.size(), X.col_count};

        const Objective objective =
            score == CvScore::log_loss ? Objective::weighted_logistic : Objective::squared;
        const GbmModel model = fit(train_sview, y_train, w_train, hp, objective,
                                   splitmix64(seed ^ static_cast<uint64_t>(f + 1)));
        if (score == CvScore::log_loss) {
            const std::vector<double> p = predict_proba(model, eval_sview);
            total += log_loss(y_eval, p);
        } else {
            const std::vector<double> pred = predict(model, eval_sview);
            total += mean_absolute_error(y_eval, pred);
        }
    }
    return total / static_cast<double>(k);
}

SearchResult random_search(const RowMatrixView& X, std::span<const double> y,
                           std::span<const double> weights, const SearchSpace& space,
                           CvScore score, int k, bool stratify, uint64_t seed) {
    space.validate();
    const uint64_t cv_seed = splitmix64(seed ^ fnv1a64("cv"));
    Rng draw_rng(splitmix64(seed ^ fnv1a64("draws")));

    SearchResult result;
    result.log.reserve(static_cast<std::size_t>(space.n_draws));
    std::unordered_map<std::string, std::size_t> unique;  // key -> unique index
    std::vector<GbmHyperParams> unique_hp;
    std::vector<std::size_t> combo_of_draw(static_cast<std::size_t>(space.n_draws));
    for (int i = 0; i < space.n_draws; ++i) {
        GbmHyperParams hp;
        hp.n_estimators = space.n_estimators[draw_rng.below(space.n_estimators.size())];
        hp.alpha = space.alpha[draw_rng.below(space.alpha.size())];
        hp.lambda = space.lambda[draw_rng.below(space.lambda.size())];
        hp.subsample = space.subsample[draw_rng.below(space.subsample.size())];
        hp.min_child_weight = space.min_child_weight[draw_rng.below(space.min_child_weight.size())];
        hp.min_child_samples = space.min_child_samples[draw_rng.below(space.min_child_samples.size())];
        hp.num_leaves = space.num_leaves[draw_rng.below(space.num_leaves.size())];
        hp.learning_rate = space.learning_rate;
        const auto [it, inserted] = unique.try_emplace(hp_key(hp), unique_hp.size());
        if (inserted) unique_hp.push_back(hp);
        combo_of_draw[static_cast<std::size_t>(i)] = it->second;
        result.log.push_back({i, hp, 0.0});
    }

    std::vector<double> unique_scores(unique_hp.size());
    parallel_for(unique_hp.size(), [&](std::size_t u) {
        unique_scores[u] = kfold_cv(X, y, weights, unique_hp[u], k, score, stratify, cv_seed);
    });

    std::size_t best_draw = 0;
    for (std::size_t i = 0; i < result.log.size(); ++i) {
        result.log[i].cv_score = unique_scores[combo_of_draw[i]];
        if (i > 0 && result.log[i].cv_score < result.log[best_draw].cv_score) best_draw = i;
    }
    result.best = result.log[best_draw].hp;
    result.best_score = result.log[best_draw].cv_score;
    return result;
}

std::string approach_name(Approach a) {
    switch (a) {
        case Approach::classify: return "classify";
        case Approach::regress_threshold: return "regress_threshold";
        case Approach::naive: return "naive";
    }
    return "unknown";
}

TrainOutput train_approach_classify(const RowMatrixView& X_train,
                                    const std::vector<std::string>& feature_names,
                                    std::span<const int> labels, const SearchSpace& space, int k,
                                    uint64_t seed, const LabelingSummary& labeling) {
    const std::size_t n = X_train.row_count;
    if (labels.size() != n) throw std::invalid_argument("label count must match the row count");
    std::size_t positives = 0;
    for (int l : labels) positives += l == 1 ? 1 : 0;
    if (positives == 0 || positives == n)
        throw std::invalid_argument("classification training requires both classes");

    // Balanced class weights: w_c = N / (2 N_c).
    const double w_pos = static_cast<double>(n) / (2.0 * static_cast<double>(positives));
    const double w_neg = static_cast<double>(n) / (2.0 * static_cast<double>(n - positives));
    std::vector<double> y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = labels[i];
        w[i] = labels[i] == 1 ? w_pos : w_neg;
    }

    const SearchResult search =
        random_search(X_train, y, w, space, CvScore::log_loss, k, /*stratify=*/true, seed);

    TrainOutput out;
    out.trials = search.log;
    out.bundle.approach = Approach::classify;
    out.bundle.selected_features = feature_names;
    out.bundle.scaler = fit_scaler(X_train);
    std::vector<double> scaled = transform(out.bundle.scaler, X_train);
    out.bundle.model = fit(RowMatrixView{scaled.data(), n, X_train.col_count}, y, w, search.best,
                           Objective::weighted_logistic, splitmix64(seed ^ fnv1a64("refit")));
    out.bundle.best_hyperparams = search.best;
    out.bundle.cv_score = search.best_score;
    out.bundle.labeling = labeling;
    return out;
}

TrainOutput train_approach_regress(const RowMatrixView& X_train,
                                   const std::vector<std::string>& feature_names,
                                   std::span<const double> distances, const SearchSpace& space,
                                   int k, uint64_t seed, const LabelingSummary& labeling,
                                   double threshold_k) {
    const std::size_t n = X_train.row_count;
    if (distances.size() != n) throw std::invalid_argument("distance count must match the row count");
    const double sample_std = vec_sample_stddev(distances);
    if (!(sample_std > 0.0))
        throw std::invalid_argument("regression training requires at least 2 distinct distances");

    const SearchResult search =
        random_search(X_train, distances, {}, space, CvScore::mae, k, /*stratify=*/false, seed);

    TrainOutput out;
    out.trials = search.log;
    out.bundle.approach = Approach::regress_threshold;
    out.bundle.selected_features = feature_names;
    out.bundle.scaler = fit_scaler(X_train);
    std::vector<double> scaled = transform(out.bundle.scaler, X_train);
    out.bundle.model = fit(RowMatrixView{scaled.data(), n, X_train.col_count}, distances, {},
                           search.best, Objective::squared, splitmix64(seed ^ fnv1a64("refit")));
    out.bundle.threshold = ThresholdRule{vec_mean(distances), sample_std, threshold_k};
    out.bundle.best_hyperparams = search.best;
    out.bundle.cv_score = search.best_score;
    out.bundle.labeling = labeling;
    return out;
}

ModelBundle train_naive(std::span<const int> labels, const LabelingSummary& labeling) {
    if (labels.empty()) throw std::invalid_argument("naive training requires labels");
    std::size_t positives = 0;
    for (int l : labels) positives += l == 1 ? 1 : 0;
    ModelBundle bundle;
    bundle.approach = Approach::naive;
    bundle.naive_label = positives * 2 > labels.size() ? 1 : 0;  // tie -> 0
    const std::size_t majority = bundle.naive_label == 1 ? positives : labels.size() - positives;
    bundle.naive_score = static_cast<double>(majority) / static_cast<double>(labels.size());
    bundle.labeling = labeling;
    return bundle;
}

std::vector<int> naive_predict(std::span<const int> train_labels, std::size_t n_test) {
    const ModelBundle b = train_naive(train_labels, LabelingSummary{});
    return std::vector<int>(n_test, b.naive_label);
}

BundlePrediction bundle_predict(const ModelBundle& bundle, const RowMatrixView& X) {
    BundlePrediction out;
    if (bundle.approach == Approach::naive) {
        out.labels.assign(X.row_count, bundle.naive_label);
        out.scores.assign(X.row_count, bundle.naive_score);
        return out;
    }
    if (X.col_count != bundle.selected_features.size())
        throw std::invalid_argument("bundle expects " +
                                    std::to_string(bundle.selected_features.size()) +
                                    " features, got " + std::to_string(X.col_count));
    std::vector<double> scaled = transform(bundle.scaler, X);
    const RowMatrixView sview{scaled.data(), X.row_count, X.col_count};
    if (bundle.approach == Approach::classify) {
        out.scores = predict_proba(*bundle.model, sview);
        out.labels.resize(X.row_count);
        for (std::size_t i = 0; i < X.row_count; ++i) out.labels[i] = out.scores[i] >= 0.5 ? 1 : 0;
    } else {
        out.scores = predict(*bundle.model, sview);
        out.labels.resize(X.row_count);
        for (std::size_t i = 0; i < X.row_count; ++i)
            out.labels[i] = bundle.threshold->classify(out.scores[i]);
    }
    return out;
}

}  // namespace moldqc

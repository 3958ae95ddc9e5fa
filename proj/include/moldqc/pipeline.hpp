#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "moldqc/gbm.hpp"
#include "moldqc/simcore.hpp"

namespace moldqc {

struct Scaler {
    std::vector<double> mean;
    std::vector<double> scale;  // zero-variance features get scale 1
};

Scaler fit_scaler(const RowMatrixView& X);
/// (x - mean) / scale per feature; NaN passes through.
std::vector<double> transform(const Scaler& s, const RowMatrixView& X);

/// Accept iff the predicted distance lies inside [x_bar - k s, x_bar + k s]
/// (closed interval; rejection is strict).
struct ThresholdRule {
    double x_bar = 0.0;
    double s = 0.0;
    double k = 2.0;

    int classify(double predicted_distance) const;
};

struct SearchSpace {
    std::vector<int> n_estimators{100, 200, 400, 800};
    std::vector<double> alpha{0.0, 0.1, 1.0, 10.0};
    std::vector<double> lambda{0.0, 0.1, 1.0, 10.0};
    std::vector<double> subsample{0.6, 0.8, 1.0};
    std::vector<double> min_child_weight{1e-3, 1.0, 5.0};
    std::vector<int> min_child_samples{5, 20, 50};
    std::vector<int> num_leaves{15, 31, 63, 127};
    int n_draws = 40;
    double learning_rate = 0.1;  // fixed, not searched

    void validate() const;
};

enum class CvScore { log_loss, mae };

/// Fold ids (0..k-1) per row from a seeded shuffle cut into k contiguous
/// chunks; stratified applies the same cut per class.
std::vector<int> assign_folds(std::span<const double> y, int k, bool stratify, uint64_t seed);

double log_loss(std::span<const double> y, std::span<const double> p);
double mean_absolute_error(std::span<const double> y, std::span<const double> pred);

/// Mean held-out score over k folds; the scaler is refit inside every fold.
double kfold_cv(const RowMatrixView& X, std::span<const double> y,
                std::span<const double> weights, const GbmHyperParams& hp, int k, CvScore score,
                bool stratify, uint64_t seed);

struct TrialRecord {
    int draw_index = 0;
    GbmHyperParams hp;
    double cv_score = 0.0;
};

struct SearchResult {
    GbmHyperParams best;
    double best_score = 0.0;
    std::vector<TrialRecord> log;  // in draw order, one entry per draw
};

/// Seeded independent draws (one value per candidate list). Duplicate
/// combinations are evaluated once and logged per draw; ties on the score
/// go to the earlier draw.
SearchResult random_search(const RowMatrixView& X, std::span<const double> y,
                           std::span<const double> weights, const SearchSpace& space,
                           CvScore score, int k, bool stratify, uint64_t seed);

enum class Approach { classify, regress_threshold, naive };

std::string approach_name(Approach a);

struct ModelBundle {
    int format_version = 1;
    Approach approach = Approach::naive;
    std::vector<std::string> selected_features;
    Scaler scaler;
    std::optional<GbmModel> model;
    std::optional<ThresholdRule> threshold;
    std::optional<LabelingSummary> labeling;
    std::optional<GbmHyperParams> best_hyperparams;
    double cv_score = 0.0;
    int naive_label = 0;
    double naive_score = 0.0;  // majority fraction in training labels
};

struct TrainOutput {
    ModelBundle bundle;
    std::vector<TrialRecord> trials;
};

/// Direct classification with balanced class weights w_c = N / (2 N_c);
/// log-loss randomized search with stratified folds, then a refit on the
/// full training set.
TrainOutput train_approach_classify(const RowMatrixView& X_train,
                                    const std::vector<std::string>& feature_names,
                                    std::span<const int> labels, const SearchSpace& space, int k,
                                    uint64_t seed, const LabelingSummary& labeling);

/// Distance regression (MAE search, unstratified folds) plus the
/// training-set interval rule x_bar +- k s (s is the sample standard
/// deviation).
TrainOutput train_approach_regress(const RowMatrixView& X_train,
                                   const std::vector<std::string>& feature_names,
                                   std::span<const double> distances, const SearchSpace& space,
                                   int k, uint64_t seed, const LabelingSummary& labeling,
                                   double threshold_k = 2.0);

ModelBundle train_naive(std::span<const int> labels, const LabelingSummary& labeling);

/// Majority-class constant prediction; ties predict 0.
std::vector<int> naive_predict(std::span<const int> train_labels, std::size_t n_test);

struct BundlePrediction {
    std::vector<int> labels;
    /// classify: probability; regress_threshold: predicted distance;
    /// naive: training majority fraction.
    std::vector<double> scores;
};

/// X holds raw (unscaled) values of exactly the bundle's selected
/// features, in bundle order.
BundlePrediction bundle_predict(const ModelBundle& bundle, const RowMatrixView& X);

}  // namespace moldqc

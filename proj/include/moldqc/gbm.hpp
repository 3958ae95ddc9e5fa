#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace moldqc {

/// Row-major matrix view; NaN entries are allowed and routed through
/// the trees' stored default directions.
struct RowMatrixView {
    const double* data = nullptr;
    std::size_t row_count = 0;
    std::size_t col_count = 0;

    std::span<const double> row(std::size_t r) const {
        return {data + r * col_count, col_count};
    }
    double at(std::size_t r, std::size_t c) const { return data[r * col_count + c]; }
};

struct GbmHyperParams {
    int n_estimators = 100;
    double alpha = 0.0;             // L1 on leaf values
    double lambda = 0.0;            // L2 on leaf values
    double subsample = 1.0;         // row fraction per boosting round
    double min_child_weight = 1e-3; // minimum hessian sum per child
    int min_child_samples = 1;
    int num_leaves = 31;
    double learning_rate = 0.1;

    void validate() const;
};

enum class Objective { weighted_logistic, squared };

struct TreeNode {
    bool is_leaf = true;
    double value = 0.0;      // leaf output, learning rate already applied
    int feature = -1;
    double threshold = 0.0;  // go left iff x <= threshold
    bool default_left = true;
    int left = -1;
    int right = -1;
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict_row(std::span<const double> x) const;
    int leaf_count() const;
};

struct GbmModel {
    Objective objective = Objective::squared;
    double base_score = 0.0;
    std::size_t feature_count = 0;
    std::vector<Tree> trees;
};

struct GradHess {
    double g = 0.0;
    double h = 0.0;
};

GradHess loss_grad_hess(Objective objective, double prediction, double target, double weight);

/// Regularized Newton step: soft-thresholds the gradient sum by alpha,
/// damps by lambda.
double leaf_value(double grad_sum, double hess_sum, double alpha, double lambda);

struct SplitCandidate {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    bool default_left = true;
};

/// Exhaustive scan over every feature and every midpoint between
/// consecutive distinct member values. Empty when no split has positive
/// gain under the child constraints.
std::optional<SplitCandidate> best_split(const std::vector<std::vector<double>>& columns,
                                         std::span<const double> g, std::span<const double> h,
                                         std::span<const std::size_t> members,
                                         const GbmHyperParams& hp);

/// Boosts `hp.n_estimators` leaf-wise trees. Deterministic for a given
/// seed; the split search parallelizes over features with a serial
/// arg-max reduction, so results do not depend on the worker count.
/// `train_loss_out`, when given, receives the training loss after every
/// round (MSE for squared, weighted log loss for logistic).
GbmModel fit(const RowMatrixView& X, std::span<const double> y, std::span<const double> weights,
             const GbmHyperParams& hp, Objective objective, uint64_t seed,
             std::vector<double>* train_loss_out = nullptr);

std::vector<double> predict(const GbmModel& model, const RowMatrixView& X);
std::vector<double> predict_proba(const GbmModel& model, const RowMatrixView& X);

double sigmoid(double score);

}  // namespace moldqc

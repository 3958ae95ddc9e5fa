#include "moldqc/gbm.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "moldqc/common.hpp"
#include "moldqc/parallel.hpp"
#include "moldqc/rng.hpp"

namespace moldqc {

namespace {

constexpr double kProbClamp = 1e-12;

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

double split_score(double g, double h, double alpha, double lambda) {
    const double a = std::max(std::fabs(g) - alpha, 0.0);
    return 0.5 * a * a / (h + lambda);
}

struct FeatureBest {
    double gain = 0.0;
    double threshold = 0.0;
    double h_left = 0.0;
    double h_right = 0.0;
    bool valid = false;
};

/// Candidate scan over one node's values and gradients, pre-sorted by
/// (value, row). Thresholds sit at midpoints between consecutive distinct
/// values; the first occurrence of the best gain wins, so equal gains
/// resolve to the lowest threshold. The UnitH variant serves the squared
/// objective, where every hessian is exactly 1: child hessian sums become
/// child counts and the divisions collapse into a reciprocal table.
template <bool UnitH>
FeatureBest scan_block(const double* vv, const double* gv, const double* hv, std::size_t count,
                       double g_total, double h_total, const GbmHyperParams& hp,
                       const double* inv_table) {
    FeatureBest best;
    const auto mcs = static_cast<std::size_t>(hp.min_child_samples);
    if (count < 2 * mcs || count < 2) return best;
    const double alpha = hp.alpha;
    const double lambda = hp.lambda;
    const double mcw = hp.min_child_weight;
    const double parent = split_score(g_total, h_total, alpha, lambda);

    std::size_t lo = mcs - 1;  // left child reaches min_child_samples here
    std::size_t hi = count - mcs;
    if constexpr (UnitH) {
        // hessian sum == count, so min_child_weight is an index bound too
        const auto mcw_count = static_cast<std::size_t>(std::ceil(mcw));
        if (mcw_count > 0) {
            lo = std::max(lo, mcw_count - 1);
            hi = std::min(hi, count - mcw_count);
        }
        if (hi == SIZE_MAX || lo >= count) return best;
    }

    double gl = 0.0;
    double hl = 0.0;
    for (std::size_t i = 0; i < lo; ++i) {
        gl += gv[i];
        if constexpr (!UnitH) hl += hv[i];
    }
    double best_gain = 0.0;
    std::size_t best_i = SIZE_MAX;
    double best_hl = 0.0;
    if constexpr (UnitH) {
        for (std::size_t i = lo; i < hi; ++i) {
            gl += gv[i];
            if (!(vv[i + 1] > vv[i])) continue;
            const double la = std::fabs(gl) - alpha;
            const double ra = std::fabs(g_total - gl) - alpha;
            const double lc = la > 0.0 ? la : 0.0;
            const double rc = ra > 0.0 ? ra : 0.0;
            const double gain =
                0.5 * (lc * lc * inv_table[i + 1] + rc * rc * inv_table[count - i - 1]) - parent;
            if (gain > best_gain) {
                best_gain = gain;
                best_i = i;
            }
        }
        if (best_i != SIZE_MAX) best_hl = static_cast<double>(best_i + 1);
    } else {
        for (std::size_t i = lo; i < hi; ++i) {
            gl += gv[i];
            hl += hv[i];
            if (!(vv[i + 1] > vv[i])) continue;
            const double hr = h_total - hl;
            if (hl < mcw || hr < mcw) continue;
            const double la = std::fabs(gl) - alpha;
            const double ra = std::fabs(g_total - gl) - alpha;
            const double lc = la > 0.0 ? la : 0.0;
            const double rc = ra > 0.0 ? ra : 0.0;
            const double gain =
                0.5 * lc * lc / (hl + lambda) + 0.5 * rc * rc / (hr + lambda) - parent;
            if (gain > best_gain) {
                best_gain = gain;
                best_i = i;
                best_hl = hl;
            }
        }
    }
    if (best_i == SIZE_MAX) return best;
    best.valid = true;
    best.gain = best_gain;
    double thr = vv[best_i] + 0.5 * (vv[best_i + 1] - vv[best_i]);
    if (!(thr < vv[best_i + 1])) thr = vv[best_i];  // adjacent representable values
    best.threshold = thr;
    best.h_left = best_hl;
    best.h_right = h_total - best_hl;
    return best;
}

/// Per-node storage: members plus, per feature, the node's non-NaN rows
/// in (value, row) order stored as parallel arrays (row ids, values,
/// gradients, hessians). Children reuse these via routed copies, so the
/// split scans never chase indices.
struct NodeWork {
    std::vector<int32_t> members;  // ascending rows
    std::size_t stride = 0;        // allocation stride per feature
    std::unique_ptr<int32_t[]> idx;
    std::unique_ptr<double[]> vv;
    std::unique_ptr<double[]> gv;
    std::unique_ptr<double[]> hv;  // absent for the unit-hessian objective
    std::vector<int32_t> list_len;
    std::vector<double> g_tot_f, h_tot_f;  // only for features with NaNs
    double g_sum = 0.0, h_sum = 0.0;
    int tree_node = 0;
    int birth = 0;
    std::optional<SplitCandidate> split;

    void alloc(std::size_t f_count, std::size_t count, bool with_h) {
        stride = count + 1;  // +1 pad for the branchless partition writes
        idx = std::make_unique_for_overwrite<int32_t[]>(f_count * stride);
        vv = std::make_unique_for_overwrite<double[]>(f_count * stride);
        gv = std::make_unique_for_overwrite<double[]>(f_count * stride);
        if (with_h) hv = std::make_unique_for_overwrite<double[]>(f_count * stride);
        list_len.assign(f_count, 0);
    }
    void release() {
        idx.reset();
        vv.reset();
        gv.reset();
        hv.reset();
        members.clear();
        members.shrink_to_fit();
    }
};

struct FitContext {
    std::size_t n_rows = 0;
    std::size_t n_features = 0;
    bool unit_hessian = false;
    std::vector<std::vector<double>> columns;
    std::vector<std::vector<int32_t>> full_sorted;  // per feature, non-NaN rows by (value, row)
    std::vector<uint8_t> feature_has_nan;
    bool any_nan = false;
    std::vector<uint8_t> side;       // partition scratch
    std::vector<double> inv_table;   // 1/(count + lambda) for the unit-hessian scan
    std::vector<FeatureBest> bests;  // reused per split search
};

/// Split search over a node's per-feature blocks.
void node_best_split(FitContext& ctx, NodeWork& node, const GbmHyperParams& hp) {
    node.split.reset();
    if (node.members.size() < 2 * static_cast<std::size_t>(hp.min_child_samples)) return;

    const std::size_t f_count = ctx.n_features;
    FeatureBest* bests = ctx.bests.data();
    const double* inv = ctx.inv_table.data();
    parallel_for(f_count, [&](std::size_t f) {
        const double gt = ctx.feature_has_nan[f] ? node.g_tot_f[f] : node.g_sum;
        const double ht = ctx.feature_has_nan[f] ? node.h_tot_f[f] : node.h_sum;
        const auto len = static_cast<std::size_t>(node.list_len[f]);
        const std::size_t off = f * node.stride;
        if (ctx.unit_hessian)
            bests[f] = scan_block<true>(node.vv.get() + off, node.gv.get() + off, nullptr, len, gt,
                                        ht, hp, inv);
        else
            bests[f] = scan_block<false>(node.vv.get() + off, node.gv.get() + off,
                                         node.hv.get() + off, len, gt, ht, hp, nullptr);
    });
    for (std::size_t f = 0; f < f_count; ++f) {
        const FeatureBest& b = bests[f];
        if (!b.valid) continue;
        if (!node.split || b.gain > node.split->gain) {
            node.split =
                SplitCandidate{static_cast<int>(f), b.threshold, b.gain, b.h_left >= b.h_right};
        }
    }
}

/// Routes a node's members and per-feature blocks into two children,
/// preserving sort order. Rows whose split-feature value is NaN follow
/// the stored default direction.
void partition_node(FitContext& ctx, const std::vector<double>& g, const std::vector<double>& h,
                    const NodeWork& parent, NodeWork& left, NodeWork& right) {
    const SplitCandidate& sp = *parent.split;
    const auto split_f = static_cast<std::size_t>(sp.feature);
    const uint8_t default_side = sp.default_left ? 1 : 0;
    uint8_t* side = ctx.side.data();
    for (int32_t row : parent.members) side[static_cast<std::size_t>(row)] = default_side;
    {
        const int32_t* pidx = parent.idx.get() + split_f * parent.stride;
        const double* pvv = parent.vv.get() + split_f * parent.stride;
        const auto len = static_cast<std::size_t>(parent.list_len[split_f]);
        const double thr = sp.threshold;
        for (std::size_t i = 0; i < len; ++i)
            side[static_cast<std::size_t>(pidx[i])] = pvv[i] <= thr ? 1 : 0;
    }

    std::size_t nl = 0;
    for (int32_t row : parent.members) nl += side[static_cast<std::size_t>(row)];
    const std::size_t nr = parent.members.size() - nl;

    const std::size_t f_count = ctx.n_features;
    const bool with_h = !ctx.unit_hessian;
    left.members.reserve(nl);
    right.members.reserve(nr);
    for (int32_t row : parent.members) {
        if (side[static_cast<std::size_t>(row)]) {
            left.members.push_back(row);
            left.g_sum += g[row];
            left.h_sum += h[row];
        } else {
            right.members.push_back(row);
            right.g_sum += g[row];
            right.h_sum += h[row];
        }
    }
    left.alloc(f_count, nl, with_h);
    right.alloc(f_count, nr, with_h);
    if (ctx.any_nan) {
        left.g_tot_f.assign(f_count, 0.0);
        left.h_tot_f.assign(f_count, 0.0);
        right.g_tot_f.assign(f_count, 0.0);
        right.h_tot_f.assign(f_count, 0.0);
    }

    parallel_for(f_count, [&](std::size_t f) {
        const std::size_t poff = f * parent.stride;
        const int32_t* pidx = parent.idx.get() + poff;
        const double* pvv = parent.vv.get() + poff;
        const double* pgv = parent.gv.get() + poff;
        const double* phv = with_h ? parent.hv.get() + poff : nullptr;
        const auto len = static_cast<std::size_t>(parent.list_len[f]);
        const std::size_t loff = f * left.stride;
        const std::size_t roff = f * right.stride;
        int32_t* lidx = left.idx.get() + loff;
        int32_t* ridx = right.idx.get() + roff;
        double* lvv = left.vv.get() + loff;
        double* rvv = right.vv.get() + roff;
        double* lgv = left.gv.get() + loff;
        double* rgv = right.gv.get() + roff;
        double* lhv = with_h ? left.hv.get() + loff : nullptr;
        double* rhv = with_h ? right.hv.get() + roff : nullptr;

        std::size_t cl = 0, cr = 0;
        if (ctx.feature_has_nan[f]) {
            double gl_t = 0.0, hl_t = 0.0, gr_t = 0.0, hr_t = 0.0;
            for (std::size_t i = 0; i < len; ++i) {
                const int32_t row = pidx[i];
                const uint8_t s = side[static_cast<std::size_t>(row)];
                if (s) {
                    lidx[cl] = row;
                    lvv[cl] = pvv[i];
                    lgv[cl] = pgv[i];
                    if (with_h) lhv[cl] = phv[i];
                    gl_t += pgv[i];
                    hl_t += with_h ? phv[i] : 1.0;
                    ++cl;
                } else {
                    ridx[cr] = row;
                    rvv[cr] = pvv[i];
                    rgv[cr] = pgv[i];
                    if (with_h) rhv[cr] = phv[i];
                    gr_t += pgv[i];
                    hr_t += with_h ? phv[i] : 1.0;
                    ++cr;
                }
            }
            left.g_tot_f[f] = gl_t;
            left.h_tot_f[f] = hl_t;
            right.g_tot_f[f] = gr_t;
            right.h_tot_f[f] = hr_t;
        } else if (with_h) {
            for (std::size_t i = 0; i < len; ++i) {
                const int32_t row = pidx[i];
                const uint8_t s = side[static_cast<std::size_t>(row)];
                lidx[cl] = row;
                lvv[cl] = pvv[i];
                lgv[cl] = pgv[i];
                lhv[cl] = phv[i];
                ridx[cr] = row;
                rvv[cr] = pvv[i];
                rgv[cr] = pgv[i];
                rhv[cr] = phv[i];
                cl += s;
                cr += 1 - s;
            }
        } else {
            for (std::size_t i = 0; i < len; ++i) {
                const int32_t row = pidx[i];
                const uint8_t s = side[static_cast<std::size_t>(row)];
                lidx[cl] = row;
                lvv[cl] = pvv[i];
                lgv[cl] = pgv[i];
                ridx[cr] = row;
                rvv[cr] = pvv[i];
                rgv[cr] = pgv[i];
                cl += s;
                cr += 1 - s;
            }
        }
        left.list_len[f] = static_cast<int32_t>(cl);
        right.list_len[f] = static_cast<int32_t>(cr);
    });
}

double training_loss(Objective objective, std::span<const double> scores,
                     std::span<const double> y, std::span<const double> w) {
    const std::size_t n = y.size();
    if (objective == Objective::squared) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = scores[i] - y[i];
            s += d * d;
        }
        return s / static_cast<double>(n);
    }
    double s = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = std::clamp(sigmoid(scores[i]), 1e-15, 1.0 - 1e-15);
        s += w[i] * -(y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p));
        wsum += w[i];
    }
    return s / wsum;
}

}  // namespace

void GbmHyperParams::validate() const {
    if (n_estimators < 0) throw std::invalid_argument("n_estimators must be non-negative");
    if (alpha < 0.0 || lambda < 0.0)
        throw std::invalid_argument("alpha and lambda must be non-negative");
    if (!(subsample > 0.0 && subsample <= 1.0))
        throw std::invalid_argument("subsample must lie in (0,1]");
    if (min_child_weight < 0.0) throw std::invalid_argument("min_child_weight must be non-negative");
    if (min_child_samples < 1) throw std::invalid_argument("min_child_samples must be at least 1");
    if (num_leaves < 2) throw std::invalid_argument("num_leaves must be at least 2");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0))
        throw std::invalid_argument("learning_rate must lie in (0,1]");
}

double sigmoid(double score) { return 1.0 / (1.0 + std::exp(-score)); }

GradHess loss_grad_hess(Objective objective, double prediction, double target, double weight) {
    if (!(weight > 0.0)) throw std::invalid_argument("weight must be positive");
    if (objective == Objective::weighted_logistic) {
        if (target != 0.0 && target != 1.0)
            throw std::invalid_argument("logistic target must be 0 or 1");
        const double p = clamp_prob(sigmoid(prediction));
        return {weight * (p - target), weight * p * (1.0 - p)};
    }
    return {prediction - target, 1.0};
}

double leaf_value(double grad_sum, double hess_sum, double alpha, double lambda) {
    if (!(hess_sum + lambda > 0.0))
        throw std::invalid_argument("leaf value undefined: hessian sum plus lambda must be positive");
    const double magnitude = std::max(std::fabs(grad_sum) - alpha, 0.0);
    if (magnitude == 0.0) return 0.0;
    const double w = magnitude / (hess_sum + lambda);
    return grad_sum > 0.0 ? -w : w;
}

double Tree::predict_row(std::span<const double> x) const {
    int i = 0;
    while (!nodes[i].is_leaf) {
        const TreeNode& n = nodes[i];
        const double v = x[n.feature];
        if (std::isnan(v))
            i = n.default_left ? n.left : n.right;
        else
            i = v <= n.threshold ? n.left : n.right;
    }
    return nodes[i].value;
}

int Tree::leaf_count() const {
    int k = 0;
    for (const auto& n : nodes) k += n.is_leaf ? 1 : 0;
    return k;
}

std::optional<SplitCandidate> best_split(const std::vector<std::vector<double>>& columns,
                                         std::span<const double> g, std::span<const double> h,
                                         std::span<const std::size_t> members,
                                         const GbmHyperParams& hp) {
    hp.validate();
    const std::size_t f_count = columns.size();
    std::vector<FeatureBest> bests(f_count);
    parallel_for(f_count, [&](std::size_t f) {
        const std::vector<double>& col = columns[f];
        std::vector<int32_t> idx;
        idx.reserve(members.size());
        double gt = 0.0, ht = 0.0;
        for (std::size_t m : members) {
            if (std::isnan(col[m])) continue;
            idx.push_back(static_cast<int32_t>(m));
            gt += g[m];
            ht += h[m];
        }
        std::sort(idx.begin(), idx.end(), [&](int32_t a, int32_t b) {
            if (col[a] != col[b]) return col[a] < col[b];
            return a < b;
        });
        std::vector<double> vv(idx.size()), gvv(idx.size()), hvv(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            vv[i] = col[idx[i]];
            gvv[i] = g[idx[i]];
            hvv[i] = h[idx[i]];
        }
        bests[f] = scan_block<false>(vv.data(), gvv.data(), hvv.data(), idx.size(), gt, ht, hp,
                                     nullptr);
    });

    std::optional<SplitCandidate> best;
    for (std::size_t f = 0; f < f_count; ++f) {
        const FeatureBest& b = bests[f];
        if (!b.valid) continue;
        if (!best || b.gain > best->gain) {
            best = SplitCandidate{static_cast<int>(f), b.threshold, b.gain, b.h_left >= b.h_right};
        }
    }
    return best;
}

GbmModel fit(const RowMatrixView& X, std::span<const double> y, std::span<const double> weights,
             const GbmHyperParams& hp, Objective objective, uint64_t seed,
             std::vector<double>* train_loss_out) {
    hp.validate();
    const std::size_t n = X.row_count;
    const std::size_t f_count = X.col_count;
    if (n == 0 || f_count == 0) throw std::invalid_argument("fit requires a non-empty matrix");
    if (y.size() != n) throw std::invalid_argument("target length must match the row count");

    std::vector<double> w_storage;
    if (weights.empty()) {
        w_storage.assign(n, 1.0);
        weights = w_storage;
    }
    if (weights.size() != n) throw std::invalid_argument("weight length must match the row count");
    for (double wv : weights)
        if (!(wv > 0.0) || !std::isfinite(wv))
            throw std::invalid_argument("weights must be positive and finite");

    if (objective == Objective::weighted_logistic) {
        bool has0 = false, has1 = false;
        for (double t : y) {
            if (t == 0.0)
                has0 = true;
            else if (t == 1.0)
                has1 = true;
            else
                throw std::invalid_argument("logistic targets must be 0 or 1");
        }
        if (!has0 || !has1)
            throw std::invalid_argument("logistic fit requires both classes in the target");
    } else {
        for (double t : y)
            if (!std::isfinite(t)) throw std::invalid_argument("regression targets must be finite");
    }

    FitContext ctx;
    ctx.n_rows = n;
    ctx.n_features = f_count;
    ctx.unit_hessian = objective == Objective::squared;
    ctx.columns.assign(f_count, {});
    ctx.feature_has_nan.assign(f_count, 0);
    for (std::size_t f = 0; f < f_count; ++f) {
        auto& col = ctx.columns[f];
        col.resize(n);
        for (std::size_t r = 0; r < n; ++r) {
            const double v = X.at(r, f);
            if (std::isinf(v)) throw std::invalid_argument("features must be finite or NaN");
            col[r] = v;
            if (std::isnan(v)) ctx.feature_has_nan[f] = 1;
        }
        ctx.any_nan = ctx.any_nan || ctx.feature_has_nan[f];
    }
    ctx.full_sorted.assign(f_count, {});
    parallel_for(f_count, [&](std::size_t f) {
        auto& order = ctx.full_sorted[f];
        const auto& col = ctx.columns[f];
        order.reserve(n);
        for (std::size_t r = 0; r < n; ++r)
            if (!std::isnan(col[r])) order.push_back(static_cast<int32_t>(r));
        std::sort(order.begin(), order.end(), [&](int32_t a, int32_t b) {
            if (col[a] != col[b]) return col[a] < col[b];
            return a < b;
        });
    });
    ctx.side.assign(n, 0);
    ctx.bests.resize(f_count);
    if (ctx.unit_hessian) {
        ctx.inv_table.resize(n + 1);
        for (std::size_t c = 0; c <= n; ++c)
            ctx.inv_table[c] = 1.0 / (static_cast<double>(c) + hp.lambda);
    }

    GbmModel model;
    model.objective = objective;
    model.feature_count = f_count;

    double wsum = 0.0, wysum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        wsum += weights[i];
        wysum += weights[i] * y[i];
    }
    if (objective == Objective::weighted_logistic) {
        const double p = clamp_prob(wysum / wsum);
        model.base_score = std::log(p / (1.0 - p));
    } else {
        model.base_score = wysum / wsum;
    }

    std::vector<double> scores(n, model.base_score);
    std::vector<double> g(n, 0.0), h(n, 0.0);
    const auto n_sub = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(hp.subsample * static_cast<double>(n))));
    const uint64_t fit_seed = splitmix64(seed);

    if (train_loss_out) train_loss_out->clear();
    model.trees.reserve(static_cast<std::size_t>(hp.n_estimators));

    std::vector<int32_t> bag;
    std::vector<uint8_t> in_bag(n, 0);
    for (int t = 0; t < hp.n_estimators; ++t) {
        bag.clear();
        if (n_sub == n) {
            bag.resize(n);
            std::iota(bag.begin(), bag.end(), 0);
        } else {
            std::vector<int32_t> pool(n);
            std::iota(pool.begin(), pool.end(), 0);
            Rng rng(splitmix64(fit_seed ^ static_cast<uint64_t>(t + 1)));
            for (std::size_t i = 0; i < n_sub; ++i) {
                const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
                std::swap(pool[i], pool[j]);
            }
            bag.assign(pool.begin(), pool.begin() + static_cast<long>(n_sub));
            std::sort(bag.begin(), bag.end());
        }

        for (int32_t r : bag) {
            const GradHess gh = loss_grad_hess(objective, scores[r], y[r], weights[r]);
            g[r] = gh.g;
            h[r] = gh.h;
        }

        std::vector<NodeWork> frontier;
        frontier.reserve(static_cast<std::size_t>(hp.num_leaves));
        {
            NodeWork root;
            root.members = bag;
            root.alloc(f_count, bag.size(), !ctx.unit_hessian);
            if (ctx.any_nan) {
                root.g_tot_f.assign(f_count, 0.0);
                root.h_tot_f.assign(f_count, 0.0);
            }
            const bool full_bag = n_sub == n;
            if (!full_bag) {
                std::fill(in_bag.begin(), in_bag.end(), 0);
                for (int32_t r : bag) in_bag[static_cast<std::size_t>(r)] = 1;
            }
            parallel_for(f_count, [&](std::size_t f) {
                const auto& order = ctx.full_sorted[f];
                const double* col = ctx.columns[f].data();
                const std::size_t off = f * root.stride;
                int32_t* didx = root.idx.get() + off;
                double* dvv = root.vv.get() + off;
                double* dgv = root.gv.get() + off;
                double* dhv = ctx.unit_hessian ? nullptr : root.hv.get() + off;
                std::size_t len = 0;
                double gt = 0.0, ht = 0.0;
                for (int32_t r : order) {
                    if (!full_bag && !in_bag[static_cast<std::size_t>(r)]) continue;
                    didx[len] = r;
                    dvv[len] = col[r];
                    dgv[len] = g[r];
                    if (dhv) dhv[len] = h[r];
                    ++len;
                }
                root.list_len[f] = static_cast<int32_t>(len);
                if (ctx.feature_has_nan[f]) {
                    for (std::size_t i = 0; i < len; ++i) {
                        gt += dgv[i];
                        ht += dhv ? dhv[i] : 1.0;
                    }
                    root.g_tot_f[f] = gt;
                    root.h_tot_f[f] = ht;
                }
            });
            for (int32_t r : bag) {
                root.g_sum += g[r];
                root.h_sum += h[r];
            }
            root.tree_node = 0;
            root.birth = 0;
            node_best_split(ctx, root, hp);
            frontier.push_back(std::move(root));
        }

        Tree tree;
        tree.nodes.push_back(TreeNode{});
        int leaf_count = 1;
        int birth_counter = 1;
        while (leaf_count < hp.num_leaves) {
            int pick = -1;
            for (std::size_t i = 0; i < frontier.size(); ++i) {
                if (!frontier[i].split) continue;
                if (pick < 0 || frontier[i].split->gain > frontier[pick].split->gain ||
                    (frontier[i].split->gain == frontier[pick].split->gain &&
                     frontier[i].birth < frontier[pick].birth))
                    pick = static_cast<int>(i);
            }
            if (pick < 0) break;

            NodeWork parent = std::move(frontier[static_cast<std::size_t>(pick)]);
            frontier.erase(frontier.begin() + pick);

            NodeWork left, right;
            partition_node(ctx, g, h, parent, left, right);
            parent.release();

            TreeNode& split_node = tree.nodes[static_cast<std::size_t>(parent.tree_node)];
            split_node.is_leaf = false;
            split_node.feature = parent.split->feature;
            split_node.threshold = parent.split->threshold;
            split_node.default_left = parent.split->default_left;
            split_node.left = static_cast<int>(tree.nodes.size());
            split_node.right = static_cast<int>(tree.nodes.size() + 1);
            left.tree_node = split_node.left;
            right.tree_node = split_node.right;
            left.birth = birth_counter++;
            right.birth = birth_counter++;
            tree.nodes.push_back(TreeNode{});
            tree.nodes.push_back(TreeNode{});
            ++leaf_count;

            node_best_split(ctx, left, hp);
            node_best_split(ctx, right, hp);
            frontier.push_back(std::move(left));
            frontier.push_back(std::move(right));
        }

        for (const NodeWork& leaf : frontier) {
            tree.nodes[static_cast<std::size_t>(leaf.tree_node)].value =
                hp.learning_rate * leaf_value(leaf.g_sum, leaf.h_sum, hp.alpha, hp.lambda);
        }

        for (std::size_t r = 0; r < n; ++r) scores[r] += tree.predict_row(X.row(r));
        model.trees.push_back(std::move(tree));
        if (train_loss_out)
            train_loss_out->push_back(training_loss(objective, scores, y, weights));
    }
    return model;
}

std::vector<double> predict(const GbmModel& model, const RowMatrixView& X) {
    if (X.col_count != model.feature_count)
        throw std::invalid_argument("prediction matrix has " + std::to_string(X.col_count) +
                                    " columns, model expects " +
                                    std::to_string(model.feature_count));
    std::vector<double> out(X.row_count, model.base_score);
    for (const Tree& tree : model.trees)
        for (std::size_t r = 0; r < X.row_count; ++r) out[r] += tree.predict_row(X.row(r));
    return out;
}

std::vector<double> predict_proba(const GbmModel& model, const RowMatrixView& X) {
    if (model.objective != Objective::weighted_logistic)
        throw std::invalid_argument("predict_proba requires a logistic model");
    std::vector<double> out = predict(model, X);
    for (double& v : out) v = sigmoid(v);
    return out;
}

}  // namespace moldqc

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

#include "rstar/chain.hpp"
#include "rstar/rng.hpp"

namespace rstar {

enum class SplitCriterion { gini, squared_error };

struct TreeConfig {
    int max_splits = 3;  // number of internal split nodes (best-first growth budget)
    int min_node = 1;    // minimum rows per terminal node
    SplitCriterion criterion = SplitCriterion::gini;
};

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // go left iff x[feature] <= threshold
    std::int32_t left = -1;     // right child is left + 1
    double improvement = 0.0;   // internal nodes: impurity / squared-error reduction
    double value = 0.0;         // regression leaves
    std::uint32_t hist_begin = 0, hist_end = 0;  // classification leaves: slice into leaf_hist
};

struct LeafCount {
    std::int32_t cls;
    std::uint32_t count;
};

// Binary decision tree. Classification leaves carry a sparse class histogram,
// regression leaves a real value. Internal nodes always have two children,
// allocated as a consecutive pair.
class DecisionTree {
  public:
    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const std::vector<LeafCount>& leaf_hist() const { return leaf_hist_; }

    int find_leaf(const double* x) const {
        return find_leaf_by([&](int f) { return x[f]; });
    }

    /// Traversal with an arbitrary feature accessor (for column-major stores).
    template <class FeatureAt>
    int find_leaf_by(FeatureAt&& feature_at) const {
        int id = 0;
        while (nodes_[id].feature >= 0) {
            const auto& nd = nodes_[id];
            id = (feature_at(nd.feature) <= nd.threshold) ? nd.left : nd.left + 1;
        }
        return id;
    }

    double predict_value(const double* x) const { return nodes_[find_leaf(x)].value; }

    /// Majority class of the reached leaf; ties go to the lowest class index.
    int vote(const double* x) const { return leaf_majority(find_leaf(x)); }

    template <class FeatureAt>
    int vote_by(FeatureAt&& feature_at) const {
        return leaf_majority(find_leaf_by(feature_at));
    }

    int leaf_majority(int leaf_id) const {
        const auto& nd = nodes_[leaf_id];
        std::uint32_t best_count = 0;
        std::int32_t best_cls = 0;
        for (std::uint32_t i = nd.hist_begin; i < nd.hist_end; ++i) {
            if (leaf_hist_[i].count > best_count) {  // hist is ascending in class, so first max wins
                best_count = leaf_hist_[i].count;
                best_cls = leaf_hist_[i].cls;
            }
        }
        return best_cls;
    }

    int n_internal() const {
        int c = 0;
        for (const auto& nd : nodes_) c += nd.feature >= 0;
        return c;
    }
    int n_leaves() const { return static_cast<int>(nodes_.size()) - n_internal(); }

    /// Accumulate per-feature sums of split improvements.
    void add_importance(std::span<double> acc) const {
        for (const auto& nd : nodes_)
            if (nd.feature >= 0) acc[nd.feature] += nd.improvement;
    }

    bool operator==(const DecisionTree& other) const {
        if (nodes_.size() != other.nodes_.size() || leaf_hist_.size() != other.leaf_hist_.size()) return false;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const auto &a = nodes_[i], &b = other.nodes_[i];
            if (a.feature != b.feature || a.threshold != b.threshold || a.left != b.left || a.value != b.value ||
                a.hist_begin != b.hist_begin || a.hist_end != b.hist_end)
                return false;
        }
        for (std::size_t i = 0; i < leaf_hist_.size(); ++i)
            if (leaf_hist_[i].cls != other.leaf_hist_[i].cls || leaf_hist_[i].count != other.leaf_hist_[i].count)
                return false;
        return true;
    }

    std::vector<TreeNode>& mutable_nodes() { return nodes_; }
    std::vector<LeafCount>& mutable_leaf_hist() { return leaf_hist_; }

  private:
    friend class TreeGrower;
    std::vector<TreeNode> nodes_;
    std::vector<LeafCount> leaf_hist_;
};

// Column-major copy of the training rows; the layout the split scans want.
struct TrainMatrix {
    int n_rows = 0;
    int n_features = 0;
    int n_classes = 0;
    std::vector<double> cols;  // n_features * n_rows
    std::vector<int> labels;   // empty for pure regression targets

    double col(int f, int r) const { return cols[static_cast<std::size_t>(f) * n_rows + r]; }
};

inline TrainMatrix train_matrix_from(const LabeledDataset& ds, std::span<const int> row_ids) {
    TrainMatrix m;
    m.n_rows = static_cast<int>(row_ids.size());
    m.n_features = ds.n_features;
    m.n_classes = ds.n_classes;
    m.cols.resize(static_cast<std::size_t>(m.n_features) * m.n_rows);
    m.labels.resize(m.n_rows);
    for (int r = 0; r < m.n_rows; ++r) {
        const auto row = ds.row(row_ids[r]);
        m.labels[r] = ds.labels[row_ids[r]];
        for (int f = 0; f < m.n_features; ++f) m.cols[static_cast<std::size_t>(f) * m.n_rows + r] = row[f];
    }
    return m;
}

// Per-feature row orders sorted by feature value. Computing these dominates
// tree building, so they are built once per training matrix and bags derive
// theirs by a linear multiset filter instead of re-sorting.
struct SortedOrders {
    std::vector<std::vector<std::int32_t>> per_feature;

    int n_rows() const { return per_feature.empty() ? 0 : static_cast<int>(per_feature[0].size()); }
};

inline SortedOrders sort_orders(const TrainMatrix& m, std::span<const int> rows) {
    SortedOrders out;
    out.per_feature.assign(m.n_features, std::vector<std::int32_t>(rows.begin(), rows.end()));
    for (int f = 0; f < m.n_features; ++f) {
        auto& ord = out.per_feature[f];
        std::stable_sort(ord.begin(), ord.end(),
                         [&](std::int32_t a, std::int32_t b) { return m.col(f, a) < m.col(f, b); });
    }
    return out;
}

/// Orders of a row multiset (bootstrap/bag counts per row), derived from the
/// full-data orders in O(K n) with sequential access.
inline SortedOrders filter_orders(const SortedOrders& full, std::span<const std::uint16_t> counts, int n_selected) {
    SortedOrders out;
    out.per_feature.resize(full.per_feature.size());
    for (std::size_t f = 0; f < full.per_feature.size(); ++f) {
        auto& ord = out.per_feature[f];
        ord.reserve(n_selected);
        for (std::int32_t row : full.per_feature[f])
            for (int c = 0; c < counts[row]; ++c) ord.push_back(row);
    }
    return out;
}

// Greedy best-first CART grower over pre-sorted, range-partitioned feature
// orders. One instance serves both faces: gini on class labels, squared error
// on caller-supplied residuals.
class TreeGrower {
  public:
    using LeafValueFn = std::function<double(std::span<const int>)>;

    TreeGrower(const TrainMatrix& m, const TreeConfig& cfg) : m_(m), cfg_(cfg) {}

    DecisionTree grow_classification(std::span<const int> rows, int mtry, Rng& rng) {
        mtry_ = std::min(std::max(mtry, 1), m_.n_features);
        rng_ = &rng;
        residuals_ = {};
        return grow(sort_orders(m_, rows));
    }

    DecisionTree grow_classification(SortedOrders orders, int mtry, Rng& rng) {
        mtry_ = std::min(std::max(mtry, 1), m_.n_features);
        rng_ = &rng;
        residuals_ = {};
        return grow(std::move(orders));
    }

    DecisionTree grow_regression(std::span<const int> rows, std::span<const double> residuals,
                                 const LeafValueFn& leaf_value) {
        mtry_ = m_.n_features;
        rng_ = nullptr;
        residuals_ = residuals;
        leaf_value_ = leaf_value;
        return grow(sort_orders(m_, rows));
    }

    DecisionTree grow_regression(SortedOrders orders, std::span<const double> residuals,
                                 const LeafValueFn& leaf_value) {
        mtry_ = m_.n_features;
        rng_ = nullptr;
        residuals_ = residuals;
        leaf_value_ = leaf_value;
        return grow(std::move(orders));
    }

  private:
    struct Candidate {
        double improvement;
        int node_id;
        int feature;
        double threshold;
    };
    struct CandidateOrder {
        bool operator()(const Candidate& a, const Candidate& b) const {
            if (a.improvement != b.improvement) return a.improvement < b.improvement;
            return a.node_id > b.node_id;
        }
    };

    bool classification() const { return residuals_.empty(); }

    DecisionTree grow(SortedOrders orders) {
        const int n = orders.n_rows();
        if (n == 0) throw Error("fit_tree: empty data");
        order_ = std::move(orders.per_feature);

        DecisionTree tree;
        tree.nodes_.emplace_back();
        ranges_ = {{0, n}};

        std::priority_queue<Candidate, std::vector<Candidate>, CandidateOrder> open;
        if (auto c = best_split(0)) open.push(*c);

        int splits_done = 0;
        while (splits_done < cfg_.max_splits && !open.empty()) {
            const Candidate cand = open.top();
            open.pop();
            apply_split(tree, cand);
            ++splits_done;
            const int left = tree.nodes_[cand.node_id].left;
            if (auto c = best_split(left)) open.push(*c);
            if (auto c = best_split(left + 1)) open.push(*c);
        }

        finalize_leaves(tree);
        return tree;
    }

    std::optional<Candidate> best_split(int node_id) {
        const auto [begin, end] = ranges_[node_id];
        const int n = end - begin;
        if (n < 2 * cfg_.min_node) return std::nullopt;
        return classification() ? best_split_gini(node_id, begin, end) : best_split_sse(node_id, begin, end);
    }

    std::optional<Candidate> best_split_gini(int node_id, int begin, int end) {
        const int n = end - begin;
        const int C = m_.n_classes;
        total_counts_.assign(C, 0.0);
        const auto& ord0 = order_[0];
        for (int i = begin; i < end; ++i) total_counts_[m_.labels[ord0[i]]] += 1.0;
        double total_sq = 0.0;
        int populated = 0;
        for (double c : total_counts_) {
            total_sq += c * c;
            populated += c > 0.0;
        }
        if (populated <= 1) return std::nullopt;  // pure node
        const double parent = total_sq / n;

        Candidate best{0.0, node_id, -1, 0.0};
        for (int f : tried_features()) {
            const auto& ord = order_[f];
            if (m_.col(f, ord[begin]) == m_.col(f, ord[end - 1])) continue;  // constant feature
            left_counts_.assign(C, 0.0);
            double left_sq = 0.0, right_sq = total_sq;
            for (int i = begin; i < end - 1; ++i) {
                const int cls = m_.labels[ord[i]];
                const double cl = left_counts_[cls];
                const double cr = total_counts_[cls] - cl;
                left_sq += 2.0 * cl + 1.0;
                right_sq -= 2.0 * cr - 1.0;
                left_counts_[cls] = cl + 1.0;
                const double lo = m_.col(f, ord[i]), hi = m_.col(f, ord[i + 1]);
                if (lo == hi) continue;
                const int nl = i - begin + 1, nr = n - nl;
                if (nl < cfg_.min_node || nr < cfg_.min_node) continue;
                const double imp = left_sq / nl + right_sq / nr - parent;
                if (imp > best.improvement && imp > 1e-12) {
                    best = {imp, node_id, f, midpoint(lo, hi)};
                }
            }
        }
        if (best.feature < 0) return std::nullopt;
        return best;
    }

    std::optional<Candidate> best_split_sse(int node_id, int begin, int end) {
        const int n = end - begin;
        const auto& ord0 = order_[0];
        double total = 0.0, total_sq_resid = 0.0;
        for (int i = begin; i < end; ++i) {
            const double r = residuals_[ord0[i]];
            total += r;
            total_sq_resid += r * r;
        }
        const double parent = total * total / n;
        if (total_sq_resid - parent <= 1e-12 * (total_sq_resid + 1e-300)) return std::nullopt;  // constant residuals
        const double floor = 1e-12 * (std::fabs(parent) + 1.0);

        Candidate best{0.0, node_id, -1, 0.0};
        for (int f : tried_features()) {
            const auto& ord = order_[f];
            if (m_.col(f, ord[begin]) == m_.col(f, ord[end - 1])) continue;
            double left_sum = 0.0;
            for (int i = begin; i < end - 1; ++i) {
                left_sum += residuals_[ord[i]];
                const double lo = m_.col(f, ord[i]), hi = m_.col(f, ord[i + 1]);
                if (lo == hi) continue;
                const int nl = i - begin + 1, nr = n - nl;
                if (nl < cfg_.min_node || nr < cfg_.min_node) continue;
                const double right_sum = total - left_sum;
                const double imp = left_sum * left_sum / nl + right_sum * right_sum / nr - parent;
                if (imp > best.improvement && imp > floor) {
                    best = {imp, node_id, f, midpoint(lo, hi)};
                }
            }
        }
        if (best.feature < 0) return std::nullopt;
        return best;
    }

    // Midpoint of two consecutive distinct values; guarded so the predicate
    // x <= t never produces an empty child even for adjacent doubles.
    static double midpoint(double lo, double hi) {
        const double t = lo + 0.5 * (hi - lo);
        return (t >= hi) ? lo : t;
    }

    std::span<const int> tried_features() {
        if (mtry_ >= m_.n_features) {
            if (all_features_.empty()) {
                all_features_.resize(m_.n_features);
                std::iota(all_features_.begin(), all_features_.end(), 0);
            }
            return all_features_;
        }
        subset_ = rng_->sample_without_replacement(m_.n_features, mtry_);
        return subset_;
    }

    void apply_split(DecisionTree& tree, const Candidate& cand) {
        auto& nd = tree.nodes_[cand.node_id];
        nd.feature = cand.feature;
        nd.threshold = cand.threshold;
        nd.improvement = cand.improvement;
        nd.left = static_cast<std::int32_t>(tree.nodes_.size());
        tree.nodes_.emplace_back();
        tree.nodes_.emplace_back();

        const auto [begin, end] = ranges_[cand.node_id];
        int n_left = 0;
        for (int f = 0; f < m_.n_features; ++f) {
            auto& ord = order_[f];
            scratch_left_.clear();
            scratch_right_.clear();
            for (int i = begin; i < end; ++i) {
                if (m_.col(cand.feature, ord[i]) <= cand.threshold)
                    scratch_left_.push_back(ord[i]);
                else
                    scratch_right_.push_back(ord[i]);
            }
            std::copy(scratch_left_.begin(), scratch_left_.end(), ord.begin() + begin);
            std::copy(scratch_right_.begin(), scratch_right_.end(), ord.begin() + begin + scratch_left_.size());
            n_left = static_cast<int>(scratch_left_.size());
        }
        ranges_.push_back({begin, begin + n_left});
        ranges_.push_back({begin + n_left, end});
    }

    void finalize_leaves(DecisionTree& tree) {
        for (std::size_t id = 0; id < tree.nodes_.size(); ++id) {
            auto& nd = tree.nodes_[id];
            if (nd.feature >= 0) continue;
            const auto [begin, end] = ranges_[id];
            const auto& ord0 = order_[0];
            if (classification()) {
                total_counts_.assign(m_.n_classes, 0.0);
                for (int i = begin; i < end; ++i) total_counts_[m_.labels[ord0[i]]] += 1.0;
                nd.hist_begin = static_cast<std::uint32_t>(tree.leaf_hist_.size());
                for (int c = 0; c < m_.n_classes; ++c)
                    if (total_counts_[c] > 0.0)
                        tree.leaf_hist_.push_back({c, static_cast<std::uint32_t>(total_counts_[c])});
                nd.hist_end = static_cast<std::uint32_t>(tree.leaf_hist_.size());
            } else {
                nd.value = leaf_value_({ord0.data() + begin, static_cast<std::size_t>(end - begin)});
            }
        }
    }

    const TrainMatrix& m_;
    TreeConfig cfg_;
    int mtry_ = 0;
    Rng* rng_ = nullptr;
    std::span<const double> residuals_;
    LeafValueFn leaf_value_;

    std::vector<std::vector<std::int32_t>> order_;
    std::vector<std::pair<int, int>> ranges_;
    std::vector<double> total_counts_, left_counts_;
    std::vector<int> all_features_, subset_;
    std::vector<std::int32_t> scratch_left_, scratch_right_;
};

/// Classification face: gini splits on chain labels; fresh mtry-subset of
/// features drawn from `rng` at every split when mtry < K.
inline DecisionTree fit_tree(const TrainMatrix& m, std::span<const int> rows, const TreeConfig& cfg, int mtry,
                             Rng& rng) {
    TreeGrower grower(m, cfg);
    return grower.grow_classification(rows, mtry, rng);
}

inline DecisionTree fit_tree(const TrainMatrix& m, SortedOrders orders, const TreeConfig& cfg, int mtry,
                             Rng& rng) {
    TreeGrower grower(m, cfg);
    return grower.grow_classification(std::move(orders), mtry, rng);
}

/// Regression face: squared-error splits on residuals; terminal values come
/// from the caller (Newton steps for boosting).
inline DecisionTree fit_tree(const TrainMatrix& m, std::span<const int> rows, std::span<const double> residuals,
                             const TreeConfig& cfg, const TreeGrower::LeafValueFn& leaf_value) {
    TreeGrower grower(m, cfg);
    return grower.grow_regression(rows, residuals, leaf_value);
}

inline DecisionTree fit_tree(const TrainMatrix& m, SortedOrders orders, std::span<const double> residuals,
                             const TreeConfig& cfg, const TreeGrower::LeafValueFn& leaf_value) {
    TreeGrower grower(m, cfg);
    return grower.grow_regression(std::move(orders), residuals, leaf_value);
}

}  // namespace rstar

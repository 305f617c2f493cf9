#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rstar/parallel.hpp"
#include "rstar/tree.hpp"

namespace rstar {

struct ForestParams {
    int n_tree = 500;
    int mtry = 0;  // 0 = floor(sqrt(K)), clamped to >= 1
    int min_node = 1;
};

inline int default_mtry(int n_features) {
    return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_features)))));
}

// Bagged classification forest: each tree is grown to purity on a bootstrap
// resample, with a fresh random feature subset of size mtry at every split.
struct ForestModel {
    std::vector<DecisionTree> trees;
    int n_tree = 0;
    int mtry = 0;
    int n_classes = 0;
    int n_features = 0;
    std::uint64_t seed = 0;

    /// Fraction of trees voting each class.
    std::vector<double> predict_proba(std::span<const double> x) const {
        check_dim(x);
        std::vector<double> votes(n_classes, 0.0);
        for (const auto& t : trees) votes[t.vote(x.data())] += 1.0;
        for (auto& v : votes) v /= static_cast<double>(n_tree);
        return votes;
    }

    void check_dim(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != n_features)
            throw Error("predict: input has " + std::to_string(x.size()) + " features, model expects " +
                        std::to_string(n_features));
    }
};

inline ForestModel fit_random_forest(const LabeledDataset& ds, const ForestParams& params, std::uint64_t seed,
                                     int jobs = 0) {
    if (ds.train_idx.empty()) throw Error("fit_random_forest: empty train partition");
    const TrainMatrix m = train_matrix_from(ds, ds.train_idx);

    ForestModel model;
    model.n_tree = params.n_tree;
    model.mtry = params.mtry > 0 ? std::min(params.mtry, m.n_features) : default_mtry(m.n_features);
    model.n_classes = m.n_classes;
    model.n_features = m.n_features;
    model.seed = seed;
    model.trees.resize(params.n_tree);

    TreeConfig cfg;
    cfg.max_splits = m.n_rows;  // no budget: grow to purity
    cfg.min_node = params.min_node;
    cfg.criterion = SplitCriterion::gini;

    std::vector<int> all_rows(m.n_rows);
    std::iota(all_rows.begin(), all_rows.end(), 0);
    const SortedOrders full_orders = sort_orders(m, all_rows);

    parallel_for(params.n_tree, jobs, [&](int t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<std::uint16_t> counts(m.n_rows, 0);
        for (int i = 0; i < m.n_rows; ++i) ++counts[rng.uniform_int(m.n_rows)];
        model.trees[t] = fit_tree(m, filter_orders(full_orders, counts, m.n_rows), cfg, model.mtry, rng);
    });
    return model;
}

}  // namespace rstar

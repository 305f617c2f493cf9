#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rstar/parallel.hpp"
#include "rstar/tree.hpp"

namespace rstar {

struct GbmParams {
    int n_rounds = 50;
    double shrinkage = 0.1;
    int max_splits = 3;  // split-node budget per tree
    int min_node = 10;
    double bag_fraction = 0.5;
};

// Multinomial-deviance boosted trees: per round, one squared-error regression
// tree per class is fit to the softmax residuals on a row subsample, with
// Newton-step terminal values scaled by the shrinkage.
struct GbmModel {
    std::vector<std::vector<DecisionTree>> rounds;  // [round][class]
    std::vector<double> init_scores;                // per-class F offsets (zeros)
    double shrinkage = 0.1;
    int n_rounds = 0;
    double bag_fraction = 0.5;
    int n_classes = 0;
    int n_features = 0;
    std::uint64_t seed = 0;
    std::vector<double> train_deviance;  // mean full-train NLL after each round

    std::vector<double> predict_scores(std::span<const double> x) const {
        check_dim(x);
        std::vector<double> f(init_scores);
        for (const auto& round : rounds)
            for (int c = 0; c < n_classes; ++c) f[c] += shrinkage * round[c].predict_value(x.data());
        return f;
    }

    std::vector<double> predict_proba(std::span<const double> x) const {
        auto f = predict_scores(x);
        softmax(f);
        return f;
    }

    void check_dim(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != n_features)
            throw Error("predict: input has " + std::to_string(x.size()) + " features, model expects " +
                        std::to_string(n_features));
    }
};

/// Per-parameter split-improvement totals, rescaled so the maximum is 100.
inline std::vector<double> variable_importance(const GbmModel& model) {
    std::vector<double> acc(model.n_features, 0.0);
    for (const auto& round : model.rounds)
        for (const auto& tree : round) tree.add_importance(acc);
    double mx = 0.0;
    for (double v : acc) mx = std::max(mx, v);
    if (mx > 0.0)
        for (auto& v : acc) v *= 100.0 / mx;
    return acc;
}

inline GbmModel fit_gbm(const LabeledDataset& ds, const GbmParams& params, std::uint64_t seed, int jobs = 0) {
    if (ds.train_idx.empty()) throw Error("fit_gbm: empty train partition");
    const TrainMatrix m = train_matrix_from(ds, ds.train_idx);
    const int n = m.n_rows;
    const int C = m.n_classes;

    {
        std::vector<int> class_count(C, 0);
        for (int y : m.labels) ++class_count[y];
        for (int c = 0; c < C; ++c)
            if (class_count[c] == 0) throw Error("fit_gbm: chain " + std::to_string(c + 1) + " absent from training data");
    }

    GbmModel model;
    model.init_scores.assign(C, 0.0);
    model.shrinkage = params.shrinkage;
    model.n_rounds = params.n_rounds;
    model.bag_fraction = params.bag_fraction;
    model.n_classes = C;
    model.n_features = m.n_features;
    model.seed = seed;
    model.rounds.resize(params.n_rounds);
    model.train_deviance.reserve(params.n_rounds);

    TreeConfig cfg;
    cfg.max_splits = params.max_splits;
    cfg.min_node = params.min_node;
    cfg.criterion = SplitCriterion::squared_error;

    const int bag_size = std::max(1, static_cast<int>(std::floor(params.bag_fraction * n)));
    std::vector<double> scores(static_cast<std::size_t>(n) * C, 0.0);  // row-major F
    std::vector<double> probs(static_cast<std::size_t>(n) * C);
    std::vector<std::vector<double>> residuals(C, std::vector<double>(n));

    std::vector<int> all_rows(n);
    std::iota(all_rows.begin(), all_rows.end(), 0);
    const SortedOrders full_orders = sort_orders(m, all_rows);

    for (int round = 0; round < params.n_rounds; ++round) {
        for (int i = 0; i < n; ++i) {
            std::span<double> p{probs.data() + static_cast<std::size_t>(i) * C, static_cast<std::size_t>(C)};
            std::copy_n(scores.data() + static_cast<std::size_t>(i) * C, C, p.data());
            softmax(p);
            for (int c = 0; c < C; ++c) residuals[c][i] = (m.labels[i] == c ? 1.0 : 0.0) - p[c];
        }

        // One bag per round, shared by the per-class trees.
        SortedOrders bag_orders;
        if (bag_size >= n) {
            bag_orders = full_orders;
        } else {
            Rng bag_rng(derive_seed(seed, 0x10000u + static_cast<std::uint64_t>(round)));
            const auto bag = bag_rng.sample_without_replacement(n, bag_size);
            std::vector<std::uint16_t> counts(n, 0);
            for (int row : bag) counts[row] = 1;
            bag_orders = filter_orders(full_orders, counts, bag_size);
        }

        auto& trees = model.rounds[round];
        trees.resize(C);
        parallel_for(C, jobs, [&](int c) {
            const auto& r = residuals[c];
            const double newton_scale = static_cast<double>(C - 1) / C;
            auto leaf_value = [&](std::span<const int> leaf_rows) {
                double num = 0.0, den = 0.0;
                for (int i : leaf_rows) {
                    num += r[i];
                    den += std::fabs(r[i]) * (1.0 - std::fabs(r[i]));
                }
                if (den <= 0.0) return 0.0;
                return newton_scale * num / den;
            };
            trees[c] = fit_tree(m, bag_orders, r, cfg, leaf_value);
        });

        for (int c = 0; c < C; ++c) {
            const auto& tree = trees[c];
            for (int i = 0; i < n; ++i) {
                const int leaf = tree.find_leaf_by([&](int f) { return m.col(f, i); });
                scores[static_cast<std::size_t>(i) * C + c] += params.shrinkage * tree.nodes()[leaf].value;
            }
        }

        double deviance = 0.0;
        std::vector<double> p(C);
        for (int i = 0; i < n; ++i) {
            std::copy_n(scores.data() + static_cast<std::size_t>(i) * C, C, p.data());
            softmax(p);
            deviance -= std::log(std::max(p[m.labels[i]], 1e-300));
        }
        model.train_deviance.push_back(deviance / n);
    }
    return model;
}

}  // namespace rstar

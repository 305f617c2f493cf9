#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rstar/classifier.hpp"
#include "rstar/parallel.hpp"

namespace rstar {

struct RStarOptions {
    ClassifierKind classifier = ClassifierKind::gbm;
    bool split = true;
    int split_factor = 2;
    double test_frac = 0.3;
    int uncertainty_draws = 0;          // I; 0 = point estimate only
    bool add_iteration_blocks = false;  // opt-in extra feature
    int n_blocks = 4;
    int decile_param = -1;  // >= 0 adds a per-decile breakdown on that parameter
    int decile_bins = 10;
    int decile_draws = 40;
    GbmParams gbm;
    ForestParams rf;
    int jobs = 0;  // 0 = hardware concurrency
    std::uint64_t seed = 0;
};

struct DecileRStar {
    int bin = 0;  // 1..n_bins
    std::vector<double> draws;
};

struct RStarResult {
    double r_star = 0.0;
    double accuracy = 0.0;
    int n_chains_effective = 0;
    std::vector<double> uncertainty_draws;
    std::vector<DecileRStar> per_decile;
};

// Per-test-row predicted chain probabilities, computed once and reused by all
// resampling passes.
struct SimplexMatrix {
    int n_rows = 0;
    int n_classes = 0;
    std::vector<double> p;       // row-major
    std::vector<int> labels;     // true class per row

    std::span<const double> row(int i) const {
        return {p.data() + static_cast<std::size_t>(i) * n_classes, static_cast<std::size_t>(n_classes)};
    }
};

inline SimplexMatrix predict_test_simplexes(const ClassifierModel& model, const LabeledDataset& ds, int jobs = 0) {
    SimplexMatrix sm;
    sm.n_rows = static_cast<int>(ds.test_idx.size());
    sm.n_classes = ds.n_classes;
    sm.p.resize(static_cast<std::size_t>(sm.n_rows) * sm.n_classes);
    sm.labels.resize(sm.n_rows);
    parallel_for(sm.n_rows, jobs, [&](int i) {
        const int row = ds.test_idx[i];
        const auto proba = predict_proba(model, ds.row(row));
        std::copy(proba.begin(), proba.end(), sm.p.begin() + static_cast<std::size_t>(i) * sm.n_classes);
        sm.labels[i] = ds.labels[row];
    });
    return sm;
}

/// Held-out argmax accuracy scaled by the chain count.
inline double rstar_point(const SimplexMatrix& sm) {
    if (sm.n_rows == 0) throw Error("rstar_point: empty test set");
    int correct = 0;
    for (int i = 0; i < sm.n_rows; ++i) correct += predict_class(sm.row(i)) == sm.labels[i];
    return static_cast<double>(sm.n_classes) * correct / sm.n_rows;
}

// Uncertainty distribution: each iteration samples one chain id per test row
// from its predicted simplex, scores it against the truth and scales the
// resulting accuracy by the chain count.
inline std::vector<double> rstar_uncertainty(const SimplexMatrix& sm, int n_iterations, std::uint64_t seed,
                                             int jobs = 0) {
    if (sm.n_rows == 0) throw Error("rstar_uncertainty: empty test set");
    if (n_iterations < 1) throw Error("rstar_uncertainty: need at least one iteration");
    std::vector<double> draws(n_iterations);
    parallel_for(n_iterations, jobs, [&](int it) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(it)));
        int correct = 0;
        for (int i = 0; i < sm.n_rows; ++i)
            correct += rng.categorical(sm.row(i).data(), sm.n_classes) == sm.labels[i];
        draws[it] = static_cast<double>(sm.n_classes) * correct / sm.n_rows;
    });
    return draws;
}

inline std::vector<double> rstar_uncertainty(const ClassifierModel& model, const LabeledDataset& ds,
                                             int n_iterations, std::uint64_t seed, int jobs = 0) {
    return rstar_uncertainty(predict_test_simplexes(model, ds, jobs), n_iterations, seed, jobs);
}

inline ClassifierModel fit_classifier(const LabeledDataset& ds, const RStarOptions& opt, std::uint64_t seed) {
    if (opt.classifier == ClassifierKind::gbm) return fit_gbm(ds, opt.gbm, seed, opt.jobs);
    return fit_random_forest(ds, opt.rf, seed, opt.jobs);
}

/// Classifier input: optional split into temporal sub-chains, optional
/// iteration-block covariate appended to what the classifier sees.
inline ChainSet classifier_input(const ChainSet& cs, const RStarOptions& opt) {
    ChainSet out = opt.split ? split_chains(cs, opt.split_factor) : cs;
    if (opt.add_iteration_blocks) out = with_iteration_blocks(out, opt.n_blocks);
    return out;
}

inline std::vector<DecileRStar> decile_rstar(const SimplexMatrix& sm, std::span<const double> param_values,
                                             int n_bins, int draws_per_bin, std::uint64_t seed);

inline RStarResult compute_rstar(const ChainSet& cs, const RStarOptions& opt) {
    const ChainSet input = classifier_input(cs, opt);
    const LabeledDataset ds = make_labeled(input, opt.test_frac, derive_seed(opt.seed, 1));
    const ClassifierModel model = fit_classifier(ds, opt, derive_seed(opt.seed, 2));
    const SimplexMatrix sm = predict_test_simplexes(model, ds, opt.jobs);

    RStarResult res;
    res.n_chains_effective = input.n_chains();
    res.r_star = rstar_point(sm);
    res.accuracy = res.r_star / input.n_chains();
    if (opt.uncertainty_draws > 0)
        res.uncertainty_draws = rstar_uncertainty(sm, opt.uncertainty_draws, derive_seed(opt.seed, 3), opt.jobs);
    if (opt.decile_param >= 0) {
        if (opt.decile_param >= ds.n_features) throw Error("compute_rstar: decile parameter out of range");
        std::vector<double> values(sm.n_rows);
        for (int i = 0; i < sm.n_rows; ++i)
            values[i] = ds.features[static_cast<std::size_t>(ds.test_idx[i]) * ds.n_features + opt.decile_param];
        res.per_decile = decile_rstar(sm, values, opt.decile_bins, opt.decile_draws, derive_seed(opt.seed, 4));
    }
    return res;
}

struct ReplicateSummary {
    std::vector<double> values;
    QuantileSummary quantiles;
};

// Repeated point-R* computation. On a fixed dataset only the train/test
// partition and classifier training vary with the seed.
inline ReplicateSummary rstar_replicates(const ChainSet& cs, const RStarOptions& opt,
                                         std::span<const std::uint64_t> seeds) {
    if (seeds.empty()) throw Error("rstar_replicates: need at least one seed");
    ReplicateSummary out;
    out.values.resize(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        RStarOptions o = opt;
        o.seed = seeds[i];
        o.uncertainty_draws = 0;
        out.values[i] = compute_rstar(cs, o).r_star;
    }
    out.quantiles = quantile_summary(out.values);
    return out;
}

inline ReplicateSummary rstar_replicates(const std::function<ChainSet(std::uint64_t)>& generator,
                                         const RStarOptions& opt, std::span<const std::uint64_t> seeds) {
    if (seeds.empty()) throw Error("rstar_replicates: need at least one seed");
    ReplicateSummary out;
    out.values.resize(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        RStarOptions o = opt;
        o.seed = seeds[i];
        o.uncertainty_draws = 0;
        out.values[i] = compute_rstar(generator(seeds[i]), o).r_star;
    }
    out.quantiles = quantile_summary(out.values);
    return out;
}

// R* resampling restricted to equal-count bins of one parameter's pooled
// test-set values; the null accuracy stays 1/N inside every bin. Ties at a
// bin edge stay in the lower bin, which can leave upper bins empty.
inline std::vector<DecileRStar> decile_rstar(const SimplexMatrix& sm, std::span<const double> param_values,
                                             int n_bins, int draws_per_bin, std::uint64_t seed) {
    if (static_cast<int>(param_values.size()) != sm.n_rows)
        throw Error("decile_rstar: parameter values do not match test rows");
    if (sm.n_rows < n_bins) throw Error("decile_rstar: fewer test rows than bins");

    std::vector<int> idx(sm.n_rows);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return param_values[a] < param_values[b]; });

    std::vector<DecileRStar> out(n_bins);
    int start = 0;
    for (int b = 0; b < n_bins; ++b) {
        out[b].bin = b + 1;
        int stop = static_cast<int>(static_cast<long long>(b + 1) * sm.n_rows / n_bins);
        if (stop < start) stop = start;
        while (stop > start && stop < sm.n_rows && param_values[idx[stop]] == param_values[idx[stop - 1]]) ++stop;
        if (b == n_bins - 1) stop = sm.n_rows;
        const int count = stop - start;
        if (count > 0) {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
            out[b].draws.resize(draws_per_bin);
            for (int it = 0; it < draws_per_bin; ++it) {
                int correct = 0;
                for (int i = start; i < stop; ++i) {
                    const int row = idx[i];
                    correct += rng.categorical(sm.row(row).data(), sm.n_classes) == sm.labels[row];
                }
                out[b].draws[it] = static_cast<double>(sm.n_classes) * correct / count;
            }
        }
        start = stop;
    }
    return out;
}

inline std::vector<DecileRStar> decile_rstar(const ClassifierModel& model, const LabeledDataset& ds, int param,
                                             int n_bins, int draws_per_bin, std::uint64_t seed, int jobs = 0) {
    const SimplexMatrix sm = predict_test_simplexes(model, ds, jobs);
    std::vector<double> values(sm.n_rows);
    for (int i = 0; i < sm.n_rows; ++i)
        values[i] = ds.features[static_cast<std::size_t>(ds.test_idx[i]) * ds.n_features + param];
    return decile_rstar(sm, values, n_bins, draws_per_bin, seed);
}

}  // namespace rstar

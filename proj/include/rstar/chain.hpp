#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rstar/math.hpp"
#include "rstar/rng.hpp"

namespace rstar {

class Error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Immutable block of MCMC output: n_chains x n_draws x n_params, all chains
// the same length. Every transform returns a fresh value, so ChainSets can be
// shared freely across threads.
class ChainSet {
  public:
    ChainSet(int n_chains, int n_draws, int n_params, std::vector<double> draws,
             std::vector<std::string> param_names = {}, std::string meta = {})
        : n_chains_(n_chains),
          n_draws_(n_draws),
          n_params_(n_params),
          draws_(std::move(draws)),
          param_names_(std::move(param_names)),
          meta_(std::move(meta)) {
        if (n_chains_ < 2) throw Error("ChainSet: need at least 2 chains, got " + std::to_string(n_chains_));
        if (n_draws_ < 2) throw Error("ChainSet: need at least 2 draws per chain, got " + std::to_string(n_draws_));
        if (n_params_ < 1) throw Error("ChainSet: need at least 1 parameter");
        const auto expected = static_cast<std::size_t>(n_chains_) * n_draws_ * n_params_;
        if (draws_.size() != expected) throw Error("ChainSet: draw buffer size does not match dimensions");
        for (std::size_t i = 0; i < draws_.size(); ++i) {
            if (!std::isfinite(draws_[i]))
                throw Error("ChainSet: non-finite value at chain " +
                            std::to_string(i / (static_cast<std::size_t>(n_draws_) * n_params_) + 1) + ", draw " +
                            std::to_string((i / n_params_) % n_draws_ + 1) + ", parameter " +
                            std::to_string(i % n_params_ + 1));
        }
        if (param_names_.empty()) {
            param_names_.reserve(n_params_);
            for (int k = 0; k < n_params_; ++k) param_names_.push_back("p" + std::to_string(k + 1));
        }
        if (static_cast<int>(param_names_.size()) != n_params_)
            throw Error("ChainSet: parameter name count does not match n_params");
    }

    int n_chains() const { return n_chains_; }
    int n_draws() const { return n_draws_; }
    int n_params() const { return n_params_; }
    const std::vector<std::string>& param_names() const { return param_names_; }
    const std::string& meta() const { return meta_; }
    const std::vector<double>& raw() const { return draws_; }

    double at(int chain, int draw, int param) const {
        return draws_[(static_cast<std::size_t>(chain) * n_draws_ + draw) * n_params_ + param];
    }

    /// Contiguous K-vector for one draw.
    std::span<const double> row(int chain, int draw) const {
        return {draws_.data() + (static_cast<std::size_t>(chain) * n_draws_ + draw) * n_params_,
                static_cast<std::size_t>(n_params_)};
    }

    /// Copy of one parameter's trace in one chain.
    std::vector<double> param_values(int chain, int param) const {
        std::vector<double> out(n_draws_);
        for (int s = 0; s < n_draws_; ++s) out[s] = at(chain, s, param);
        return out;
    }

    /// Pooled values of one parameter, chain-major order.
    std::vector<double> pooled_param(int param) const {
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(n_chains_) * n_draws_);
        for (int n = 0; n < n_chains_; ++n)
            for (int s = 0; s < n_draws_; ++s) out.push_back(at(n, s, param));
        return out;
    }

  private:
    int n_chains_, n_draws_, n_params_;
    std::vector<double> draws_;
    std::vector<std::string> param_names_;
    std::string meta_;
};

// Split every chain into `factor` contiguous temporal blocks (first block =
// earliest draws). If the length is not divisible, the earliest
// (S mod factor) draws are dropped so the retained ones are the most recent.
inline ChainSet split_chains(const ChainSet& cs, int factor = 2) {
    if (factor < 1) throw Error("split_chains: factor must be >= 1");
    if (factor == 1) return cs;
    const int drop = cs.n_draws() % factor;
    const int sub_len = cs.n_draws() / factor;
    if (sub_len < 2) throw Error("split_chains: split chains would have fewer than 2 draws");
    const int k = cs.n_params();
    std::vector<double> draws;
    draws.reserve(static_cast<std::size_t>(cs.n_chains()) * factor * sub_len * k);
    for (int n = 0; n < cs.n_chains(); ++n) {
        for (int block = 0; block < factor; ++block) {
            for (int s = 0; s < sub_len; ++s) {
                const auto r = cs.row(n, drop + block * sub_len + s);
                draws.insert(draws.end(), r.begin(), r.end());
            }
        }
    }
    return {cs.n_chains() * factor, sub_len, k, std::move(draws), cs.param_names(), cs.meta()};
}

/// Keep draws 1, 1+k, 1+2k, ...
inline ChainSet thin(const ChainSet& cs, int k) {
    if (k < 1) throw Error("thin: k must be >= 1");
    if (k == 1) return cs;
    const int kept = (cs.n_draws() + k - 1) / k;
    std::vector<double> draws;
    draws.reserve(static_cast<std::size_t>(cs.n_chains()) * kept * cs.n_params());
    for (int n = 0; n < cs.n_chains(); ++n)
        for (int s = 0; s < cs.n_draws(); s += k) {
            const auto r = cs.row(n, s);
            draws.insert(draws.end(), r.begin(), r.end());
        }
    return {cs.n_chains(), kept, cs.n_params(), std::move(draws), cs.param_names(), cs.meta()};
}

/// Keep the selected parameters (0-based), in selector order.
inline ChainSet subset_params(const ChainSet& cs, const std::vector<int>& selector) {
    if (selector.empty()) throw Error("subset_params: empty selector");
    for (int k : selector)
        if (k < 0 || k >= cs.n_params())
            throw Error("subset_params: parameter index " + std::to_string(k + 1) + " out of range 1.." +
                        std::to_string(cs.n_params()));
    std::vector<double> draws;
    draws.reserve(static_cast<std::size_t>(cs.n_chains()) * cs.n_draws() * selector.size());
    std::vector<std::string> names;
    names.reserve(selector.size());
    for (int k : selector) names.push_back(cs.param_names()[k]);
    for (int n = 0; n < cs.n_chains(); ++n)
        for (int s = 0; s < cs.n_draws(); ++s)
            for (int k : selector) draws.push_back(cs.at(n, s, k));
    return {cs.n_chains(), cs.n_draws(), static_cast<int>(selector.size()), std::move(draws), std::move(names),
            cs.meta()};
}

inline std::vector<int> stride_selector(int n_params, int stride) {
    if (stride < 1) throw Error("stride_selector: stride must be >= 1");
    std::vector<int> out;
    for (int k = 0; k < n_params; k += stride) out.push_back(k);
    return out;
}

/// |x_i - median(x)| elementwise, pooled median.
inline std::vector<double> fold(std::span<const double> values) {
    if (values.empty()) throw Error("fold: empty input");
    const double med = median(std::vector<double>(values.begin(), values.end()));
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = std::fabs(values[i] - med);
    return out;
}

/// Pooled average ranks mapped through the normal quantile with the
/// (r - 3/8)/(n + 1/4) offset; output reshaped per chain.
inline std::vector<std::vector<double>> rank_normalize_values(std::span<const double> pooled, int n_chains,
                                                              int n_draws) {
    const auto ranks = average_ranks(pooled);
    const double denom = static_cast<double>(pooled.size()) + 0.25;
    std::vector<std::vector<double>> out(n_chains, std::vector<double>(n_draws));
    for (int n = 0; n < n_chains; ++n)
        for (int s = 0; s < n_draws; ++s)
            out[n][s] = normal_quantile((ranks[static_cast<std::size_t>(n) * n_draws + s] - 0.375) / denom);
    return out;
}

inline std::vector<std::vector<double>> rank_normalize(const ChainSet& cs, int param) {
    if (cs.n_chains() * cs.n_draws() < 4) throw Error("rank_normalize: need at least 4 pooled draws");
    return rank_normalize_values(cs.pooled_param(param), cs.n_chains(), cs.n_draws());
}

// Append a contiguous-iteration block index (1..n_blocks) as an extra
// feature column. Used as an opt-in covariate for chain classification.
inline ChainSet with_iteration_blocks(const ChainSet& cs, int n_blocks) {
    if (n_blocks < 1) throw Error("with_iteration_blocks: n_blocks must be >= 1");
    const int k = cs.n_params();
    std::vector<double> draws;
    draws.reserve(static_cast<std::size_t>(cs.n_chains()) * cs.n_draws() * (k + 1));
    for (int n = 0; n < cs.n_chains(); ++n)
        for (int s = 0; s < cs.n_draws(); ++s) {
            const auto r = cs.row(n, s);
            draws.insert(draws.end(), r.begin(), r.end());
            const int block = std::min(n_blocks - 1, s * n_blocks / cs.n_draws());
            draws.push_back(static_cast<double>(block + 1));
        }
    auto names = cs.param_names();
    names.push_back("iter_block");
    return {cs.n_chains(), cs.n_draws(), k + 1, std::move(draws), std::move(names), cs.meta()};
}

// Flattened (draw vector, chain label) rows with a seeded per-chain
// train/test partition. Labels are 0-based chain indices.
struct LabeledDataset {
    int n_rows = 0;
    int n_features = 0;
    int n_classes = 0;
    std::vector<double> features;  // row-major n_rows x n_features
    std::vector<int> labels;
    std::vector<int> train_idx;
    std::vector<int> test_idx;
    std::uint64_t seed = 0;

    std::span<const double> row(int i) const {
        return {features.data() + static_cast<std::size_t>(i) * n_features, static_cast<std::size_t>(n_features)};
    }
};

// Stratified split: per chain, round(S * test_frac) draws go to test, sampled
// without replacement; the rest train. Deterministic per seed.
inline LabeledDataset make_labeled(const ChainSet& cs, double test_frac, std::uint64_t seed) {
    if (!(test_frac > 0.0 && test_frac < 1.0)) throw Error("make_labeled: test_frac must be in (0, 1)");
    const int s_total = cs.n_draws();
    const int n_test = static_cast<int>(std::lround(static_cast<double>(s_total) * test_frac));
    if (n_test < 1 || s_total - n_test < 1)
        throw Error("make_labeled: degenerate split (test " + std::to_string(n_test) + " of " +
                    std::to_string(s_total) + " draws per chain)");

    LabeledDataset ds;
    ds.n_features = cs.n_params();
    ds.n_classes = cs.n_chains();
    ds.n_rows = cs.n_chains() * s_total;
    ds.seed = seed;
    ds.features.reserve(static_cast<std::size_t>(ds.n_rows) * ds.n_features);
    ds.labels.reserve(ds.n_rows);
    for (int n = 0; n < cs.n_chains(); ++n) {
        for (int s = 0; s < s_total; ++s) {
            const auto r = cs.row(n, s);
            ds.features.insert(ds.features.end(), r.begin(), r.end());
            ds.labels.push_back(n);
        }
    }
    for (int n = 0; n < cs.n_chains(); ++n) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(n)));
        const auto test_local = rng.sample_without_replacement(s_total, n_test);
        std::vector<char> is_test(s_total, 0);
        for (int t : test_local) is_test[t] = 1;
        const int base = n * s_total;
        for (int s = 0; s < s_total; ++s) (is_test[s] ? ds.test_idx : ds.train_idx).push_back(base + s);
    }
    return ds;
}

}  // namespace rstar

#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "rstar/chain.hpp"

namespace rstar {

// Potential scale reduction on chains that are already split: B = L*var(chain
// means), W = mean(chain variances), Rhat = sqrt(((L-1)/L*W + B/L)/W).
// W = 0 with B = 0 degenerates to the formula's limit sqrt((L-1)/L); W = 0
// with B > 0 returns +infinity.
inline double split_rhat(const std::vector<std::vector<double>>& chains) {
    const auto m = chains.size();
    if (m < 2) throw Error("split_rhat: need at least 2 chains");
    const std::size_t l = chains[0].size();
    if (l < 2) throw Error("split_rhat: need at least 2 draws per chain");
    for (const auto& c : chains)
        if (c.size() != l) throw Error("split_rhat: chains of unequal length");

    std::vector<double> means(m), vars(m);
    for (std::size_t i = 0; i < m; ++i) {
        means[i] = mean(chains[i]);
        vars[i] = variance(chains[i]);
    }
    const double w = mean(vars);
    const double b_over_l = variance(means);
    const double ln = static_cast<double>(l);
    if (w == 0.0) {
        if (b_over_l == 0.0) return std::sqrt((ln - 1.0) / ln);
        return std::numeric_limits<double>::infinity();
    }
    return std::sqrt(((ln - 1.0) / ln * w + b_over_l) / w);
}

namespace detail {

inline double split_rhat_of_pooled(std::span<const double> pooled, int n_chains, int n_draws) {
    const auto z = rank_normalize_values(pooled, n_chains, n_draws);
    return split_rhat(z);
}

}  // namespace detail

// Max of rank-normalized split-Rhat and its folded variant. Splits each chain
// in two internally; callers pass unsplit chains.
inline double rank_rhat(const ChainSet& cs, int param) {
    const ChainSet half = split_chains(cs, 2);
    const auto pooled = half.pooled_param(param);
    const double bulk = detail::split_rhat_of_pooled(pooled, half.n_chains(), half.n_draws());
    const double folded = detail::split_rhat_of_pooled(fold(pooled), half.n_chains(), half.n_draws());
    return std::max(bulk, folded);
}

// Brooks-Gelman multivariate statistic (L-1)/L + ((M+1)/M)*lambda_max(W^-1
// B/L) on pre-split chains. Requires more draws than parameters so the
// pooled within-chain covariance is invertible.
inline double multivariate_rhat(const ChainSet& cs) {
    const int m = cs.n_chains();
    const int l = cs.n_draws();
    const int k = cs.n_params();
    if (l <= k)
        throw Error("multivariate_rhat: need more draws than parameters (have " + std::to_string(l) + " draws, " +
                    std::to_string(k) + " parameters); subset the parameters first");

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k, k);
    Eigen::MatrixXd chain_means(m, k);
    for (int n = 0; n < m; ++n) {
        Eigen::MatrixXd x(l, k);
        for (int s = 0; s < l; ++s)
            for (int j = 0; j < k; ++j) x(s, j) = cs.at(n, s, j);
        const Eigen::RowVectorXd mu = x.colwise().mean();
        chain_means.row(n) = mu;
        const Eigen::MatrixXd centered = x.rowwise() - mu;
        w += centered.transpose() * centered / static_cast<double>(l - 1);
    }
    w /= static_cast<double>(m);

    const Eigen::RowVectorXd grand = chain_means.colwise().mean();
    const Eigen::MatrixXd mc = chain_means.rowwise() - grand;
    const Eigen::MatrixXd b_over_l = mc.transpose() * mc / static_cast<double>(m - 1);

    // symmetrize against accumulation noise before the generalized solve
    const Eigen::MatrixXd ws = 0.5 * (w + w.transpose());
    const Eigen::MatrixXd bs = 0.5 * (b_over_l + b_over_l.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(ws);
    if (llt.info() != Eigen::Success)
        throw Error("multivariate_rhat: within-chain covariance is singular; subset the parameters first");
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(bs, ws);
    if (solver.info() != Eigen::Success) throw Error("multivariate_rhat: eigensolver failed");
    const double lambda_max = solver.eigenvalues().maxCoeff();

    const double ln = static_cast<double>(l);
    const double mn = static_cast<double>(m);
    return (ln - 1.0) / ln + (mn + 1.0) / mn * lambda_max;
}

enum class EssFlag { ok, constant, capped };

struct EssResult {
    double value = 0.0;
    EssFlag flag = EssFlag::ok;
};

namespace detail {

// Lazy per-chain autocovariance (denominator L, Stan convention).
class Autocov {
  public:
    explicit Autocov(std::vector<double> x) : x_(std::move(x)) {
        const double mu = mean(x_);
        for (auto& v : x_) v -= mu;
    }
    double at(int lag) {
        if (lag >= static_cast<int>(x_.size())) return 0.0;
        while (static_cast<int>(memo_.size()) <= lag) {
            const int t = static_cast<int>(memo_.size());
            double s = 0.0;
            for (std::size_t i = 0; i + t < x_.size(); ++i) s += x_[i] * x_[i + t];
            memo_.push_back(s / static_cast<double>(x_.size()));
        }
        return memo_[lag];
    }

  private:
    std::vector<double> x_;
    std::vector<double> memo_;
};

// Combined-chain ESS with Geyer's initial monotone positive sequence
// truncation. Expects pre-split chains.
inline EssResult ess_of_chains(const std::vector<std::vector<double>>& chains, double cap) {
    const int m = static_cast<int>(chains.size());
    const int l = static_cast<int>(chains[0].size());
    const double total = static_cast<double>(m) * l;

    std::vector<Autocov> acov;
    acov.reserve(m);
    std::vector<double> chain_means(m), chain_vars(m);
    for (int c = 0; c < m; ++c) {
        chain_means[c] = mean(chains[c]);
        acov.emplace_back(chains[c]);
        chain_vars[c] = acov[c].at(0) * l / (l - 1.0);
    }
    const double mean_var = mean(chain_vars);
    double var_plus = mean_var * (l - 1.0) / l;
    if (m > 1) var_plus += variance(chain_means);
    if (var_plus <= 0.0) return {total, EssFlag::constant};

    auto mean_acov = [&](int lag) {
        double s = 0.0;
        for (auto& a : acov) s += a.at(lag);
        return s / m;
    };

    // Geyer's initial positive sequence over paired lags, leaving the last
    // pair as a bias term for antithetic chains, then the initial monotone
    // correction.
    std::vector<double> rho(l + 2, 0.0);
    double rho_even = 1.0;
    rho[0] = rho_even;
    double rho_odd = 1.0 - (mean_var - mean_acov(1)) / var_plus;
    rho[1] = rho_odd;
    int s = 1;
    while (s < l - 4 && rho_even + rho_odd > 0.0) {
        rho_even = 1.0 - (mean_var - mean_acov(s + 1)) / var_plus;
        rho_odd = 1.0 - (mean_var - mean_acov(s + 2)) / var_plus;
        if (rho_even + rho_odd >= 0.0) {
            rho[s + 1] = rho_even;
            rho[s + 2] = rho_odd;
        }
        s += 2;
    }
    const int max_s = s;
    if (rho_even > 0.0) rho[max_s + 1] = rho_even;

    for (int t = 1; t <= max_s - 3; t += 2) {
        if (rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t]) {
            rho[t + 1] = (rho[t - 1] + rho[t]) / 2.0;
            rho[t + 2] = rho[t + 1];
        }
    }

    double tau = -1.0 + rho[max_s + 1];
    for (int t = 0; t < max_s; ++t) tau += 2.0 * rho[t];
    if (tau <= 0.0) return {cap, EssFlag::capped};
    const double ess = total / tau;
    if (ess > cap) return {cap, EssFlag::capped};
    return {ess, EssFlag::ok};
}

inline bool is_constant(std::span<const double> v) {
    for (double x : v)
        if (x != v[0]) return false;
    return true;
}

}  // namespace detail

/// ESS of the rank-normalized draws. Expects pre-split chains.
inline EssResult bulk_ess(const ChainSet& cs, int param) {
    if (cs.n_draws() < 8) throw Error("bulk_ess: need at least 8 draws per (split) chain");
    const double total = static_cast<double>(cs.n_chains()) * cs.n_draws();
    const auto pooled = cs.pooled_param(param);
    if (detail::is_constant(pooled)) return {total, EssFlag::constant};
    const auto z = rank_normalize_values(pooled, cs.n_chains(), cs.n_draws());
    return detail::ess_of_chains(z, 10.0 * total);
}

/// Min ESS of the 5% / 95% exceedance indicators (pooled empirical
/// quantiles). Expects pre-split chains.
inline EssResult tail_ess(const ChainSet& cs, int param) {
    if (cs.n_draws() < 8) throw Error("tail_ess: need at least 8 draws per (split) chain");
    const double total = static_cast<double>(cs.n_chains()) * cs.n_draws();
    auto pooled = cs.pooled_param(param);
    if (detail::is_constant(pooled)) return {total, EssFlag::constant};
    std::sort(pooled.begin(), pooled.end());
    const double q05 = quantile_sorted(pooled, 0.05);
    const double q95 = quantile_sorted(pooled, 0.95);

    auto indicator_ess = [&](auto&& pred) -> EssResult {
        std::vector<std::vector<double>> ind(cs.n_chains(), std::vector<double>(cs.n_draws()));
        bool all_same = true;
        const double first = pred(cs.at(0, 0, param)) ? 1.0 : 0.0;
        for (int n = 0; n < cs.n_chains(); ++n)
            for (int s = 0; s < cs.n_draws(); ++s) {
                ind[n][s] = pred(cs.at(n, s, param)) ? 1.0 : 0.0;
                all_same = all_same && ind[n][s] == first;
            }
        if (all_same) return {total, EssFlag::constant};
        return detail::ess_of_chains(ind, 10.0 * total);
    };
    const EssResult lo = indicator_ess([&](double x) { return x <= q05; });
    const EssResult hi = indicator_ess([&](double x) { return x >= q95; });
    return lo.value <= hi.value ? lo : hi;
}

struct ParamDiagnostics {
    std::string name;
    double rank_rhat = 0.0;
    EssResult bulk;
    EssResult tail;
};

struct DiagnosticsReport {
    std::vector<ParamDiagnostics> per_param;
    std::optional<double> multivariate_rhat;
    std::string multivariate_note;  // set when the statistic was not computable

    double max_rank_rhat() const {
        double mx = 0.0;
        for (const auto& p : per_param) mx = std::max(mx, p.rank_rhat);
        return mx;
    }
    double min_bulk_ess() const {
        double mn = std::numeric_limits<double>::infinity();
        for (const auto& p : per_param) mn = std::min(mn, p.bulk.value);
        return mn;
    }
    double min_tail_ess() const {
        double mn = std::numeric_limits<double>::infinity();
        for (const auto& p : per_param) mn = std::min(mn, p.tail.value);
        return mn;
    }
};

// Full baseline report: rank-Rhat per parameter (split internally), ESS and
// multivariate Rhat on chains split in two.
inline DiagnosticsReport diagnose(const ChainSet& cs) {
    DiagnosticsReport rep;
    const ChainSet half = split_chains(cs, 2);
    rep.per_param.reserve(cs.n_params());
    for (int k = 0; k < cs.n_params(); ++k) {
        ParamDiagnostics pd;
        pd.name = cs.param_names()[k];
        pd.rank_rhat = rank_rhat(cs, k);
        pd.bulk = bulk_ess(half, k);
        pd.tail = tail_ess(half, k);
        rep.per_param.push_back(std::move(pd));
    }
    try {
        rep.multivariate_rhat = multivariate_rhat(half);
    } catch (const Error& e) {
        rep.multivariate_note = e.what();
    }
    return rep;
}

}  // namespace rstar

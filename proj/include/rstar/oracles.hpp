#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "rstar/generators.hpp"

namespace rstar {

struct Simplex {
    std::vector<double> p;

    void validate() const {
        double total = 0.0;
        for (double v : p) {
            if (v < 0.0) throw Error("Simplex: negative probability");
            total += v;
        }
        if (std::fabs(total - 1.0) > 1e-12) throw Error("Simplex: probabilities sum to " + std::to_string(total));
    }
};

// Evaluable-and-sampleable chain densities for the optimal-classifier oracle.
// Comparisons are always on log scale.

struct MvnDensity {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
};

struct StudentTDensity {
    Eigen::VectorXd mu;
    Eigen::MatrixXd shape;
    double dof = 3.0;
};

struct Ar1MarginalDensity {
    double rho = 0.0;
    double sigma = 1.0;  // innovation SD; marginal variance sigma^2/(1-rho^2)
};

struct CauchyIidDensity {
    double loc = 0.0;
    double scale = 1.0;
    int dim = 1;
};

struct DiscreteDensity {
    Simplex pi;  // states encoded as reals 1..D
};

using DensitySpec = std::variant<MvnDensity, StudentTDensity, Ar1MarginalDensity, CauchyIidDensity, DiscreteDensity>;

namespace detail {

struct PreparedDensity {
    const DensitySpec* spec;
    Eigen::LLT<Eigen::MatrixXd> llt;  // MVN / Student-t factor
    double log_norm = 0.0;

    explicit PreparedDensity(const DensitySpec& s) : spec(&s) {
        if (const auto* mvn = std::get_if<MvnDensity>(&s)) {
            llt.compute(mvn->sigma);
            if (llt.info() != Eigen::Success) throw Error("bayes_optimal_rstar: MVN covariance not positive-definite");
            const int k = static_cast<int>(mvn->mu.size());
            double log_det = 0.0;
            for (int i = 0; i < k; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
            log_norm = -0.5 * (k * std::log(2.0 * pi()) + log_det);
        } else if (const auto* st = std::get_if<StudentTDensity>(&s)) {
            llt.compute(st->shape);
            if (llt.info() != Eigen::Success) throw Error("bayes_optimal_rstar: shape matrix not positive-definite");
            const int k = static_cast<int>(st->mu.size());
            double log_det = 0.0;
            for (int i = 0; i < k; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
            log_norm = std::lgamma(0.5 * (st->dof + k)) - std::lgamma(0.5 * st->dof) -
                       0.5 * k * std::log(st->dof * pi()) - 0.5 * log_det;
        }
    }

    double log_density(std::span<const double> x) const {
        if (const auto* mvn = std::get_if<MvnDensity>(spec)) {
            Eigen::Map<const Eigen::VectorXd> xv(x.data(), x.size());
            const Eigen::VectorXd d = xv - mvn->mu;
            return log_norm - 0.5 * d.dot(llt.solve(d));
        }
        if (const auto* st = std::get_if<StudentTDensity>(spec)) {
            Eigen::Map<const Eigen::VectorXd> xv(x.data(), x.size());
            const Eigen::VectorXd d = xv - st->mu;
            const double q = d.dot(llt.solve(d));
            return log_norm - 0.5 * (st->dof + x.size()) * std::log1p(q / st->dof);
        }
        if (const auto* ar = std::get_if<Ar1MarginalDensity>(spec)) {
            const double var = ar->sigma * ar->sigma / (1.0 - ar->rho * ar->rho);
            return -0.5 * (std::log(2.0 * pi() * var) + x[0] * x[0] / var);
        }
        if (const auto* ca = std::get_if<CauchyIidDensity>(spec)) {
            double ld = 0.0;
            for (double xi : x) {
                const double z = (xi - ca->loc) / ca->scale;
                ld += -std::log(pi() * ca->scale) - std::log1p(z * z);
            }
            return ld;
        }
        const auto& disc = std::get<DiscreteDensity>(*spec);
        const int state = static_cast<int>(std::lround(x[0])) - 1;
        if (state < 0 || state >= static_cast<int>(disc.pi.p.size()))
            return -std::numeric_limits<double>::infinity();
        const double p = disc.pi.p[state];
        return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    }

    std::vector<double> sample(Rng& rng) const {
        if (const auto* mvn = std::get_if<MvnDensity>(spec)) {
            const int k = static_cast<int>(mvn->mu.size());
            Eigen::VectorXd z(k);
            for (int i = 0; i < k; ++i) z(i) = rng.normal();
            const Eigen::VectorXd x = mvn->mu + Eigen::MatrixXd(llt.matrixL()) * z;
            return {x.data(), x.data() + k};
        }
        if (const auto* st = std::get_if<StudentTDensity>(spec)) {
            const int k = static_cast<int>(st->mu.size());
            Eigen::VectorXd z(k);
            for (int i = 0; i < k; ++i) z(i) = rng.normal();
            const double w = rng.chi_squared(st->dof);
            const Eigen::VectorXd x = st->mu + Eigen::MatrixXd(llt.matrixL()) * z * std::sqrt(st->dof / w);
            return {x.data(), x.data() + k};
        }
        if (const auto* ar = std::get_if<Ar1MarginalDensity>(spec))
            return {rng.normal(0.0, ar->sigma / std::sqrt(1.0 - ar->rho * ar->rho))};
        if (const auto* ca = std::get_if<CauchyIidDensity>(spec)) {
            std::vector<double> x(ca->dim);
            for (auto& v : x) v = ca->loc + ca->scale * rng.cauchy();
            return x;
        }
        const auto& disc = std::get<DiscreteDensity>(*spec);
        return {static_cast<double>(rng.categorical(disc.pi.p.data(), static_cast<int>(disc.pi.p.size())) + 1)};
    }
};

}  // namespace detail

inline double log_density(const DensitySpec& spec, std::span<const double> x) {
    return detail::PreparedDensity(spec).log_density(x);
}

struct OptimalRStar {
    double r_star = 0.0;
    double accuracy = 0.0;
    double mc_se = 0.0;  // binomial standard error on the R* scale
    int n_mc = 0;
};

// Monte Carlo estimate of the best achievable R*: draw points with uniform
// chain priors, classify each to the max-likelihood chain (ties to the lowest
// index), scale the accuracy by N.
inline OptimalRStar bayes_optimal_rstar(const std::vector<DensitySpec>& densities, int n_mc = 10000,
                                        std::uint64_t seed = 0) {
    const int n = static_cast<int>(densities.size());
    if (n < 2) throw Error("bayes_optimal_rstar: need at least 2 densities");
    std::vector<detail::PreparedDensity> prepared;
    prepared.reserve(n);
    for (const auto& d : densities) prepared.emplace_back(d);

    Rng rng(seed);
    int correct = 0;
    for (int i = 0; i < n_mc; ++i) {
        const int c = static_cast<int>(rng.uniform_int(n));
        const auto x = prepared[c].sample(rng);
        int best = 0;
        double best_ld = prepared[0].log_density(x);
        for (int j = 1; j < n; ++j) {
            const double ld = prepared[j].log_density(x);
            if (ld > best_ld) {
                best_ld = ld;
                best = j;
            }
        }
        correct += best == c;
    }
    OptimalRStar out;
    out.n_mc = n_mc;
    out.accuracy = static_cast<double>(correct) / n_mc;
    out.r_star = n * out.accuracy;
    out.mc_se = n * std::sqrt(out.accuracy * (1.0 - out.accuracy) / n_mc);
    return out;
}

struct QuantileR2 {
    double r2 = 0.0;
    bool low_reliability = false;  // sample smaller than 1000
    bool degenerate = false;       // constant sample
};

// R^2 of regressing true distribution quantiles on sample-estimated ones over
// a fine percentile grid (default 0.1%..99.9% step 0.1%).
inline QuantileR2 quantile_r2(std::vector<double> sample, const std::function<double(double)>& target_quantile,
                              double grid_step = 0.001) {
    if (sample.empty()) throw Error("quantile_r2: empty sample");
    QuantileR2 out;
    out.low_reliability = sample.size() < 1000;
    std::sort(sample.begin(), sample.end());
    if (sample.front() == sample.back()) {
        out.degenerate = true;
        return out;
    }
    std::vector<double> est, truth;
    for (double p = grid_step; p < 1.0 - grid_step / 2; p += grid_step) {
        est.push_back(quantile_sorted(sample, p));
        truth.push_back(target_quantile(p));
    }
    const double r = pearson_correlation(est, truth);
    out.r2 = r * r;
    return out;
}

/// Mean quantile-R^2 across the parameters of a ChainSet (pooled draws).
inline QuantileR2 mean_quantile_r2(const ChainSet& cs, const std::function<double(double)>& target_quantile,
                                   double grid_step = 0.001) {
    QuantileR2 out;
    double total = 0.0;
    for (int k = 0; k < cs.n_params(); ++k) {
        const auto one = quantile_r2(cs.pooled_param(k), target_quantile, grid_step);
        out.low_reliability = out.low_reliability || one.low_reliability;
        out.degenerate = out.degenerate || one.degenerate;
        total += one.r2;
    }
    out.r2 = total / cs.n_params();
    return out;
}

namespace detail {

inline void check_irreducible_aperiodic(const TransitionMatrix& tm) {
    const int d = tm.n_states;
    // strong connectivity via forward and backward reachability from state 0
    auto reach = [&](bool forward) {
        std::vector<char> seen(d, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < d; ++v) {
                const double w = forward ? tm.at(u, v) : tm.at(v, u);
                if (w > 0.0 && !seen[v]) {
                    seen[v] = 1;
                    stack.push_back(v);
                }
            }
        }
        return seen;
    };
    const auto fwd = reach(true), bwd = reach(false);
    for (int v = 0; v < d; ++v)
        if (!fwd[v] || !bwd[v])
            throw Error("stationary_distribution: chain is reducible (state " + std::to_string(v + 1) +
                        " not in a single communicating class)");

    // period = gcd over edges (u, v) of level[u] + 1 - level[v], BFS from 0
    std::vector<int> level(d, -1);
    level[0] = 0;
    std::vector<int> queue{0};
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        const int u = queue[qi];
        for (int v = 0; v < d; ++v)
            if (tm.at(u, v) > 0.0 && level[v] < 0) {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
    }
    int period = 0;
    for (int u = 0; u < d; ++u)
        for (int v = 0; v < d; ++v)
            if (tm.at(u, v) > 0.0) period = std::gcd(period, std::abs(level[u] + 1 - level[v]));
    if (period != 1)
        throw Error("stationary_distribution: chain is periodic with period " + std::to_string(period));
}

}  // namespace detail

// Stationary simplex of an irreducible aperiodic transition matrix: power
// iteration to residual 1e-12, cross-checked against a direct linear solve.
inline Simplex stationary_distribution(const TransitionMatrix& tm) {
    tm.validate();
    detail::check_irreducible_aperiodic(tm);
    const int d = tm.n_states;

    std::vector<double> cur(d, 1.0 / d), next(d);
    double residual = 1.0;
    for (int it = 0; it < 1000000 && residual > 1e-12; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) next[j] += cur[i] * tm.at(i, j);
        double total = 0.0;
        for (double v : next) total += v;
        for (auto& v : next) v /= total;
        residual = 0.0;
        for (int j = 0; j < d; ++j) residual = std::max(residual, std::fabs(next[j] - cur[j]));
        cur = next;
    }
    if (residual > 1e-12) throw Error("stationary_distribution: power iteration did not converge");

    // cross-check: solve (P^T - I) pi = 0 with the normalization row
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(j, i) = tm.at(i, j) - (i == j ? 1.0 : 0.0);
    a.row(d - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
    b(d - 1) = 1.0;
    const Eigen::VectorXd solved = a.fullPivLu().solve(b);
    for (int j = 0; j < d; ++j)
        if (std::fabs(solved(j) - cur[j]) > 1e-10)
            throw Error("stationary_distribution: power iteration and linear solve disagree");

    Simplex out{cur};
    out.validate();
    return out;
}

}  // namespace rstar

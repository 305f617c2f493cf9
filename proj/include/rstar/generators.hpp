#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "rstar/chain.hpp"
#include "rstar/rng.hpp"

namespace rstar {

// All generators are deterministic per seed; chains use per-chain derived
// streams so they can be produced in any order.

struct Ar1Config {
    double rho = 0.3;
    std::vector<double> sigmas;  // innovation SD per chain
    int n_draws = 2000;
    double x0 = 0.0;
};

/// N independent AR(1) paths x_t = rho*x_{t-1} + eps_t, eps ~ N(0, sigma_n).
/// rho = 1 admitted deliberately (random-walk, non-stationary).
inline ChainSet gen_ar1(const Ar1Config& cfg, std::uint64_t seed) {
    if (std::fabs(cfg.rho) > 1.0) throw Error("gen_ar1: |rho| must be <= 1");
    const int n = static_cast<int>(cfg.sigmas.size());
    if (n < 2) throw Error("gen_ar1: need at least 2 chains");
    for (double s : cfg.sigmas)
        if (s <= 0.0) throw Error("gen_ar1: sigmas must be positive");
    std::vector<double> draws(static_cast<std::size_t>(n) * cfg.n_draws);
    for (int c = 0; c < n; ++c) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        double x = cfg.x0;
        for (int s = 0; s < cfg.n_draws; ++s) {
            x = cfg.rho * x + rng.normal(0.0, cfg.sigmas[c]);
            draws[static_cast<std::size_t>(c) * cfg.n_draws + s] = x;
        }
    }
    return {n, cfg.n_draws, 1, std::move(draws)};
}

namespace detail {

inline Eigen::MatrixXd cholesky_or_throw(const Eigen::MatrixXd& sigma, const std::string& who) {
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw Error(who + ": covariance is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw Error(who + ": covariance is not positive-definite");
    return llt.matrixL();
}

}  // namespace detail

/// Independent draws x = L z per chain, chain-specific covariance.
inline ChainSet gen_mvn(const std::vector<Eigen::MatrixXd>& sigma_per_chain, int n_draws, std::uint64_t seed) {
    const int n = static_cast<int>(sigma_per_chain.size());
    if (n < 2) throw Error("gen_mvn: need at least 2 chains");
    const int k = static_cast<int>(sigma_per_chain[0].rows());
    std::vector<Eigen::MatrixXd> chol;
    chol.reserve(n);
    for (const auto& s : sigma_per_chain) {
        if (s.rows() != k || s.cols() != k) throw Error("gen_mvn: covariance dimensions differ across chains");
        chol.push_back(detail::cholesky_or_throw(s, "gen_mvn"));
    }
    std::vector<double> draws(static_cast<std::size_t>(n) * n_draws * k);
    Eigen::VectorXd z(k);
    for (int c = 0; c < n; ++c) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        for (int s = 0; s < n_draws; ++s) {
            for (int j = 0; j < k; ++j) z(j) = rng.normal();
            const Eigen::VectorXd x = chol[c] * z;
            for (int j = 0; j < k; ++j)
                draws[(static_cast<std::size_t>(c) * n_draws + s) * k + j] = x(j);
        }
    }
    return {n, n_draws, k, std::move(draws)};
}

/// Wishart(I, dof) draw via the Bartlett decomposition: A = G G^T with
/// chi-distributed diagonal and standard-normal subdiagonal.
inline Eigen::MatrixXd gen_wishart_precision(int dim, double dof, std::uint64_t seed) {
    if (dof < dim) throw Error("gen_wishart_precision: dof must be >= dim (else singular)");
    Rng rng(seed);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        g(i, i) = std::sqrt(rng.chi_squared(dof - i));
        for (int j = 0; j < i; ++j) g(i, j) = rng.normal();
    }
    return g * g.transpose();
}

enum class CauchyParam { nominal, alternative };

// Standard Cauchy components per draw. The nominal form uses the inverse
// CDF; the alternative builds the same law as a scale mixture of Gaussians
// x = a/sqrt(b) with a ~ N(0,1), b ~ Gamma(0.5, 0.5) (shape-rate).
inline ChainSet gen_cauchy(int dim, int n_draws, int n_chains, CauchyParam param, std::uint64_t seed) {
    std::vector<double> draws(static_cast<std::size_t>(n_chains) * n_draws * dim);
    for (int c = 0; c < n_chains; ++c) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        for (int s = 0; s < n_draws; ++s)
            for (int j = 0; j < dim; ++j) {
                double x;
                if (param == CauchyParam::nominal) {
                    x = rng.cauchy();
                } else {
                    const double a = rng.normal();
                    const double b = rng.gamma(0.5, 0.5);
                    x = a / std::sqrt(b);
                }
                draws[(static_cast<std::size_t>(c) * n_draws + s) * dim + j] = x;
            }
    }
    return {n_chains, n_draws, dim, std::move(draws)};
}

struct TransitionMatrix {
    int n_states = 0;
    std::vector<double> p;  // row-major, row-stochastic

    double at(int i, int j) const { return p[static_cast<std::size_t>(i) * n_states + j]; }

    void validate() const {
        if (n_states < 1 || static_cast<int>(p.size()) != n_states * n_states)
            throw Error("TransitionMatrix: bad dimensions");
        for (int i = 0; i < n_states; ++i) {
            double row = 0.0;
            for (int j = 0; j < n_states; ++j) {
                if (at(i, j) < 0.0) throw Error("TransitionMatrix: negative entry in row " + std::to_string(i + 1));
                row += at(i, j);
            }
            if (std::fabs(row - 1.0) > 1e-12)
                throw Error("TransitionMatrix: row " + std::to_string(i + 1) + " sums to " + std::to_string(row));
        }
    }
};

/// Simulate one first-order Markov chain per transition matrix, starting at
/// x0 (1-based state). States are emitted as reals 1..D.
inline ChainSet gen_discrete_markov(const std::vector<TransitionMatrix>& per_chain, int n_draws, int x0,
                                    std::uint64_t seed) {
    const int n = static_cast<int>(per_chain.size());
    if (n < 2) throw Error("gen_discrete_markov: need at least 2 chains");
    const int d = per_chain[0].n_states;
    for (const auto& tm : per_chain) {
        tm.validate();
        if (tm.n_states != d) throw Error("gen_discrete_markov: state counts differ across chains");
    }
    if (x0 < 1 || x0 > d) throw Error("gen_discrete_markov: x0 out of range");
    std::vector<double> draws(static_cast<std::size_t>(n) * n_draws);
    for (int c = 0; c < n; ++c) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        int state = x0 - 1;
        for (int s = 0; s < n_draws; ++s) {
            state = rng.categorical(per_chain[c].p.data() + static_cast<std::size_t>(state) * d, d);
            draws[static_cast<std::size_t>(c) * n_draws + s] = static_cast<double>(state + 1);
        }
    }
    return {n, n_draws, 1, std::move(draws), {"state"}};
}

/// Row-stochastic matrix with Dirichlet(1,...,1) rows.
inline TransitionMatrix gen_dirichlet_transition(int n_states, std::uint64_t seed) {
    Rng rng(seed);
    TransitionMatrix tm;
    tm.n_states = n_states;
    tm.p.reserve(static_cast<std::size_t>(n_states) * n_states);
    const std::vector<double> alpha(n_states, 1.0);
    for (int i = 0; i < n_states; ++i) {
        const auto row = rng.dirichlet(alpha);
        tm.p.insert(tm.p.end(), row.begin(), row.end());
    }
    return tm;
}

enum class TrendMode { all_chains, per_chain };

// Add a centered linear drift to the selected dimensions:
// x'[s] = x[s] + trend * (2s/S - 1), so the mean rises by 2*trend over the
// run. per_chain mode takes one trend per chain.
inline ChainSet gen_trending(const ChainSet& base, const std::vector<double>& trends, const std::vector<int>& dims,
                             TrendMode mode) {
    if (mode == TrendMode::all_chains && trends.size() != 1)
        throw Error("gen_trending: all_chains mode takes exactly one trend");
    if (mode == TrendMode::per_chain && static_cast<int>(trends.size()) != base.n_chains())
        throw Error("gen_trending: per_chain mode takes one trend per chain");
    for (int d : dims)
        if (d < 0 || d >= base.n_params()) throw Error("gen_trending: dimension out of range");
    std::vector<double> draws(base.raw());
    const int s_total = base.n_draws();
    const int k = base.n_params();
    for (int c = 0; c < base.n_chains(); ++c) {
        const double trend = mode == TrendMode::all_chains ? trends[0] : trends[c];
        for (int s = 0; s < s_total; ++s) {
            const double drift = trend * (2.0 * (s + 1) / s_total - 1.0);
            for (int d : dims) draws[(static_cast<std::size_t>(c) * s_total + s) * k + d] += drift;
        }
    }
    return {base.n_chains(), s_total, k, std::move(draws), base.param_names(), base.meta()};
}

inline ChainSet gen_trending(const ChainSet& base, double trend, const std::vector<int>& dims) {
    return gen_trending(base, std::vector<double>{trend}, dims, TrendMode::all_chains);
}

/// Bivariate normal draws with unit marginals whose correlation ramps
/// linearly from -rho_max to +rho_max over the run.
inline ChainSet gen_trending_correlation(double rho_max, int n_draws, int n_chains, std::uint64_t seed) {
    if (!(rho_max >= 0.0 && rho_max < 1.0)) throw Error("gen_trending_correlation: rho_max must be in [0, 1)");
    std::vector<double> draws(static_cast<std::size_t>(n_chains) * n_draws * 2);
    for (int c = 0; c < n_chains; ++c) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        for (int s = 0; s < n_draws; ++s) {
            const double rho = n_draws == 1 ? -rho_max : -rho_max + 2.0 * rho_max * s / (n_draws - 1);
            const double z1 = rng.normal(), z2 = rng.normal();
            draws[(static_cast<std::size_t>(c) * n_draws + s) * 2] = z1;
            draws[(static_cast<std::size_t>(c) * n_draws + s) * 2 + 1] = rho * z1 + std::sqrt(1.0 - rho * rho) * z2;
        }
    }
    return {n_chains, n_draws, 2, std::move(draws)};
}

struct StudentTConfig {
    int dim = 1;
    double dof = 3.0;
    Eigen::MatrixXd shape;  // positive-definite; covariance = dof/(dof-2)*shape when dof > 2
};

/// Multivariate Student-t chains, x = L z sqrt(dof/w), w ~ chi^2_dof; one
/// config per chain.
inline ChainSet gen_student_t(const std::vector<StudentTConfig>& per_chain, int n_draws, std::uint64_t seed) {
    const int n = static_cast<int>(per_chain.size());
    if (n < 2) throw Error("gen_student_t: need at least 2 chains");
    const int k = per_chain[0].dim;
    std::vector<Eigen::MatrixXd> chol;
    for (const auto& cfg : per_chain) {
        if (cfg.dim != k) throw Error("gen_student_t: dimensions differ across chains");
        if (cfg.dof <= 0.0) throw Error("gen_student_t: dof must be positive");
        chol.push_back(detail::cholesky_or_throw(cfg.shape, "gen_student_t"));
    }
    std::vector<double> draws(static_cast<std::size_t>(n) * n_draws * k);
    Eigen::VectorXd z(k);
    for (int c = 0; c < n; ++c) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        for (int s = 0; s < n_draws; ++s) {
            for (int j = 0; j < k; ++j) z(j) = rng.normal();
            const double w = rng.chi_squared(per_chain[c].dof);
            const Eigen::VectorXd x = chol[c] * z * std::sqrt(per_chain[c].dof / w);
            for (int j = 0; j < k; ++j)
                draws[(static_cast<std::size_t>(c) * n_draws + s) * k + j] = x(j);
        }
    }
    return {n, n_draws, k, std::move(draws)};
}

/// LKJ(eta) correlation matrix via the onion method.
inline Eigen::MatrixXd gen_lkj(int dim, double eta, std::uint64_t seed) {
    if (dim < 1) throw Error("gen_lkj: dim must be >= 1");
    if (eta <= 0.0) throw Error("gen_lkj: eta must be positive");
    Rng rng(seed);
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(dim, dim);
    if (dim == 1) return r;

    double beta = eta + (dim - 2.0) / 2.0;
    const double u = rng.beta(beta, beta);
    r(0, 1) = r(1, 0) = 2.0 * u - 1.0;

    for (int k = 2; k < dim; ++k) {
        beta -= 0.5;
        const double y = rng.beta(k / 2.0, beta);
        Eigen::VectorXd z(k);
        for (int j = 0; j < k; ++j) z(j) = rng.normal();
        z *= std::sqrt(y) / z.norm();
        const Eigen::MatrixXd block = r.topLeftCorner(k, k);
        Eigen::LLT<Eigen::MatrixXd> llt(block);
        if (llt.info() != Eigen::Success) throw Error("gen_lkj: intermediate matrix not positive-definite");
        const Eigen::VectorXd w = Eigen::MatrixXd(llt.matrixL()) * z;
        r.block(0, k, k, 1) = w;
        r.block(k, 0, 1, k) = w.transpose();
    }
    return r;
}

}  // namespace rstar

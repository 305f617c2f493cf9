#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rstar/diagnostics.hpp"
#include "rstar/generators.hpp"
#include "rstar/oracles.hpp"
#include "rstar/rstar.hpp"

namespace rstar {

using json = nlohmann::json;

// A named, overridable synthetic-data configuration. `generate` consumes the
// merged config and a draw seed; `densities` (when the target law is known
// and stationary) feeds the optimal-classifier oracle. Structural randomness
// (random matrices) comes from the config's structure_seed so it is shared
// across replicates.
struct Preset {
    std::string name;
    std::string description;
    json defaults;
    std::function<ChainSet(const json&, std::uint64_t)> generate;
    std::function<std::vector<DensitySpec>(const json&)> densities;  // may be empty
};

namespace detail {

inline std::vector<double> sigmas_from_config(const json& cfg) {
    if (cfg.contains("sigmas") && !cfg["sigmas"].is_null()) return cfg["sigmas"].get<std::vector<double>>();
    const int n = cfg.value("N", 4);
    std::vector<double> sigmas(n, 1.0);
    sigmas.back() = cfg.value("sigma_low", 1.0 / 3.0);
    return sigmas;
}

inline TransitionMatrix small_p1() {
    return {4,
            {0.0, 0.5, 0.5, 0.0,  //
             0.5, 0.0, 1.0 / 3.0, 1.0 / 6.0,  //
             0.25, 0.25, 0.25, 0.25,  //
             0.0, 1.0, 0.0, 0.0}};
}

inline TransitionMatrix small_p2() {
    return {4,
            {0.0, 0.5, 0.5, 0.0,  //
             0.5, 0.0, 1.0 / 3.0, 1.0 / 6.0,  //
             0.625, 0.125, 0.125, 0.125,  //
             0.5, 0.5, 0.0, 0.0}};
}

inline TransitionMatrix small_p3() {
    return {4,
            {0.0, 0.5, 0.5, 0.0,  //
             0.5, 0.0, 1.0 / 3.0, 1.0 / 6.0,  //
             1.0, 0.0, 0.0, 0.0,  //
             1.0, 0.0, 0.0, 0.0}};
}

inline ChainSet gen_discrete_small(const json& cfg, const TransitionMatrix& fourth, std::uint64_t seed) {
    const int n = cfg.value("N", 4);
    std::vector<TransitionMatrix> per_chain(n - 1, small_p1());
    per_chain.push_back(fourth);
    return gen_discrete_markov(per_chain, cfg.value("S", 10000), cfg.value("x0", 1), seed);
}

inline std::vector<DensitySpec> discrete_densities(int n, const TransitionMatrix& shared,
                                                   const TransitionMatrix& fourth) {
    std::vector<DensitySpec> out(n - 1, DiscreteDensity{stationary_distribution(shared)});
    out.push_back(DiscreteDensity{stationary_distribution(fourth)});
    return out;
}

inline std::vector<int> trend_dims_from_config(const json& cfg, int k) {
    std::vector<int> dims;
    if (!cfg.contains("trend_dims") || (cfg["trend_dims"].is_string() && cfg["trend_dims"] == "all")) {
        dims.resize(k);
        std::iota(dims.begin(), dims.end(), 0);
    } else {
        for (int d : cfg["trend_dims"].get<std::vector<int>>()) dims.push_back(d - 1);  // config is 1-based
    }
    return dims;
}

inline ChainSet gen_iid_normal(int n, int s, int k, std::uint64_t seed) {
    std::vector<double> draws(static_cast<std::size_t>(n) * s * k);
    for (int c = 0; c < n; ++c) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        for (std::size_t i = 0; i < static_cast<std::size_t>(s) * k; ++i)
            draws[static_cast<std::size_t>(c) * s * k + i] = rng.normal();
    }
    return {n, s, k, std::move(draws)};
}

// Leading dim x dim block of an LKJ(eta) correlation matrix drawn at
// base_dim, so nested dimensions share structure.
inline Eigen::MatrixXd lkj_block(const json& cfg, std::uint64_t matrix_salt) {
    const int base_dim = cfg.value("base_dim", 32);
    const int dim = cfg.value("dim", 8);
    if (dim > base_dim) throw Error("preset: dim exceeds base_dim");
    const auto seed = derive_seed(cfg.value("structure_seed", 0), matrix_salt);
    return gen_lkj(base_dim, cfg.value("eta", 1.0), seed).topLeftCorner(dim, dim);
}

}  // namespace detail

inline const std::vector<Preset>& presets() {
    static const std::vector<Preset> all = [] {
        std::vector<Preset> p;

        p.push_back(Preset{
            "ar1-hetero",
            "AR(1) chains where the last chain has lower innovation SD (heterogeneous variance)",
            {{"N", 4}, {"S", 2000}, {"rho", 0.3}, {"sigma_low", 1.0 / 3.0}, {"sigmas", nullptr}},
            [](const json& cfg, std::uint64_t seed) {
                Ar1Config c;
                c.rho = cfg.value("rho", 0.3);
                c.sigmas = detail::sigmas_from_config(cfg);
                c.n_draws = cfg.value("S", 2000);
                return gen_ar1(c, seed);
            },
            [](const json& cfg) {
                const double rho = cfg.value("rho", 0.3);
                std::vector<DensitySpec> out;
                for (double s : detail::sigmas_from_config(cfg)) out.push_back(Ar1MarginalDensity{rho, s});
                return out;
            }});

        p.push_back(Preset{"normal-iid",
                           "exchangeable i.i.d. standard-normal chains (null fixture)",
                           {{"N", 4}, {"S", 2000}, {"K", 1}},
                           [](const json& cfg, std::uint64_t seed) {
                               return detail::gen_iid_normal(cfg.value("N", 4), cfg.value("S", 2000),
                                                             cfg.value("K", 1), seed);
                           },
                           [](const json& cfg) {
                               const int k = cfg.value("K", 1);
                               MvnDensity d{Eigen::VectorXd::Zero(k), Eigen::MatrixXd::Identity(k, k)};
                               return std::vector<DensitySpec>(cfg.value("N", 4), d);
                           }});

        p.push_back(Preset{
            "mvn-bivariate",
            "bivariate normal; identical marginals but the last chain has correlated dimensions",
            {{"N", 4}, {"S", 2000}, {"rho4", 0.9}},
            [](const json& cfg, std::uint64_t seed) {
                const int n = cfg.value("N", 4);
                std::vector<Eigen::MatrixXd> sigmas(n, Eigen::MatrixXd::Identity(2, 2));
                sigmas.back()(0, 1) = sigmas.back()(1, 0) = cfg.value("rho4", 0.9);
                return gen_mvn(sigmas, cfg.value("S", 2000), seed);
            },
            [](const json& cfg) {
                const int n = cfg.value("N", 4);
                Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
                Eigen::MatrixXd corr = eye;
                corr(0, 1) = corr(1, 0) = cfg.value("rho4", 0.9);
                std::vector<DensitySpec> out(n - 1, MvnDensity{Eigen::VectorXd::Zero(2), eye});
                out.push_back(MvnDensity{Eigen::VectorXd::Zero(2), corr});
                return out;
            }});

        p.push_back(Preset{
            "mvn-wishart",
            "high-dimensional normal with a Wishart-drawn precision matrix (strong correlations)",
            {{"N", 4}, {"S", 400}, {"dim", 250}, {"dof", 250}, {"structure_seed", 101}},
            [](const json& cfg, std::uint64_t seed) {
                const int dim = cfg.value("dim", 250);
                const Eigen::MatrixXd a =
                    gen_wishart_precision(dim, cfg.value("dof", 250.0), cfg.value("structure_seed", 101));
                const Eigen::MatrixXd sigma = a.llt().solve(Eigen::MatrixXd::Identity(dim, dim));
                std::vector<Eigen::MatrixXd> sigmas(cfg.value("N", 4), 0.5 * (sigma + sigma.transpose()));
                return gen_mvn(sigmas, cfg.value("S", 400), seed);
            },
            [](const json& cfg) {
                const int dim = cfg.value("dim", 250);
                const Eigen::MatrixXd a =
                    gen_wishart_precision(dim, cfg.value("dof", 250.0), cfg.value("structure_seed", 101));
                Eigen::MatrixXd sigma = a.llt().solve(Eigen::MatrixXd::Identity(dim, dim));
                sigma = 0.5 * (sigma + sigma.transpose());
                return std::vector<DensitySpec>(cfg.value("N", 4), MvnDensity{Eigen::VectorXd::Zero(dim), sigma});
            }});

        for (const bool alt : {false, true}) {
            p.push_back(Preset{
                alt ? "cauchy-alt" : "cauchy-nominal",
                alt ? "standard Cauchy components via the Gaussian scale-mixture construction"
                    : "independent standard Cauchy components via the inverse CDF",
                {{"N", 4}, {"S", 1000}, {"dim", 50}},
                [alt](const json& cfg, std::uint64_t seed) {
                    return gen_cauchy(cfg.value("dim", 50), cfg.value("S", 1000), cfg.value("N", 4),
                                      alt ? CauchyParam::alternative : CauchyParam::nominal, seed);
                },
                [](const json& cfg) {
                    return std::vector<DensitySpec>(cfg.value("N", 4),
                                                    CauchyIidDensity{0.0, 1.0, cfg.value("dim", 50)});
                }});
        }

        struct SmallCase {
            const char* name;
            TransitionMatrix (*fourth)();
        };
        for (const auto& sc : {SmallCase{"discrete-small-p1", detail::small_p1},
                               SmallCase{"discrete-small-p2", detail::small_p2},
                               SmallCase{"discrete-small-p3", detail::small_p3}}) {
            p.push_back(Preset{sc.name,
                               "4-state Markov chains; the last chain's transition matrix differs (p1 = identical)",
                               {{"N", 4}, {"S", 10000}, {"x0", 1}},
                               [fourth = sc.fourth](const json& cfg, std::uint64_t seed) {
                                   return detail::gen_discrete_small(cfg, fourth(), seed);
                               },
                               [fourth = sc.fourth](const json& cfg) {
                                   return detail::discrete_densities(cfg.value("N", 4), detail::small_p1(), fourth());
                               }});
        }

        p.push_back(Preset{
            "discrete-large",
            "20-state Markov chains with random Dirichlet(1) transition rows; last chain differs",
            {{"N", 4}, {"S", 10000}, {"n_states", 20}, {"x0", 1}, {"structure_seed", 7}, {"fourth_differs", true}},
            [](const json& cfg, std::uint64_t seed) {
                const int n = cfg.value("N", 4);
                const int d = cfg.value("n_states", 20);
                const auto ss = cfg.value("structure_seed", 7);
                const auto shared = gen_dirichlet_transition(d, derive_seed(ss, 1));
                const auto other = cfg.value("fourth_differs", true) ? gen_dirichlet_transition(d, derive_seed(ss, 2))
                                                                     : shared;
                std::vector<TransitionMatrix> per_chain(n - 1, shared);
                per_chain.push_back(other);
                return gen_discrete_markov(per_chain, cfg.value("S", 10000), cfg.value("x0", 1), seed);
            },
            [](const json& cfg) {
                const int d = cfg.value("n_states", 20);
                const auto ss = cfg.value("structure_seed", 7);
                const auto shared = gen_dirichlet_transition(d, derive_seed(ss, 1));
                const auto other = cfg.value("fourth_differs", true) ? gen_dirichlet_transition(d, derive_seed(ss, 2))
                                                                     : shared;
                return detail::discrete_densities(cfg.value("N", 4), shared, other);
            }});

        p.push_back(Preset{
            "trend-mean",
            "i.i.d. normal chains with a common linear trend added to selected dimensions",
            {{"N", 4}, {"S", 1000}, {"K", 1}, {"trend", 1.0}, {"trend_dims", "all"}},
            [](const json& cfg, std::uint64_t seed) {
                const int k = cfg.value("K", 1);
                const auto base = detail::gen_iid_normal(cfg.value("N", 4), cfg.value("S", 1000), k, seed);
                return gen_trending(base, cfg.value("trend", 1.0), detail::trend_dims_from_config(cfg, k));
            },
            nullptr});

        p.push_back(Preset{"trend-corr",
                           "bivariate normal whose correlation ramps linearly from -rho_max to +rho_max",
                           {{"N", 4}, {"S", 4000}, {"rho_max", 0.5}},
                           [](const json& cfg, std::uint64_t seed) {
                               return gen_trending_correlation(cfg.value("rho_max", 0.5), cfg.value("S", 4000),
                                                               cfg.value("N", 4), seed);
                           },
                           nullptr});

        p.push_back(Preset{"ar1-persist",
                           "equal-variance AR(1) chains at high persistence (rho = 1 is a random walk)",
                           {{"N", 4}, {"S", 1000}, {"rho", 1.0}, {"sigma", 1.0}},
                           [](const json& cfg, std::uint64_t seed) {
                               Ar1Config c;
                               c.rho = cfg.value("rho", 1.0);
                               c.sigmas.assign(cfg.value("N", 4), cfg.value("sigma", 1.0));
                               c.n_draws = cfg.value("S", 1000);
                               return gen_ar1(c, seed);
                           },
                           [](const json& cfg) {
                               const double rho = cfg.value("rho", 1.0);
                               if (std::fabs(rho) >= 1.0) return std::vector<DensitySpec>{};  // non-stationary
                               return std::vector<DensitySpec>(
                                   cfg.value("N", 4), DensitySpec{Ar1MarginalDensity{rho, cfg.value("sigma", 1.0)}});
                           }});

        p.push_back(Preset{
            "studentt-tails",
            "Student-t chains with equal covariance; the last chain's tail fatness (dof) differs",
            {{"N", 4}, {"S", 2000}, {"dim", 4}, {"nu4", 8.0}, {"nu_base", 3.0}, {"eta", 1.0},
             {"base_dim", 32}, {"structure_seed", 11}},
            [](const json& cfg, std::uint64_t seed) {
                const Eigen::MatrixXd a = detail::lkj_block(cfg, 1);
                const double nu_base = cfg.value("nu_base", 3.0);
                const double nu4 = cfg.value("nu4", 8.0);
                const int n = cfg.value("N", 4);
                std::vector<StudentTConfig> per_chain(
                    n - 1, StudentTConfig{cfg.value("dim", 4), nu_base, (nu_base - 2.0) / nu_base * a});
                per_chain.push_back(StudentTConfig{cfg.value("dim", 4), nu4, (nu4 - 2.0) / nu4 * a});
                return gen_student_t(per_chain, cfg.value("S", 2000), seed);
            },
            [](const json& cfg) {
                const Eigen::MatrixXd a = detail::lkj_block(cfg, 1);
                const double nu_base = cfg.value("nu_base", 3.0);
                const double nu4 = cfg.value("nu4", 8.0);
                const int n = cfg.value("N", 4);
                const Eigen::VectorXd mu = Eigen::VectorXd::Zero(cfg.value("dim", 4));
                std::vector<DensitySpec> out(n - 1,
                                             StudentTDensity{mu, (nu_base - 2.0) / nu_base * a, nu_base});
                out.push_back(StudentTDensity{mu, (nu4 - 2.0) / nu4 * a, nu4});
                return out;
            }});

        p.push_back(Preset{
            "lkj-joint",
            "normal chains with two different LKJ-drawn correlation structures (identical marginals)",
            {{"N", 4}, {"S", 2000}, {"dim", 8}, {"eta", 1.0}, {"base_dim", 32}, {"structure_seed", 12}},
            [](const json& cfg, std::uint64_t seed) {
                const int n = cfg.value("N", 4);
                std::vector<Eigen::MatrixXd> sigmas(n - 1, detail::lkj_block(cfg, 1));
                sigmas.push_back(detail::lkj_block(cfg, 2));
                return gen_mvn(sigmas, cfg.value("S", 2000), seed);
            },
            [](const json& cfg) {
                const int n = cfg.value("N", 4);
                const Eigen::VectorXd mu = Eigen::VectorXd::Zero(cfg.value("dim", 8));
                std::vector<DensitySpec> out(n - 1, MvnDensity{mu, detail::lkj_block(cfg, 1)});
                out.push_back(MvnDensity{mu, detail::lkj_block(cfg, 2)});
                return out;
            }});

        return p;
    }();
    return all;
}

inline const Preset& find_preset(const std::string& name) {
    for (const auto& p : presets())
        if (p.name == name) return p;
    std::string known;
    for (const auto& p : presets()) known += (known.empty() ? "" : ", ") + p.name;
    throw Error("unknown preset \"" + name + "\"; available: " + known);
}

inline json resolve_preset_config(const Preset& preset, const json& overrides) {
    json cfg = preset.defaults;
    for (const auto& [key, value] : overrides.items()) cfg[key] = value;
    return cfg;
}

// --- replicated experiments -------------------------------------------------

struct ExperimentSpec {
    std::string preset;
    json overrides = json::object();
    int replicates = 1;
    std::uint64_t seed = 0;
    std::string classifier = "both";  // gbm | rf | both
    bool split = true;
    int split_factor = 2;
    int jobs = 1;
};

struct ReplicateRow {
    int replicate = 0;
    std::uint64_t seed = 0;
    std::optional<double> r_star_gbm;
    std::optional<double> r_star_rf;
    double max_rank_rhat = 0.0;
    double min_bulk_ess = 0.0;
    double min_tail_ess = 0.0;
    std::optional<double> optimal_rstar;
};

struct ExperimentResult {
    json resolved_config;
    std::vector<ReplicateRow> rows;
};

// Generator -> diagnostics per replicate with derived seeds. The optimal R*
// is one Monte Carlo estimate per experiment (densities and config are fixed
// across replicates).
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
    if (spec.replicates < 1) throw Error("run_experiment: replicates must be >= 1");
    const Preset& preset = find_preset(spec.preset);
    const json cfg = resolve_preset_config(preset, spec.overrides);

    ExperimentResult result;
    result.resolved_config = cfg;
    result.rows.resize(spec.replicates);

    std::optional<double> optimal;
    if (preset.densities) {
        const auto densities = preset.densities(cfg);
        if (!densities.empty())
            optimal = bayes_optimal_rstar(densities, 10000, derive_seed(spec.seed, 0x0BA1E5)).r_star;
    }

    const bool run_gbm = spec.classifier == "gbm" || spec.classifier == "both";
    const bool run_rf = spec.classifier == "rf" || spec.classifier == "both";
    if (!run_gbm && !run_rf) throw Error("run_experiment: classifier must be gbm, rf or both");

    parallel_for(spec.replicates, spec.jobs, [&](int i) {
        const std::uint64_t rep_seed = derive_seed(spec.seed, static_cast<std::uint64_t>(i));
        const ChainSet cs = preset.generate(cfg, derive_seed(rep_seed, 1));

        ReplicateRow row;
        row.replicate = i + 1;
        row.seed = rep_seed;
        RStarOptions opt;
        opt.split = spec.split;
        opt.split_factor = spec.split_factor;
        opt.jobs = 1;
        if (run_gbm) {
            opt.classifier = ClassifierKind::gbm;
            opt.seed = derive_seed(rep_seed, 2);
            row.r_star_gbm = compute_rstar(cs, opt).r_star;
        }
        if (run_rf) {
            opt.classifier = ClassifierKind::rf;
            opt.seed = derive_seed(rep_seed, 3);
            row.r_star_rf = compute_rstar(cs, opt).r_star;
        }
        const DiagnosticsReport rep = diagnose(cs);
        row.max_rank_rhat = rep.max_rank_rhat();
        row.min_bulk_ess = rep.min_bulk_ess();
        row.min_tail_ess = rep.min_tail_ess();
        row.optimal_rstar = optimal;
        result.rows[i] = std::move(row);
    });
    return result;
}

inline json experiment_summary(const ExperimentResult& result) {
    auto collect = [&](auto&& get) {
        std::vector<double> v;
        for (const auto& row : result.rows) {
            const auto x = get(row);
            if (x) v.push_back(*x);
        }
        return v;
    };
    auto quantiles_json = [](const std::vector<double>& v) -> json {
        if (v.empty()) return nullptr;
        const auto q = quantile_summary(v);
        return {{"q2.5", q.q2_5}, {"q25", q.q25}, {"q50", q.q50}, {"q75", q.q75}, {"q97.5", q.q97_5}};
    };
    json out;
    out["replicates"] = result.rows.size();
    out["r_star_gbm"] = quantiles_json(collect([](const ReplicateRow& r) { return r.r_star_gbm; }));
    out["r_star_rf"] = quantiles_json(collect([](const ReplicateRow& r) { return r.r_star_rf; }));
    out["max_rank_rhat"] =
        quantiles_json(collect([](const ReplicateRow& r) { return std::optional<double>(r.max_rank_rhat); }));
    out["min_bulk_ess"] =
        quantiles_json(collect([](const ReplicateRow& r) { return std::optional<double>(r.min_bulk_ess); }));
    out["min_tail_ess"] =
        quantiles_json(collect([](const ReplicateRow& r) { return std::optional<double>(r.min_tail_ess); }));
    out["optimal_rstar"] = quantiles_json(collect([](const ReplicateRow& r) { return r.optimal_rstar; }));
    return out;
}

}  // namespace rstar

// Command-line front end: ingest draws from CSV, run the classifier-based
// convergence diagnostic alongside the classical ones, simulate named
// synthetic targets, and run replicated experiments to plot-ready CSV/JSON.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rstar/csv.hpp"
#include "rstar/diagnostics.hpp"
#include "rstar/presets.hpp"
#include "rstar/rstar.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

struct StrictThresholds {
    double rhat = 1.01;
    double ess = 400.0;
    double rstar_mean = 1.05;
};

json ess_json(const rstar::EssResult& e) {
    json j;
    j["value"] = e.value;
    switch (e.flag) {
        case rstar::EssFlag::ok: j["flag"] = "ok"; break;
        case rstar::EssFlag::constant: j["flag"] = "constant"; break;
        case rstar::EssFlag::capped: j["flag"] = "capped"; break;
    }
    return j;
}

json parse_override_value(const std::string& raw) {
    try {
        return json::parse(raw);
    } catch (const json::parse_error&) {
        return raw;  // plain string
    }
}

json overrides_from_flags(const std::vector<std::string>& sets) {
    json out = json::object();
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw rstar::Error("--set expects key=value, got \"" + kv + "\"");
        out[kv.substr(0, eq)] = parse_override_value(kv.substr(eq + 1));
    }
    return out;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw rstar::Error("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw rstar::Error("write failed for " + path.string());
}

std::string format_optional(const std::optional<double>& v) {
    return v ? rstar::format_double(*v) : std::string{};
}

int cmd_diagnose(const std::vector<std::string>& inputs, const std::string& classifier, int split_factor,
                 int rstar_draws, const std::string& decile_param, int decile_draws, std::uint64_t seed,
                 const std::string& out_dir, bool strict, const StrictThresholds& thresholds, int jobs) {
    const auto cs = inputs.size() == 1 ? rstar::load_csv(inputs[0]) : rstar::load_csv_per_chain(inputs);
    fs::create_directories(out_dir);

    const bool run_gbm = classifier == "gbm" || classifier == "both";
    const bool run_rf = classifier == "rf" || classifier == "both";
    if (!run_gbm && !run_rf) throw rstar::Error("--classifier must be gbm, rf or both");

    int decile_k = -1;
    if (!decile_param.empty()) {
        for (int k = 0; k < cs.n_params(); ++k)
            if (cs.param_names()[k] == decile_param) decile_k = k;
        if (decile_k < 0) throw rstar::Error("--deciles: no parameter named \"" + decile_param + "\"");
    }

    json report;
    report["schema_version"] = kSchemaVersion;
    report["input"] = inputs.size() == 1 ? json(inputs[0]) : json(inputs);
    report["n_chains"] = cs.n_chains();
    report["n_draws"] = cs.n_draws();
    report["n_params"] = cs.n_params();
    report["split_factor"] = split_factor;
    report["seed"] = seed;

    std::ofstream draws_csv(fs::path(out_dir) / "rstar_draws.csv");
    draws_csv << "classifier,draw,r_star\n";
    std::ofstream decile_csv;
    if (decile_k >= 0) {
        decile_csv.open(fs::path(out_dir) / "decile_rstar.csv");
        decile_csv << "classifier,decile,draw,r_star\n";
    }

    double worst_rstar_mean = 0.0;
    json rstar_block = json::object();
    for (const auto kind : {rstar::ClassifierKind::gbm, rstar::ClassifierKind::rf}) {
        if ((kind == rstar::ClassifierKind::gbm && !run_gbm) || (kind == rstar::ClassifierKind::rf && !run_rf))
            continue;
        rstar::RStarOptions opt;
        opt.classifier = kind;
        opt.split = split_factor > 1;
        opt.split_factor = std::max(split_factor, 1);
        opt.uncertainty_draws = rstar_draws;
        opt.decile_param = decile_k;
        opt.decile_draws = decile_draws;
        opt.jobs = jobs;
        opt.seed = rstar::derive_seed(seed, kind == rstar::ClassifierKind::gbm ? 1 : 2);
        const auto res = rstar::compute_rstar(cs, opt);

        json block;
        block["point"] = res.r_star;
        block["accuracy"] = res.accuracy;
        block["n_chains_effective"] = res.n_chains_effective;
        if (!res.per_decile.empty()) {
            json deciles = json::array();
            for (const auto& bin : res.per_decile) {
                json draws_mean = bin.draws.empty() ? json(nullptr) : json(rstar::mean(bin.draws));
                deciles.push_back({{"decile", bin.bin}, {"n_draws", bin.draws.size()}, {"mean", draws_mean}});
                for (std::size_t d = 0; d < bin.draws.size(); ++d)
                    decile_csv << rstar::to_string(kind) << ',' << bin.bin << ',' << (d + 1) << ','
                               << rstar::format_double(bin.draws[d]) << '\n';
            }
            block["deciles"] = std::move(deciles);
        }
        if (!res.uncertainty_draws.empty()) {
            const auto q = rstar::quantile_summary(res.uncertainty_draws);
            const double mean_draws = rstar::mean(res.uncertainty_draws);
            block["uncertainty"] = {{"draws", res.uncertainty_draws.size()},
                                    {"mean", mean_draws},
                                    {"q2.5", q.q2_5},
                                    {"q25", q.q25},
                                    {"q50", q.q50},
                                    {"q75", q.q75},
                                    {"q97.5", q.q97_5}};
            worst_rstar_mean = std::max(worst_rstar_mean, mean_draws);
            for (std::size_t i = 0; i < res.uncertainty_draws.size(); ++i)
                draws_csv << rstar::to_string(kind) << ',' << (i + 1) << ','
                          << rstar::format_double(res.uncertainty_draws[i]) << '\n';
        } else {
            worst_rstar_mean = std::max(worst_rstar_mean, res.r_star);
        }
        rstar_block[rstar::to_string(kind)] = std::move(block);
    }
    report["r_star"] = std::move(rstar_block);

    const auto diag = rstar::diagnose(cs);
    json per_param = json::array();
    for (const auto& p : diag.per_param) {
        per_param.push_back({{"name", p.name},
                             {"rank_rhat", p.rank_rhat},
                             {"bulk_ess", ess_json(p.bulk)},
                             {"tail_ess", ess_json(p.tail)}});
    }
    report["diagnostics"]["per_param"] = std::move(per_param);
    if (diag.multivariate_rhat)
        report["diagnostics"]["multivariate_rhat"] = *diag.multivariate_rhat;
    else {
        report["diagnostics"]["multivariate_rhat"] = nullptr;
        report["diagnostics"]["multivariate_note"] = diag.multivariate_note;
    }

    bool breach = false;
    if (strict) {
        breach = worst_rstar_mean > thresholds.rstar_mean || diag.max_rank_rhat() > thresholds.rhat ||
                 diag.min_bulk_ess() < thresholds.ess || diag.min_tail_ess() < thresholds.ess;
        report["strict"] = {{"enabled", true},
                            {"breach", breach},
                            {"thresholds",
                             {{"rank_rhat", thresholds.rhat},
                              {"min_ess", thresholds.ess},
                              {"rstar_mean", thresholds.rstar_mean}}}};
    } else {
        report["strict"] = {{"enabled", false}};
    }

    write_text(fs::path(out_dir) / "report.json", report.dump(2) + "\n");
    std::cout << report.dump(2) << '\n';
    return strict && breach ? 2 : 0;
}

int cmd_simulate(const std::string& preset_name, const std::vector<std::string>& sets, std::uint64_t seed,
                 const std::string& out_path) {
    const auto& preset = rstar::find_preset(preset_name);
    const json cfg = rstar::resolve_preset_config(preset, overrides_from_flags(sets));
    const auto cs = preset.generate(cfg, seed);
    rstar::save_csv(cs, out_path);

    json echo;
    echo["preset"] = preset_name;
    echo["config"] = cfg;
    echo["seed"] = seed;
    echo["out"] = out_path;
    echo["n_chains"] = cs.n_chains();
    echo["n_draws"] = cs.n_draws();
    echo["n_params"] = cs.n_params();
    std::cout << echo.dump(2) << '\n';
    return 0;
}

int cmd_experiment(const std::string& preset_name, const std::vector<std::string>& sets, int replicates,
                   std::uint64_t seed, const std::string& classifier, int split_factor, int jobs,
                   const std::string& out_dir) {
    rstar::ExperimentSpec spec;
    spec.preset = preset_name;
    spec.overrides = overrides_from_flags(sets);
    spec.replicates = replicates;
    spec.seed = seed;
    spec.classifier = classifier;
    spec.split = split_factor > 1;
    spec.split_factor = std::max(split_factor, 1);
    spec.jobs = jobs;

    const auto result = rstar::run_experiment(spec);
    fs::create_directories(out_dir);

    std::ofstream csv(fs::path(out_dir) / "replicates.csv");
    csv << "replicate,seed,r_star_gbm,r_star_rf,max_rank_rhat,min_bulk_ess,min_tail_ess,optimal_rstar\n";
    for (const auto& row : result.rows) {
        csv << row.replicate << ',' << row.seed << ',' << format_optional(row.r_star_gbm) << ','
            << format_optional(row.r_star_rf) << ',' << rstar::format_double(row.max_rank_rhat) << ','
            << rstar::format_double(row.min_bulk_ess) << ',' << rstar::format_double(row.min_tail_ess) << ','
            << format_optional(row.optimal_rstar) << '\n';
    }
    if (!csv) throw rstar::Error("write failed for replicates.csv");
    csv.close();

    json summary;
    summary["schema_version"] = kSchemaVersion;
    summary["preset"] = preset_name;
    summary["config"] = result.resolved_config;
    summary["seed"] = seed;
    summary["classifier"] = classifier;
    summary["split_factor"] = split_factor;
    summary["quantiles"] = rstar::experiment_summary(result);
    write_text(fs::path(out_dir) / "summary.json", summary.dump(2) + "\n");
    std::cout << summary.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Classifier-based MCMC convergence diagnostics (R*) with classical baselines"};
    app.require_subcommand(1);

    // diagnose
    auto* diagnose = app.add_subcommand("diagnose", "compute R* and baseline diagnostics for a draws CSV");
    std::vector<std::string> inputs;
    std::string classifier = "both", out_dir = ".", decile_param;
    int split_factor = 2, rstar_draws = 1000, decile_draws = 40, jobs = 0;
    std::uint64_t seed = 0;
    bool strict = false;
    StrictThresholds thresholds;
    diagnose
        ->add_option("input", inputs,
                     "draws CSV (long format with a 'chain' column), or one CSV per chain")
        ->required();
    diagnose->add_option("--classifier", classifier, "gbm, rf or both")->default_str("both");
    diagnose->add_option("--split", split_factor, "chain split factor for R* (1 disables splitting)")
        ->default_val(2);
    diagnose->add_option("--rstar-draws", rstar_draws, "uncertainty draws per classifier (0 disables)")
        ->default_val(1000);
    diagnose->add_option("--deciles", decile_param, "parameter name for a per-decile R* breakdown");
    diagnose->add_option("--decile-draws", decile_draws, "draws per decile bin")->default_val(40);
    diagnose->add_option("--seed", seed, "RNG seed")->default_val(0);
    diagnose->add_option("--out", out_dir, "output directory")->default_val(".");
    diagnose->add_option("--jobs", jobs, "worker threads (0 = hardware)")->default_val(0);
    diagnose->add_flag("--strict", strict, "exit 2 when a diagnostic threshold is breached");
    diagnose->add_option("--rhat-threshold", thresholds.rhat, "strict rank-Rhat threshold")->default_val(1.01);
    diagnose->add_option("--ess-threshold", thresholds.ess, "strict minimum ESS")->default_val(400.0);
    diagnose->add_option("--rstar-threshold", thresholds.rstar_mean, "strict R* uncertainty-mean threshold")
        ->default_val(1.05);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "generate a synthetic draws CSV from a named preset");
    std::string sim_preset, sim_out = "draws.csv";
    std::vector<std::string> sim_sets;
    std::uint64_t sim_seed = 0;
    simulate->add_option("preset", sim_preset, "preset name (see 'presets')")->required();
    simulate->add_option("--set", sim_sets, "config override key=value (repeatable)");
    simulate->add_option("--seed", sim_seed, "RNG seed")->default_val(0);
    simulate->add_option("--out", sim_out, "output CSV path")->default_val("draws.csv");

    // experiment
    auto* experiment = app.add_subcommand("experiment", "replicated generator -> diagnostics runs");
    std::string exp_preset, exp_classifier = "both", exp_out = ".";
    std::vector<std::string> exp_sets;
    int exp_replicates = 10, exp_split = 2, exp_jobs = 1;
    std::uint64_t exp_seed = 0;
    experiment->add_option("preset", exp_preset, "preset name (see 'presets')")->required();
    experiment->add_option("--set", exp_sets, "config override key=value (repeatable)");
    experiment->add_option("--replicates", exp_replicates, "number of replicates")->default_val(10);
    experiment->add_option("--seed", exp_seed, "RNG seed")->default_val(0);
    experiment->add_option("--classifier", exp_classifier, "gbm, rf or both")->default_str("both");
    experiment->add_option("--split", exp_split, "chain split factor for R* (1 disables)")->default_val(2);
    experiment->add_option("--jobs", exp_jobs, "replicate worker pool size")->default_val(1);
    experiment->add_option("--out", exp_out, "output directory")->default_val(".");

    // presets
    auto* list = app.add_subcommand("presets", "list available presets with their default configs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (diagnose->parsed())
            return cmd_diagnose(inputs, classifier, split_factor, rstar_draws, decile_param, decile_draws, seed,
                                out_dir, strict, thresholds, jobs);
        if (simulate->parsed()) return cmd_simulate(sim_preset, sim_sets, sim_seed, sim_out);
        if (experiment->parsed())
            return cmd_experiment(exp_preset, exp_sets, exp_replicates, exp_seed, exp_classifier, exp_split,
                                  exp_jobs, exp_out);
        if (list->parsed()) {
            json out = json::array();
            for (const auto& p : rstar::presets())
                out.push_back({{"name", p.name}, {"description", p.description}, {"defaults", p.defaults}});
            std::cout << out.dump(2) << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

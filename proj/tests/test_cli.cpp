#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rstar/csv.hpp"
#include "rstar/presets.hpp"

using namespace rstar;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli_bin() {
    const char* bin = std::getenv("RSTAR_CLI_BIN");
    REQUIRE(bin != nullptr);
    return bin;
}

int run(const std::string& args) {
    const int rc = std::system((cli_bin() + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("rstar_cli_test_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("simulate writes an ingestible CSV that round-trips bit-exactly", "[cli]") {
    TempDir dir;
    const auto out = dir.file("draws.csv");
    REQUIRE(run("simulate ar1-hetero --set S=200 --seed 7 --out " + out) == 0);

    const auto loaded = load_csv(out);
    CHECK(loaded.n_chains() == 4);
    CHECK(loaded.n_draws() == 200);
    CHECK(loaded.n_params() == 1);

    const auto& preset = find_preset("ar1-hetero");
    json cfg = preset.defaults;
    cfg["S"] = 200;
    const auto direct = preset.generate(cfg, 7);
    CHECK(loaded.raw() == direct.raw());
}

TEST_CASE("simulate discrete presets emit integer state codes", "[cli]") {
    TempDir dir;
    const auto out = dir.file("states.csv");
    REQUIRE(run("simulate discrete-small-p3 --set S=300 --seed 3 --out " + out) == 0);
    const auto cs = load_csv(out);
    CHECK(cs.param_names()[0] == "state");
    for (int c = 0; c < cs.n_chains(); ++c)
        for (int s = 0; s < cs.n_draws(); ++s) {
            const double v = cs.at(c, s, 0);
            CHECK(v == std::floor(v));
            CHECK(v >= 1.0);
            CHECK(v <= 4.0);
        }
}

TEST_CASE("unknown presets exit 1 and list the alternatives", "[cli]") {
    TempDir dir;
    const auto err_file = dir.file("err.txt");
    const int rc = std::system(
        (cli_bin() + " simulate no-such-preset --out " + dir.file("x.csv") + " 2> " + err_file).c_str());
    CHECK(WEXITSTATUS(rc) == 1);
    const auto err = slurp(err_file);
    CHECK(err.find("unknown preset") != std::string::npos);
    CHECK(err.find("ar1-hetero") != std::string::npos);
    CHECK(err.find("discrete-large") != std::string::npos);
}

TEST_CASE("diagnose respects --strict exit codes", "[cli]") {
    TempDir dir;
    SECTION("converged fixture exits 0") {
        const auto csv = dir.file("null.csv");
        REQUIRE(run("simulate normal-iid --set S=1000 --seed 21 --out " + csv) == 0);
        CHECK(run("diagnose " + csv + " --classifier gbm --rstar-draws 300 --seed 5 --strict --out " +
                  dir.file("out_null")) == 0);
    }
    SECTION("heterogeneous fixture exits 2") {
        const auto csv = dir.file("hetero.csv");
        REQUIRE(run("simulate ar1-hetero --seed 22 --out " + csv) == 0);
        CHECK(run("diagnose " + csv + " --classifier gbm --rstar-draws 300 --seed 5 --strict --out " +
                  dir.file("out_hetero")) == 2);
    }
    SECTION("missing input exits 1") {
        CHECK(run("diagnose " + dir.file("absent.csv") + " --out " + dir.file("out_absent")) == 1);
    }
}

TEST_CASE("diagnose with --classifier both reports two R* blocks", "[cli]") {
    TempDir dir;
    const auto csv = dir.file("draws.csv");
    REQUIRE(run("simulate normal-iid --set S=400 --seed 31 --out " + csv) == 0);
    REQUIRE(run("diagnose " + csv + " --classifier both --rstar-draws 100 --seed 6 --out " +
                dir.file("out")) == 0);

    const auto report = json::parse(slurp(dir.path / "out" / "report.json"));
    CHECK(report.at("schema_version").get<int>() == 1);
    REQUIRE(report.at("r_star").contains("gbm"));
    REQUIRE(report.at("r_star").contains("rf"));
    CHECK(report.at("r_star").at("gbm").at("uncertainty").at("draws").get<int>() == 100);
    CHECK(report.at("diagnostics").at("per_param").size() == 1);

    const auto draws_csv = slurp(dir.path / "out" / "rstar_draws.csv");
    CHECK(draws_csv.find("gbm,1,") != std::string::npos);
    CHECK(draws_csv.find("rf,1,") != std::string::npos);
}

TEST_CASE("experiment emits replicate rows and quantile summaries", "[cli]") {
    TempDir dir;
    REQUIRE(run("experiment ar1-hetero --set S=500 --replicates 4 --seed 9 --classifier gbm --out " +
                dir.file("exp")) == 0);
    const auto csv = slurp(dir.path / "exp" / "replicates.csv");
    // header + 4 rows
    int lines = 0;
    for (char ch : csv) lines += ch == '\n';
    CHECK(lines == 5);
    CHECK(csv.find("replicate,seed,r_star_gbm,r_star_rf,max_rank_rhat,min_bulk_ess,min_tail_ess,optimal_rstar") !=
          std::string::npos);

    const auto summary = json::parse(slurp(dir.path / "exp" / "summary.json"));
    CHECK(summary.at("quantiles").at("replicates").get<int>() == 4);
    CHECK(summary.at("quantiles").at("r_star_gbm").contains("q50"));
    CHECK(summary.at("quantiles").at("r_star_rf").is_null());
    CHECK(summary.at("quantiles").at("optimal_rstar").contains("q50"));
}

TEST_CASE("diagnose ingests one-file-per-chain inputs and emits decile breakdowns", "[cli]") {
    TempDir dir;
    // split one long-format file into per-chain files
    const auto long_csv = dir.file("long.csv");
    REQUIRE(run("simulate normal-iid --set S=400 --seed 41 --out " + long_csv) == 0);
    const auto cs = load_csv(long_csv);
    std::vector<std::string> paths;
    for (int c = 0; c < cs.n_chains(); ++c) {
        const auto p = dir.file("chain" + std::to_string(c + 1) + ".csv");
        std::ofstream out(p);
        out << "p1\n";
        for (int s = 0; s < cs.n_draws(); ++s) out << format_double(cs.at(c, s, 0)) << '\n';
        paths.push_back(p);
    }
    std::string joined;
    for (const auto& p : paths) joined += p + " ";
    REQUIRE(run("diagnose " + joined + "--classifier gbm --rstar-draws 50 --deciles p1 --seed 2 --out " +
                dir.file("out")) == 0);
    const auto report = json::parse(slurp(dir.path / "out" / "report.json"));
    CHECK(report.at("n_chains").get<int>() == 4);
    REQUIRE(report.at("r_star").at("gbm").contains("deciles"));
    CHECK(report.at("r_star").at("gbm").at("deciles").size() == 10);
    const auto decile_csv = slurp(dir.path / "out" / "decile_rstar.csv");
    CHECK(decile_csv.find("gbm,1,1,") != std::string::npos);
    CHECK(decile_csv.find("gbm,10,") != std::string::npos);
}

TEST_CASE("experiment outputs are byte-identical across reruns", "[cli]") {
    TempDir dir;
    const std::string args =
        "experiment normal-iid --set S=400 --replicates 3 --seed 13 --classifier gbm --jobs 2 --out ";
    REQUIRE(run(args + dir.file("a")) == 0);
    REQUIRE(run(args + dir.file("b")) == 0);
    CHECK(slurp(dir.path / "a" / "replicates.csv") == slurp(dir.path / "b" / "replicates.csv"));
    CHECK(slurp(dir.path / "a" / "summary.json") == slurp(dir.path / "b" / "summary.json"));
}

#include <catch2/catch_amalgamated.hpp>

#include "rstar/classifier.hpp"
#include "rstar/diagnostics.hpp"
#include "rstar/generators.hpp"
#include "test_helpers.hpp"

using namespace rstar;
using rstar::testing::make_dataset;

namespace {

double test_accuracy(const GbmModel& model, const LabeledDataset& ds) {
    int correct = 0;
    for (int idx : ds.test_idx) correct += predict_class(model.predict_proba(ds.row(idx))) == ds.labels[idx];
    return static_cast<double>(correct) / ds.test_idx.size();
}

}  // namespace

TEST_CASE("gbm reaches perfect accuracy on separable 1-D classes", "[gbm]") {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    std::vector<int> test_idx;
    Rng rng(3);
    for (int i = 0; i < 400; ++i) {
        const int cls = i % 2;
        x.push_back({(cls == 0 ? -2.0 : 2.0) + 0.5 * rng.normal()});
        y.push_back(cls);
        if (i % 5 == 0) test_idx.push_back(i);
    }
    const auto ds = make_dataset(x, y, test_idx);
    const auto model = fit_gbm(ds, GbmParams{}, 17);
    CHECK(test_accuracy(model, ds) == 1.0);
}

TEST_CASE("gbm on identical chains scores at the chance rate", "[gbm]") {
    Rng rng(41);
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    std::vector<int> test_idx;
    for (int c = 0; c < 4; ++c)
        for (int s = 0; s < 2000; ++s) {
            x.push_back({rng.normal()});
            y.push_back(c);
            if (s % 10 < 3) test_idx.push_back(c * 2000 + s);
        }
    const auto ds = make_dataset(x, y, test_idx);
    const auto model = fit_gbm(ds, GbmParams{}, 5);
    CHECK(test_accuracy(model, ds) == Catch::Approx(0.25).margin(0.05));
}

TEST_CASE("gbm assigns near-zero draws to the low-variance chain", "[gbm]") {
    Ar1Config cfg;
    cfg.rho = 0.3;
    cfg.sigmas = {1.0, 1.0, 1.0, 1.0 / 3.0};
    cfg.n_draws = 2000;
    const auto cs = gen_ar1(cfg, 2024);
    const auto ds = make_labeled(cs, 0.3, 7);
    const auto model = fit_gbm(ds, GbmParams{}, 8);
    const std::vector<double> origin{0.0};
    CHECK(predict_class(model.predict_proba(origin)) == 3);
}

TEST_CASE("gbm probability simplex contracts", "[gbm]") {
    SECTION("all-zero scores give the uniform simplex") {
        GbmModel empty;
        empty.n_classes = 4;
        empty.n_features = 1;
        empty.init_scores.assign(4, 0.0);
        const std::vector<double> x{0.3};
        const auto p = empty.predict_proba(x);
        for (double v : p) CHECK(v == Catch::Approx(0.25).margin(1e-15));
    }
    SECTION("sum to one on arbitrary inputs") {
        const auto cs = gen_ar1(Ar1Config{0.3, {1.0, 1.0, 0.5}, 500, 0.0}, 3);
        const auto ds = make_labeled(cs, 0.3, 11);
        const auto model = fit_gbm(ds, GbmParams{}, 12);
        Rng rng(13);
        for (int i = 0; i < 50; ++i) {
            const std::vector<double> x{3.0 * rng.normal()};
            const auto p = model.predict_proba(x);
            double total = 0.0;
            for (double v : p) {
                CHECK(v >= 0.0);
                total += v;
            }
            CHECK(total == Catch::Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("predict_class takes the argmax with lowest-index ties", "[gbm]") {
    CHECK(predict_class(std::vector<double>{0.1, 0.7, 0.1, 0.1}) == 1);
    CHECK(predict_class(std::vector<double>{0.5, 0.5}) == 0);

    // adding a constant to every class score leaves predictions unchanged
    GbmModel base;
    base.n_classes = 3;
    base.n_features = 1;
    base.init_scores = {0.4, -0.2, 0.1};
    GbmModel shifted = base;
    for (auto& s : shifted.init_scores) s += 123.0;
    const std::vector<double> x{0.0};
    CHECK(predict_class(base.predict_proba(x)) == predict_class(shifted.predict_proba(x)));
    CHECK(predict_class(base.predict_proba(x)) == 0);
}

TEST_CASE("gbm training deviance is non-increasing without subsampling", "[gbm]") {
    const auto cs = gen_ar1(Ar1Config{0.3, {1.0, 1.0, 1.0, 1.0 / 3.0}, 800, 0.0}, 5);
    const auto ds = make_labeled(cs, 0.3, 19);
    GbmParams params;
    params.bag_fraction = 1.0;
    const auto model = fit_gbm(ds, params, 23);
    REQUIRE(model.train_deviance.size() == 50);
    for (std::size_t r = 1; r < model.train_deviance.size(); ++r)
        CHECK(model.train_deviance[r] <= model.train_deviance[r - 1] + 1e-12);
}

TEST_CASE("gbm training is deterministic", "[gbm]") {
    const auto cs = gen_ar1(Ar1Config{0.3, {1.0, 0.5, 0.25}, 600, 0.0}, 29);
    const auto ds = make_labeled(cs, 0.3, 31);
    const auto a = fit_gbm(ds, GbmParams{}, 37);
    const auto b = fit_gbm(ds, GbmParams{}, 37);
    Rng rng(41);
    for (int i = 0; i < 100; ++i) {
        const std::vector<double> x{2.0 * rng.normal()};
        CHECK(a.predict_proba(x) == b.predict_proba(x));
    }
}

TEST_CASE("gbm errors when a chain is absent from training data", "[gbm]") {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) {
        x.push_back({static_cast<double>(i)});
        y.push_back(i % 2 == 0 ? 0 : 2);  // class 1 never appears
    }
    auto ds = make_dataset(x, y);
    ds.n_classes = 3;
    CHECK_THROWS_WITH(fit_gbm(ds, GbmParams{}, 1), Catch::Matchers::ContainsSubstring("chain 2"));
}

TEST_CASE("variable importance concentrates on informative parameters", "[gbm]") {
    SECTION("single informative feature takes score 100") {
        Rng rng(43);
        std::vector<std::vector<double>> x;
        std::vector<int> y;
        for (int i = 0; i < 600; ++i) {
            std::vector<double> row(4);
            for (auto& v : row) v = rng.normal();
            y.push_back(row[2] > 0.0 ? 1 : 0);
            x.push_back(std::move(row));
        }
        const auto ds = make_dataset(x, y);
        GbmParams params;
        params.max_splits = 1;
        const auto model = fit_gbm(ds, params, 47);
        const auto imp = variable_importance(model);
        CHECK(imp[2] == 100.0);
        CHECK(imp[0] == 0.0);
        CHECK(imp[1] == 0.0);
        CHECK(imp[3] == 0.0);
    }
    SECTION("model with no admissible splits has all-zero scores") {
        std::vector<std::vector<double>> x(40, {1.0, 2.0});
        std::vector<int> y;
        for (int i = 0; i < 40; ++i) y.push_back(i % 2);
        const auto ds = make_dataset(x, y);
        const auto model = fit_gbm(ds, GbmParams{}, 53);
        const auto imp = variable_importance(model);
        CHECK(imp == std::vector<double>{0.0, 0.0});
    }
}

TEST_CASE("variable importance tracks per-parameter convergence failures", "[gbm]") {
    // 16 dims; the last chain is mean-shifted with a per-dimension magnitude
    // that ramps from 0; importance should rank-correlate with rank-Rhat.
    const int n = 4, s = 1500, k = 16;
    Rng rng(59);
    std::vector<double> draws(static_cast<std::size_t>(n) * s * k);
    for (int c = 0; c < n; ++c)
        for (int t = 0; t < s; ++t)
            for (int j = 0; j < k; ++j) {
                double v = rng.normal();
                if (c == 3 && j >= 8) v += 0.15 * (j - 7);
                draws[(static_cast<std::size_t>(c) * s + t) * k + j] = v;
            }
    const ChainSet cs{n, s, k, std::move(draws)};
    const auto ds = make_labeled(cs, 0.3, 61);
    const auto model = fit_gbm(ds, GbmParams{}, 67);
    const auto imp = variable_importance(model);

    std::vector<double> rhats;
    for (int j = 0; j < k; ++j) rhats.push_back(rank_rhat(cs, j));
    CHECK(spearman_correlation(imp, rhats) > 0.3);
}

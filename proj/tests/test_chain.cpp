#include <catch2/catch_amalgamated.hpp>

#include "rstar/chain.hpp"

using namespace rstar;

namespace {

ChainSet make_counting_chainset(int n, int s, int k) {
    std::vector<double> draws(static_cast<std::size_t>(n) * s * k);
    for (std::size_t i = 0; i < draws.size(); ++i) draws[i] = static_cast<double>(i);
    return {n, s, k, std::move(draws)};
}

ChainSet make_random_chainset(int n, int s, int k, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> draws(static_cast<std::size_t>(n) * s * k);
    for (auto& d : draws) d = rng.normal();
    return {n, s, k, std::move(draws)};
}

}  // namespace

TEST_CASE("ChainSet validates construction invariants", "[chain]") {
    CHECK_THROWS_AS(make_counting_chainset(1, 10, 1), Error);
    CHECK_THROWS_AS(make_counting_chainset(2, 1, 1), Error);

    std::vector<double> with_nan(2 * 4 * 1, 0.0);
    with_nan[5] = std::nan("");
    CHECK_THROWS_WITH((ChainSet{2, 4, 1, with_nan}), Catch::Matchers::ContainsSubstring("chain 2") &&
                                                         Catch::Matchers::ContainsSubstring("draw 2"));
}

TEST_CASE("split_chains halves chains in temporal order", "[chain]") {
    SECTION("4x1000 -> 8x500") {
        const auto cs = make_random_chainset(4, 1000, 1, 1);
        const auto half = split_chains(cs, 2);
        CHECK(half.n_chains() == 8);
        CHECK(half.n_draws() == 500);
        // first half of chain 0 = early draws, second = late draws
        CHECK(half.at(0, 0, 0) == cs.at(0, 0, 0));
        CHECK(half.at(1, 0, 0) == cs.at(0, 500, 0));
    }
    SECTION("remainder drops the earliest draws") {
        const auto cs = make_counting_chainset(2, 7, 1);
        const auto half = split_chains(cs, 2);
        CHECK(half.n_chains() == 4);
        CHECK(half.n_draws() == 3);
        CHECK(half.at(0, 0, 0) == cs.at(0, 1, 0));  // draw 1 dropped
        CHECK(half.at(1, 0, 0) == cs.at(0, 4, 0));
    }
    SECTION("factor 1 is the identity") {
        const auto cs = make_random_chainset(3, 10, 2, 2);
        const auto same = split_chains(cs, 1);
        CHECK(same.raw() == cs.raw());
    }
    SECTION("too-short split errors") { CHECK_THROWS_AS(split_chains(make_counting_chainset(2, 4, 1), 3), Error); }
}

TEST_CASE("split then merge reproduces the truncated original", "[chain]") {
    const auto cs = make_random_chainset(3, 11, 2, 3);
    const int factor = 2;
    const auto half = split_chains(cs, factor);
    const int drop = cs.n_draws() % factor;
    for (int n = 0; n < cs.n_chains(); ++n)
        for (int s = drop; s < cs.n_draws(); ++s)
            for (int k = 0; k < cs.n_params(); ++k) {
                const int block = (s - drop) / half.n_draws();
                const int offset = (s - drop) % half.n_draws();
                CHECK(cs.at(n, s, k) == half.at(n * factor + block, offset, k));
            }
}

TEST_CASE("thin keeps draws 1, 1+k, 1+2k, ...", "[chain]") {
    SECTION("10000 by 5 -> 2000") {
        const auto cs = make_counting_chainset(2, 10000, 1);
        CHECK(thin(cs, 5).n_draws() == 2000);
    }
    SECTION("k = 1 identity") {
        const auto cs = make_counting_chainset(2, 7, 1);
        CHECK(thin(cs, 1).raw() == cs.raw());
    }
    SECTION("S=7, k=3 keeps draws {1,4,7}") {
        const auto cs = make_counting_chainset(2, 7, 1);
        const auto t = thin(cs, 3);
        REQUIRE(t.n_draws() == 3);
        CHECK(t.at(0, 0, 0) == cs.at(0, 0, 0));
        CHECK(t.at(0, 1, 0) == cs.at(0, 3, 0));
        CHECK(t.at(0, 2, 0) == cs.at(0, 6, 0));
    }
}

TEST_CASE("subset_params selects and orders parameters", "[chain]") {
    SECTION("stride 5 over K=10 keeps params {1,6}") {
        const auto sel = stride_selector(10, 5);
        REQUIRE(sel == std::vector<int>{0, 5});
        const auto cs = make_counting_chainset(2, 4, 10);
        const auto sub = subset_params(cs, sel);
        CHECK(sub.n_params() == 2);
        CHECK(sub.at(0, 0, 0) == cs.at(0, 0, 0));
        CHECK(sub.at(0, 0, 1) == cs.at(0, 0, 5));
        CHECK(sub.param_names()[1] == "p6");
    }
    SECTION("identity selector") {
        const auto cs = make_counting_chainset(2, 4, 3);
        CHECK(subset_params(cs, {0, 1, 2}).raw() == cs.raw());
    }
    SECTION("large-K stride arithmetic") {
        CHECK(stride_selector(18105, 5).size() == 3621);
    }
    SECTION("out of range") {
        const auto cs = make_counting_chainset(2, 4, 3);
        CHECK_THROWS_AS(subset_params(cs, {3}), Error);
    }
}

TEST_CASE("fold takes absolute deviation from the pooled median", "[chain]") {
    CHECK(fold(std::vector<double>{1, 2, 3}) == std::vector<double>{1, 0, 1});
    CHECK(fold(std::vector<double>{-4, 4}) == std::vector<double>{4, 4});
    CHECK(fold(std::vector<double>{5, 5, 5, 5}) == std::vector<double>{0, 0, 0, 0});
}

TEST_CASE("fold output is non-negative with a zero for odd counts", "[chain]") {
    Rng rng(99);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 3 + 2 * static_cast<int>(rng.uniform_int(20));  // odd
        std::vector<double> v(n);
        for (auto& x : v) x = rng.cauchy();
        const auto f = fold(v);
        int zeros = 0;
        for (double x : f) {
            CHECK(x >= 0.0);
            zeros += x == 0.0;
        }
        CHECK(zeros >= 1);
    }
}

TEST_CASE("rank_normalize matches the offset-rank normal transform", "[chain]") {
    SECTION("pooled size 4, lowest rank") {
        // oracle: bisection on the erfc-based normal CDF, independent of the
        // rational approximation used by the implementation
        const double target = (1.0 - 0.375) / 4.25;
        double lo = -10, hi = 10;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (normal_cdf(mid) < target ? lo : hi) = mid;
        }
        const double expected = 0.5 * (lo + hi);
        CHECK(expected == Catch::Approx(-1.049).margin(5e-4));

        const ChainSet cs{2, 2, 1, {10.0, 20.0, 30.0, 40.0}};
        const auto z = rank_normalize(cs, 0);
        CHECK(z[0][0] == Catch::Approx(expected).margin(1e-9));
    }
    SECTION("all equal values map to zero") {
        const ChainSet cs{2, 3, 1, {7, 7, 7, 7, 7, 7}};
        for (const auto& chain : rank_normalize(cs, 0))
            for (double z : chain) CHECK(z == Catch::Approx(0.0).margin(1e-15));
    }
    SECTION("invariant under strictly increasing transforms") {
        const auto cs = make_random_chainset(3, 50, 1, 17);
        std::vector<double> transformed;
        for (double x : cs.raw()) transformed.push_back(std::exp(x) + std::atan(x));
        const ChainSet cs2{3, 50, 1, transformed};
        CHECK(rank_normalize(cs, 0) == rank_normalize(cs2, 0));
    }
}

TEST_CASE("make_labeled builds a stratified deterministic partition", "[chain]") {
    const auto cs = make_random_chainset(4, 2000, 1, 5);
    const auto ds = make_labeled(cs, 0.3, 42);
    CHECK(ds.train_idx.size() == 5600);
    CHECK(ds.test_idx.size() == 2400);

    SECTION("same seed gives identical partitions") {
        const auto ds2 = make_labeled(cs, 0.3, 42);
        CHECK(ds.train_idx == ds2.train_idx);
        CHECK(ds.test_idx == ds2.test_idx);
    }
    SECTION("train and test are disjoint and cover all rows") {
        std::vector<int> all(ds.train_idx);
        all.insert(all.end(), ds.test_idx.begin(), ds.test_idx.end());
        std::sort(all.begin(), all.end());
        std::vector<int> expect(ds.n_rows);
        std::iota(expect.begin(), expect.end(), 0);
        CHECK(all == expect);
    }
    SECTION("per-chain stratification") {
        std::vector<int> per_chain(4, 0);
        for (int idx : ds.test_idx) ++per_chain[ds.labels[idx]];
        for (int c = 0; c < 4; ++c) CHECK(per_chain[c] == 600);
    }
}

TEST_CASE("make_labeled rejects degenerate fractions", "[chain]") {
    const auto cs = make_random_chainset(2, 4, 1, 5);
    CHECK_THROWS_AS(make_labeled(cs, 0.999, 1), Error);
}

TEST_CASE("with_iteration_blocks appends a block feature", "[chain]") {
    const auto cs = make_random_chainset(2, 8, 1, 5);
    const auto blocked = with_iteration_blocks(cs, 4);
    CHECK(blocked.n_params() == 2);
    CHECK(blocked.param_names().back() == "iter_block");
    CHECK(blocked.at(0, 0, 1) == 1.0);
    CHECK(blocked.at(0, 7, 1) == 4.0);
}

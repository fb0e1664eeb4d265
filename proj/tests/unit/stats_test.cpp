#include "doctest.h"

#include <cmath>
#include <random>

#include "cleanbench/common.hpp"
#include "cleanbench/stats.hpp"

using namespace cleanbench;

namespace {

PairedSample from_diffs(const std::vector<double>& d) {
    PairedSample s;
    for (double x : d) s.pairs.push_back({x, 0.0});
    return s;
}

// Tie-free sample of n distinct magnitudes with random signs.
std::vector<double> random_diffs(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> mag(0.01, 10.0);
    std::bernoulli_distribution sign(0.5);
    std::vector<double> d;
    for (std::size_t i = 0; i < n; ++i) d.push_back(sign(rng) ? mag(rng) : -mag(rng));
    return d;
}

}  // namespace

TEST_CASE("summarize") {
    auto s = summarize({1, 2, 3});
    CHECK(s.mean == 2.0);
    CHECK(*s.std == doctest::Approx(1.0));
    auto one = summarize({4.5});
    CHECK(one.mean == 4.5);
    CHECK_FALSE(one.std);
    CHECK(*summarize({7, 7, 7, 7}).std == 0.0);
    CHECK_THROWS_AS(summarize({}), InputError);
}

TEST_CASE("average ranks share ties") {
    auto r = average_ranks({3.0, 1.0, 3.0, 2.0});
    CHECK(r == std::vector<double>{3.5, 1.0, 3.5, 2.0});
}

TEST_CASE("wilcoxon worked example with five positive differences") {
    auto r = wilcoxon_signed_rank(from_diffs({1, 2, 3, 4, 5}), 0.05, WilcoxonMode::exact);
    CHECK(r.w == 0.0);
    CHECK(r.p_value == 0.0625);
    CHECK_FALSE(r.reject_h0);
    CHECK(r.n_effective == 5);
    CHECK(r.mode == WilcoxonMode::exact);
}

TEST_CASE("wilcoxon degenerate and zero-pair handling") {
    auto d = wilcoxon_signed_rank(from_diffs({0, 0, 0}));
    CHECK(d.degenerate);
    CHECK_FALSE(d.reject_h0);
    CHECK(d.n_effective == 0);

    std::vector<double> base = {1.5, -0.5, 2.5, 3.0, -4.0, 6.0, 7.5};
    auto with_zero = base;
    with_zero.push_back(0.0);
    auto a = wilcoxon_signed_rank(from_diffs(base)), b = wilcoxon_signed_rank(from_diffs(with_zero));
    CHECK(a.p_value == b.p_value);
    CHECK(a.w == b.w);
    CHECK(a.n_effective == b.n_effective);
}

TEST_CASE("wilcoxon is invariant to swapping the arms") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        PairedSample s;
        std::normal_distribution<double> g(0.0, 1.0);
        for (int i = 0; i < 10; ++i) s.pairs.push_back({g(rng), g(rng)});
        PairedSample t = s;
        for (auto& [a, b] : t.pairs) std::swap(a, b);
        for (auto mode : {WilcoxonMode::exact, WilcoxonMode::normal_approx}) {
            auto x = wilcoxon_signed_rank(s, 0.05, mode), y = wilcoxon_signed_rank(t, 0.05, mode);
            CHECK(x.p_value == y.p_value);
            CHECK(x.p_value >= 0.0);
            CHECK(x.p_value <= 1.0);
        }
    }
}

TEST_CASE("exact enumeration: parallel equals serial, and matches a small hand count") {
    std::mt19937_64 rng(3);
    for (std::size_t n = 1; n <= 14; ++n) {
        auto d = random_diffs(rng, n);
        std::vector<double> mags;
        for (double x : d) mags.push_back(std::abs(x));
        auto ranks = average_ranks(mags);
        std::vector<std::uint32_t> doubled;
        for (double r : ranks) doubled.push_back(static_cast<std::uint32_t>(2 * r));
        for (std::uint64_t w = 0; w <= n * (n + 1) / 2; w += 2)
            CHECK(wilcoxon_exact_p(doubled, w) == serial::wilcoxon_exact_p(doubled, w));
    }
    // ranks {1,2,3}: min(W+,W-) <= 1 for sign patterns with W+ in {0,1,5,6} -> 4/8
    CHECK(wilcoxon_exact_p({2, 4, 6}, 2) == 0.5);
    CHECK_THROWS_AS(wilcoxon_exact_p(std::vector<std::uint32_t>(27, 2), 0), InputError);
}

TEST_CASE("normal approximation tracks the exact p for n from 9 to 12") {
    std::mt19937_64 rng(99);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        auto d = random_diffs(rng, 9 + static_cast<std::size_t>(trial % 4));
        auto e = wilcoxon_signed_rank(from_diffs(d), 0.05, WilcoxonMode::exact);
        auto a = wilcoxon_signed_rank(from_diffs(d), 0.05, WilcoxonMode::normal_approx);
        worst = std::max(worst, std::abs(e.p_value - a.p_value));
    }
    CHECK(worst <= 0.02);
}

TEST_CASE("normal approximation with ties uses the tie-corrected variance") {
    // |d| = {1,1,2,2,2}: ranks 1.5,1.5,4,4,4; tie term (8-2)+(27-3)=30
    std::vector<double> ranks = {1.5, 1.5, 4, 4, 4};
    double sigma = std::sqrt(5.0 * 6 * 11 / 24 - 30.0 / 48);
    double z = (1.5 - 7.5 + 0.5) / sigma;
    CHECK(wilcoxon_normal_p(ranks, 1.5) == doctest::Approx(2 * normal_cdf(z)));
    CHECK(wilcoxon_normal_p(ranks, 7.5) == 1.0);
}

TEST_CASE("automatic mode switches at twelve pairs and rejects clear shifts") {
    std::vector<double> d(12, 0.0), e(13, 0.0);
    for (std::size_t i = 0; i < 12; ++i) d[i] = static_cast<double>(i + 1);
    for (std::size_t i = 0; i < 13; ++i) e[i] = static_cast<double>(i + 1);
    auto r12 = wilcoxon_signed_rank(from_diffs(d)), r13 = wilcoxon_signed_rank(from_diffs(e));
    CHECK(r12.mode == WilcoxonMode::exact);
    CHECK(r13.mode == WilcoxonMode::normal_approx);
    CHECK(r12.reject_h0);
    CHECK(r13.reject_h0);
    CHECK(r12.p_value == doctest::Approx(2.0 / 4096));
    CHECK_THROWS_AS(wilcoxon_signed_rank(from_diffs(d), 1.5), InputError);
}

#include <doctest.h>

#include <cmath>
#include <vector>

#include "deflab/levy.hpp"
#include "deflab/rng.hpp"
#include "deflab/sde.hpp"
#include "deflab/stats.hpp"
#include "deflab/stopping.hpp"

using namespace deflab;

TEST_CASE("level sequences validate and provide window edges") {
    CHECK_THROWS(LevelSequence({0.5, 0.5}));
    CHECK_THROWS(LevelSequence({0.5, -0.1}));
    const auto levels = LevelSequence::dyadic(0.5, 4);
    CHECK(levels.s == std::vector<double>{0.5, 0.25, 0.125, 0.0625});
    CHECK(levels.window_low(0) == doctest::Approx(0.25));
    CHECK(levels.window_low(3) == doctest::Approx(0.03125));
}

TEST_CASE("exponential target law: cdf, quantile, conditioning") {
    const auto law = TargetLaw::exponential(1.0);
    CHECK(law.cdf(0.0) == 0.0);
    CHECK(law.cdf(1.0) == doctest::Approx(1.0 - std::exp(-1.0)));
    CHECK(law.quantile(0.5) == doctest::Approx(std::log(2.0)));
    CHECK(law.quantile(0.0) == 0.0);
    // memorylessness: conditioning shifts by s
    CHECK(law.conditioned_quantile(2.0, 0.5) == doctest::Approx(2.0 + std::log(2.0)));
}

TEST_CASE("atomic target law: right-continuous inverse and degenerate branch") {
    const auto law = TargetLaw::atoms({{1.0, 0.3}, {2.0, 0.7}});
    CHECK(law.cdf(0.5) == 0.0);
    CHECK(law.cdf(1.0) == doctest::Approx(0.3));
    CHECK(law.cdf(2.5) == doctest::Approx(1.0));
    CHECK(law.quantile(0.2) == 1.0);
    CHECK(law.quantile(0.3) == 1.0);
    CHECK(law.quantile(0.31) == 2.0);
    CHECK(law.quantile(0.0) == 1.0);
    CHECK(law.conditioned_quantile(1.5, 0.99) == 2.0);
    CHECK(law.conditioned_quantile(2.0, 0.5) == kInfiniteTime); // mu((2, inf]) = 0
}

TEST_CASE("extract_uniforms: all-positive and all-negative windows") {
    std::vector<ExcursionRecord> recs;
    for (int k = 0; k < 25; ++k) {
        ExcursionRecord r;
        r.start_index = static_cast<std::size_t>(10 * k);
        r.end_index = r.start_index + 5;
        r.sign = 1;
        r.height = 1.0 / (1.0 + k);
        r.local_time_coord = 0.3; // window (0.25, 0.5]
        recs.push_back(r);
    }
    const auto levels = LevelSequence::dyadic(0.5, 2);
    auto draws = extract_uniforms(recs, levels, 20);
    CHECK(draws[0].bits == 20);
    CHECK_FALSE(draws[0].flagged);
    CHECK(draws[0].value == doctest::Approx(1.0 - std::ldexp(1.0, -20)));
    // second window (0.125, 0.25] is empty
    CHECK(draws[1].bits == 0);
    CHECK(draws[1].flagged);
    CHECK(draws[1].value == 0.0);

    for (auto& r : recs) r.sign = -1;
    draws = extract_uniforms(recs, levels, 20);
    CHECK(draws[0].value == 0.0);
    CHECK(draws[0].bits == 20);
}

TEST_CASE("extract_uniforms orders by height with start-index ties") {
    std::vector<ExcursionRecord> recs(3);
    recs[0] = {0, 2, 1, 0.5, 0.0, 0.4};   // tallest, positive -> leading bit 1
    recs[1] = {4, 6, -1, 0.25, 0.0, 0.4}; // second
    recs[2] = {8, 10, 1, 0.20, 0.0, 0.4}; // third
    const auto levels = LevelSequence::dyadic(0.5, 1);
    const auto draws = extract_uniforms(recs, levels, 3);
    CHECK(draws[0].bits == 3);
    CHECK(draws[0].value == doctest::Approx(0.5 + 0.125));
}

TEST_CASE("tau recursion on crafted level data: point mass is hit exactly") {
    const auto law = TargetLaw::point_mass(0.3);
    std::vector<LevelData> lv(2);
    lv[0] = {true, 0.5, {0.75, 20, false}};  // sigma_1 = 0.5 >= c: degenerate, tau_1 = inf
    lv[1] = {true, 0.2, {0.25, 20, false}};  // sigma_2 = 0.2 < c: draw = c, replaces since c <= sigma_1
    const auto res = tau_from_levels(lv, law);
    CHECK(res.constructed);
    CHECK(res.tau == 0.3);
    CHECK(res.levels_used == 2);
    CHECK(res.chain.front() == kInfiniteTime);
}

TEST_CASE("tau recursion skips unusable levels") {
    const auto law = TargetLaw::exponential(1.0);
    std::vector<LevelData> lv(3);
    lv[0] = {false, 0.0, {0.0, 0, true}};   // unswept
    lv[1] = {true, 0.1, {0.5, 10, true}};   // base
    lv[2] = {true, 0.01, {0.5, 0, true}};   // no bits: skipped
    const auto res = tau_from_levels(lv, law);
    CHECK(res.constructed);
    CHECK(res.base_level == 1);
    CHECK(res.levels_used == 1);
    const double expected = 0.1 + -std::log1p(-(0.5 + std::ldexp(1.0, -11)));
    CHECK(res.tau == doctest::Approx(expected));
}

TEST_CASE("tau chain is nonincreasing path by path") {
    const TimeGrid grid(1.0, 20000);
    const auto levels = LevelSequence::dyadic(0.5, 8);
    const auto law = TargetLaw::exponential(1.0);
    TauOptions opt;
    opt.h_min = 0.03;
    for (std::size_t i = 0; i < 200; ++i) {
        RngStream rng(31, i);
        const auto w = gen_brownian(grid, rng);
        const auto res = independent_stopping_time(w, law, levels, opt);
        for (std::size_t k = 1; k < res.chain.size(); ++k) CHECK(res.chain[k] <= res.chain[k - 1]);
    }
}

TEST_CASE("tau is a stopping time: modifying the path strictly after tau leaves it unchanged") {
    const TimeGrid grid(1.0, 20000);
    const auto levels = LevelSequence::dyadic(0.5, 8);
    const auto law = TargetLaw::exponential(1.0);
    TauOptions opt;
    opt.h_min = 0.03;
    std::size_t tested = 0;
    for (std::size_t i = 0; i < 300 && tested < 100; ++i) {
        RngStream rng(32, i);
        const auto w = gen_brownian(grid, rng);
        const auto res = independent_stopping_time(w, law, levels, opt);
        if (!res.constructed || !(res.tau < grid.horizon - 5.0 * grid.dt())) continue;
        ++tested;
        SamplePath w2 = w;
        const auto cut = static_cast<std::size_t>(std::floor(res.tau / grid.dt())) + 2;
        REQUIRE(cut < grid.size());
        RngStream noise(33, i);
        for (std::size_t j = cut; j < w2.size(); ++j)
            w2[j] = w2[cut - 1] + 0.5 * std::sin(static_cast<double>(j - cut)) +
                    0.3 * noise.gaussian();
        const auto res2 = independent_stopping_time(w2, law, levels, opt);
        CHECK(res2.constructed);
        CHECK(res2.tau == res.tau);
    }
    CHECK(tested >= 50);
}

TEST_CASE("point-mass target returns c exactly on real paths") {
    const TimeGrid grid(1.0, 20000);
    const auto levels = LevelSequence::dyadic(0.5, 8);
    const auto law = TargetLaw::point_mass(0.7);
    TauOptions opt;
    opt.h_min = 0.03;
    std::size_t exact = 0, constructed = 0;
    for (std::size_t i = 0; i < 200; ++i) {
        RngStream rng(34, i);
        const auto w = gen_brownian(grid, rng);
        const auto res = independent_stopping_time(w, law, levels, opt);
        if (!res.constructed) continue;
        ++constructed;
        if (res.tau == 0.7) ++exact;
    }
    REQUIRE(constructed >= 190);
    // on essentially every path some resolved sigma_n < c, forcing tau = c exactly
    CHECK(exact >= constructed - 2);
}

TEST_CASE("uniform draws from disjoint windows are nearly uncorrelated") {
    const TimeGrid grid(1.0, 40000);
    const auto levels = LevelSequence::dyadic(0.5, 3);
    TauOptions opt;
    opt.h_min = 0.02;
    std::vector<double> u1, u2;
    for (std::size_t i = 0; i < 3000; ++i) {
        RngStream rng(35, i);
        const auto w = gen_brownian(grid, rng);
        const auto recs = excursions(w, opt.h_min);
        const auto draws = extract_uniforms(recs, levels, 12);
        if (draws[0].bits >= 6 && draws[1].bits >= 6) {
            u1.push_back(draws[0].value);
            u2.push_back(draws[1].value);
        }
    }
    REQUIRE(u1.size() > 500);
    CHECK(std::abs(pearson_corr(u1, u2)) <= 4.0 / std::sqrt(static_cast<double>(u1.size())));
}

#include <doctest.h>

#include <cmath>
#include <vector>

#include "deflab/grid.hpp"
#include "deflab/path_ops.hpp"
#include "deflab/rng.hpp"
#include "deflab/sde.hpp"
#include "deflab/stats.hpp"

using namespace deflab;

TEST_CASE("grid invariants") {
    CHECK_THROWS(TimeGrid(0.0, 10));
    CHECK_THROWS(TimeGrid(1.0, 0));
    const TimeGrid g(2.0, 8);
    CHECK(g.dt() == doctest::Approx(0.25));
    CHECK(g.t(8) == doctest::Approx(2.0));
}

TEST_CASE("brownian path: initial condition and length") {
    RngStream rng(1, 0);
    const auto w = gen_brownian(TimeGrid(1.0, 1), rng);
    CHECK(w.size() == 2);
    CHECK(w[0] == 0.0);
}

TEST_CASE("brownian ensemble mean and variance at T = 1") {
    const TimeGrid grid(1.0, 16);
    const std::size_t n = 10000;
    std::vector<double> wt(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng(2024, i);
        wt[i] = gen_brownian(grid, rng).back();
    }
    const auto m = mean_se(wt);
    CHECK(std::abs(m.mean) <= 3.0 * std::sqrt(grid.horizon) / 100.0);
    double var = 0.0;
    for (double x : wt) var += (x - m.mean) * (x - m.mean);
    var /= static_cast<double>(n - 1);
    CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("ito integral: identity and zero integrands") {
    RngStream rng(3, 1);
    const auto w = gen_brownian(TimeGrid(1.0, 512), rng);
    SamplePath ones(w.grid, 1.0), zeros(w.grid, 0.0);
    const auto iw = ito_integral(ones, w);
    for (std::size_t j = 0; j < w.size(); ++j)
        CHECK(iw[j] == doctest::Approx(w[j] - w[0]).epsilon(1e-12));
    const auto z = ito_integral(zeros, w);
    for (std::size_t j = 0; j < w.size(); ++j) CHECK(z[j] == 0.0);
}

TEST_CASE("ito integral is linear in the integrand") {
    RngStream rng(4, 2);
    const TimeGrid grid(1.0, 256);
    const auto w = gen_brownian(grid, rng);
    SamplePath f(grid), g(grid);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        f[j] = std::sin(static_cast<double>(j));
        g[j] = std::cos(static_cast<double>(j) * 0.7);
    }
    SamplePath combo(grid);
    for (std::size_t j = 0; j < grid.size(); ++j) combo[j] = 2.0 * f[j] - 3.0 * g[j];
    const auto lhs = ito_integral(combo, w);
    const auto a = ito_integral(f, w), b = ito_integral(g, w);
    for (std::size_t j = 0; j < grid.size(); ++j)
        CHECK(lhs[j] == doctest::Approx(2.0 * a[j] - 3.0 * b[j]).epsilon(1e-10));
}

TEST_CASE("ito integral rejects mismatched grids") {
    RngStream rng(5, 0);
    const auto w = gen_brownian(TimeGrid(1.0, 64), rng);
    const SamplePath other(TimeGrid(1.0, 65), 1.0);
    CHECK_THROWS(ito_integral(other, w));
}

TEST_CASE("quadratic variation of deterministic paths") {
    const TimeGrid grid(2.0, 1000);
    SamplePath c(grid, 3.0);
    const auto qc = quadratic_variation(c);
    CHECK(qc.back() == 0.0);
    // linear path with slope a: total QV = a^2 T dt
    const double a = 1.7;
    SamplePath lin(grid);
    for (std::size_t j = 0; j < grid.size(); ++j) lin[j] = a * grid.t(j);
    const auto ql = quadratic_variation(lin);
    CHECK(ql.back() == doctest::Approx(a * a * grid.horizon * grid.dt()).epsilon(1e-10));
    for (std::size_t j = 1; j < grid.size(); ++j) CHECK(ql[j] >= ql[j - 1]);
}

TEST_CASE("brownian QV concentrates at T (fraction within 1% at fine dt)") {
    // chi-square spread: at 5e5 steps the 1% band is a 7-sigma event
    const TimeGrid grid(1.0, 500000);
    std::size_t within = 0;
    const std::size_t n = 100;
    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng(6, i);
        const auto w = gen_brownian(grid, rng);
        const double qv = quadratic_variation(w).back();
        if (std::abs(qv - 1.0) <= 0.01) ++within;
    }
    CHECK(within >= 99);
}

TEST_CASE("stochastic exponential: constants and deterministic drift") {
    const TimeGrid grid(1.0, 1000);
    SamplePath zero(grid, 0.0);
    const auto e0 = stoch_exponential(zero);
    for (std::size_t j = 0; j < grid.size(); ++j) CHECK(e0[j] == 1.0);
    SamplePath t_path(grid);
    for (std::size_t j = 0; j < grid.size(); ++j) t_path[j] = grid.t(j);
    const auto et = stoch_exponential(t_path);
    CHECK(et.back() == doctest::Approx(std::exp(1.0)).epsilon(1e-3));
    for (double v : et.values) CHECK(v > 0.0);
}

TEST_CASE("stochastic exponential of the Brownian-like integral is mean one") {
    const TimeGrid grid(1.0, 64);
    std::vector<double> vals(10000);
    for (std::size_t i = 0; i < vals.size(); ++i) {
        RngStream rng(7, i);
        vals[i] = stoch_exponential(gen_brownian(grid, rng)).back();
    }
    const auto m = mean_se(vals);
    CHECK(std::abs(m.mean - 1.0) <= 3.0 * m.se);
}

TEST_CASE("Yor product formula: exact on alternating deterministic paths, O(dt) otherwise") {
    const TimeGrid grid(1.0, 512);
    // X moves on even steps, Y on odd steps: the cross bracket vanishes and
    // the product identity E(X) E(Y) = E(X + Y + [X,Y]) is exact on the grid.
    SamplePath x(grid, 0.0), y(grid, 0.0);
    for (std::size_t j = 1; j < grid.size(); ++j) {
        const double bump = 0.05 * std::sin(static_cast<double>(j));
        x[j] = x[j - 1] + (j % 2 == 0 ? bump : 0.0);
        y[j] = y[j - 1] + (j % 2 == 1 ? bump : 0.0);
    }
    SamplePath sum(grid, 0.0);
    for (std::size_t j = 0; j < grid.size(); ++j) sum[j] = x[j] + y[j];
    const auto lhs = stoch_exponential(x);
    const auto rhs = stoch_exponential(y);
    const auto prod = stoch_exponential(sum);
    for (std::size_t j = 0; j < grid.size(); ++j)
        CHECK(lhs[j] * rhs[j] == doctest::Approx(prod[j]).epsilon(1e-13));

    // random paths: the bracket path's own squared increments are O(dt^{3/2})
    RngStream rng(8, 3);
    const auto u = gen_brownian(grid, rng);
    const auto v = gen_brownian(grid, rng);
    SamplePath sum_with_bracket(grid);
    double cross = 0.0;
    sum_with_bracket[0] = u[0] + v[0];
    for (std::size_t j = 1; j < grid.size(); ++j) {
        cross += (u[j] - u[j - 1]) * (v[j] - v[j - 1]);
        sum_with_bracket[j] = u[j] + v[j] + cross;
    }
    const auto pl = stoch_exponential(u);
    const auto pr = stoch_exponential(v);
    const auto pp = stoch_exponential(sum_with_bracket);
    for (std::size_t j = 0; j < grid.size(); ++j)
        CHECK(pl[j] * pr[j] == doctest::Approx(pp[j]).epsilon(20.0 * grid.dt()));
}

TEST_CASE("euler with zero drift and unit diffusion reproduces gen_brownian bit-exactly") {
    const TimeGrid grid(1.0, 1000);
    RngStream r1(9, 4), r2(9, 4);
    const auto w = gen_brownian(grid, r1);
    const auto e = euler_maruyama(
        grid, r2, 0.0, [](const StepContext&) { return 0.0; },
        [](const StepContext&) { return 1.0; });
    REQUIRE_FALSE(e.exploded());
    for (std::size_t j = 0; j < grid.size(); ++j) CHECK(w[j] == e.path[j]);
}

TEST_CASE("euler flags non-finite drift and freezes the path") {
    const TimeGrid grid(1.0, 100);
    RngStream rng(10, 0);
    const auto res = euler_maruyama(
        grid, rng, 0.0,
        [](const StepContext& c) {
            return c.index < 50 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
        },
        [](const StepContext&) { return 1.0; });
    REQUIRE(res.exploded());
    CHECK(*res.exploded_at == 50);
    for (std::size_t j = 50; j < grid.size(); ++j) CHECK(res.path[j] == res.path[50]);
}

TEST_CASE("hitting time: none, deterministic crossing, interpolation") {
    const TimeGrid grid(1.0, 100);
    SamplePath zero(grid, 0.0);
    CHECK_FALSE(hitting_time(zero, 1.0).has_value());
    SamplePath lin(grid);
    for (std::size_t j = 0; j < grid.size(); ++j) lin[j] = 2.0 * grid.t(j);
    const auto t = hitting_time(lin, 1.0);
    REQUIRE(t.has_value());
    CHECK(*t == doctest::Approx(0.5).epsilon(1e-12));
    const auto tdown = hitting_time(lin, -1.0, false);
    CHECK_FALSE(tdown.has_value());
}

TEST_CASE("running extrema are cumulative") {
    const TimeGrid grid(1.0, 4);
    SamplePath p(grid, 0.0);
    p.values = {0.0, 2.0, -1.0, 1.0, -3.0};
    const auto mx = running_max(p), mn = running_min(p);
    CHECK(mx.values == std::vector<double>{0.0, 2.0, 2.0, 2.0, 2.0});
    CHECK(mn.values == std::vector<double>{0.0, 0.0, -1.0, -1.0, -3.0});
}

TEST_CASE("barrier hit probability matches the reflection principle") {
    // P[max W <= 1 on [0,1]] complement = 2(1 - Phi(1)) ~ 0.3173
    const TimeGrid grid(1.0, 4000);
    std::size_t hits = 0;
    const std::size_t n = 10000;
    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng(11, i);
        const auto w = gen_brownian(grid, rng);
        if (hitting_time(w, 1.0).has_value()) ++hits;
    }
    const auto f = binomial_stat(hits, n);
    const double target = 2.0 * (1.0 - normal_cdf(1.0));
    // 3 standard errors plus the O(sqrt(dt)) barrier-crossing bias allowance
    CHECK(std::abs(f.mean - target) <= 3.0 * f.se + 0.006);
}

TEST_CASE("brownian increments pass moment checks at 1e5 draws") {
    const TimeGrid grid(1.0, 100000);
    RngStream rng(12, 0);
    const auto w = gen_brownian(grid, rng);
    std::vector<double> inc(grid.steps);
    for (std::size_t j = 0; j < grid.steps; ++j)
        inc[j] = (w[j + 1] - w[j]) / std::sqrt(grid.dt());
    CHECK(std::abs(skewness(inc)) < 4.0 * std::sqrt(6.0 / static_cast<double>(inc.size())));
    CHECK(std::abs(excess_kurtosis(inc)) < 4.0 * std::sqrt(24.0 / static_cast<double>(inc.size())));
}

#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "deflab/grid.hpp"
#include "deflab/path_ops.hpp"
#include "deflab/rng.hpp"
#include "deflab/stats.hpp"

namespace deflab {

/// The non-representable jump martingale built from the first |W|-passages of
/// level one: N = 1_[tau,inf) - (1/2) sum_i 1_[tau_i,inf) 1{tau_i <= tau},
/// where tau is the first hit of +1 by W and the tau_i alternate with returns
/// of W to zero. Piecewise constant with jumps of exactly +-1/2.
struct SignMartingale {
    SamplePath n;
    double tau = std::numeric_limits<double>::infinity(); // first W-hit of +1
    bool censored = false;                                // tau beyond horizon
    std::vector<double> jump_times;                       // tau_i <= tau
    std::vector<int> jump_signs;                          // sign of W at each tau_i
};

inline SignMartingale sign_martingale_N(const SamplePath& w) {
    SignMartingale out;
    out.n = SamplePath(w.grid, 0.0);
    bool seeking_barrier = true;
    double run_sign = 0.0;
    bool stopped = false;
    for (std::size_t j = 1; j < w.size() && !stopped; ++j) {
        if (seeking_barrier && std::abs(w[j]) >= 1.0) {
            const double prev = std::abs(w[j - 1]);
            const double frac = (1.0 - prev) / (std::abs(w[j]) - prev);
            const double t_hit = w.t(j - 1) + frac * w.dt();
            const int s = w[j] > 0.0 ? 1 : -1;
            out.jump_times.push_back(t_hit);
            out.jump_signs.push_back(s);
            seeking_barrier = false;
            run_sign = static_cast<double>(s);
            if (s > 0) {
                out.tau = t_hit;
                stopped = true; // jumps after tau do not occur
            }
        } else if (!seeking_barrier && sign_of(w[j]) != run_sign) {
            seeking_barrier = true; // W returned to zero
        }
    }
    out.censored = !std::isfinite(out.tau);
    for (std::size_t j = 0; j < w.size(); ++j) {
        const double t = w.t(j);
        double v = 0.0;
        if (t >= out.tau) v += 1.0;
        for (std::size_t i = 0; i < out.jump_times.size(); ++i)
            if (t >= out.jump_times[i]) v -= 0.5;
        out.n[j] = v;
    }
    return out;
}

/// Market with integrand theta = B before time 1, then 1 or 2 according to
/// the sign of B_1; the sign is recoverable from the quadratic-variation
/// slope of log S after time 1.
struct ThetaSwitchMarket {
    SamplePath s;
    bool b1_positive = false;
    bool recovered_positive = false;
    double qv_slope = 0.0;
};

inline ThetaSwitchMarket theta_switch_market(const SamplePath& b, double slope_threshold = 1.5) {
    if (!(b.grid.horizon > 1.0))
        throw std::invalid_argument("theta_switch_market: horizon must exceed 1");
    const std::size_t j1 = static_cast<std::size_t>(std::llround(1.0 / b.dt()));
    if (std::abs(b.t(j1) - 1.0) > 0.5 * b.dt())
        throw std::invalid_argument("theta_switch_market: t = 1 must lie on the grid");
    ThetaSwitchMarket out;
    out.b1_positive = b[j1] > 0.0;
    SamplePath theta(b.grid, 0.0);
    for (std::size_t j = 0; j < b.size(); ++j)
        theta[j] = b.t(j) < 1.0 ? b[j] : (out.b1_positive ? 1.0 : 2.0);
    out.s = stoch_exponential(ito_integral(theta, b));
    // realized QV of log S over [1, T]
    double qv = 0.0;
    for (std::size_t j = j1; j + 1 < b.size(); ++j) {
        const double d = std::log(out.s[j + 1]) - std::log(out.s[j]);
        qv += d * d;
    }
    out.qv_slope = qv / (b.grid.horizon - 1.0);
    out.recovered_positive = out.qv_slope < slope_threshold;
    return out;
}

/// Prices of the sign claim f(1{B_1 > 0}) across the extremal measures Z^alpha.
struct PriceInterval {
    double complete_price = 0.0;       // (f(0) + f(1)) / 2, the larger-filtration cost
    double small_filtration_cost = 0.0; // max{f(0), f(1)}
    std::vector<double> alphas;
    std::vector<double> alpha_prices;  // affine in alpha
};

inline double alpha_price(double alpha, double f0, double f1) {
    return f1 * (1.0 + alpha) / 2.0 + f0 * (1.0 - alpha) / 2.0;
}

inline PriceInterval price_interval(double f0, double f1, std::size_t n_alpha = 21) {
    if (f0 < 0.0 || f1 < 0.0) throw std::invalid_argument("price_interval: payoff must be >= 0");
    PriceInterval out;
    out.complete_price = 0.5 * (f0 + f1);
    out.small_filtration_cost = std::max(f0, f1);
    for (std::size_t i = 0; i < n_alpha; ++i) {
        const double a = -1.0 + 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n_alpha);
        out.alphas.push_back(a);
        out.alpha_prices.push_back(alpha_price(a, f0, f1));
    }
    return out;
}

/// Monte Carlo cross-check of E[Z^alpha_1 f(1{B_1 > 0})] from simulated signs.
inline MeanStat mc_alpha_price(double alpha, double f0, double f1, std::size_t n,
                               std::uint64_t seed) {
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng(seed, i);
        const bool pos = rng.gaussian() > 0.0;
        const double z = 1.0 + (pos ? alpha : -alpha);
        vals[i] = z * (pos ? f1 : f0);
    }
    return mean_se(vals);
}

} // namespace deflab

#pragma once

#include <cmath>
#include <optional>

#include "deflab/grid.hpp"

namespace deflab {

/// Sign convention used throughout: sign(0) := -1. The zero set of a Brownian
/// path has zero grid measure a.s., so the convention is statistically inert.
inline double sign_of(double x) { return x > 0.0 ? 1.0 : -1.0; }

/// Left-endpoint Riemann-Ito sum: result[j] = sum_{i<j} f[i] (g[i+1]-g[i]).
inline SamplePath ito_integral(const SamplePath& integrand, const SamplePath& integrator) {
    require_same_grid(integrand, integrator, "ito_integral");
    SamplePath out(integrand.grid, 0.0);
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < integrator.size(); ++j) {
        acc += integrand[j] * (integrator[j + 1] - integrator[j]);
        out[j + 1] = acc;
    }
    return out;
}

/// Realized quadratic variation: running sum of squared increments.
inline SamplePath quadratic_variation(const SamplePath& p) {
    SamplePath out(p.grid, 0.0);
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < p.size(); ++j) {
        const double d = p[j + 1] - p[j];
        acc += d * d;
        out[j + 1] = acc;
    }
    return out;
}

/// Stochastic exponential E(X)_t = exp(X_t - X_0 - [X,X]_t / 2) with the
/// realized bracket. With this convention Yor's product formula
/// E(X) E(Y) = E(X + Y + [X,Y]) holds exactly on the grid.
inline SamplePath stoch_exponential(const SamplePath& x) {
    SamplePath out(x.grid, 1.0);
    double qv = 0.0;
    for (std::size_t j = 1; j < x.size(); ++j) {
        const double d = x[j] - x[j - 1];
        qv += d * d;
        out[j] = std::exp(x[j] - x[0] - 0.5 * qv);
    }
    return out;
}

inline SamplePath running_max(const SamplePath& p) {
    SamplePath out(p.grid, p[0]);
    double m = p[0];
    for (std::size_t j = 1; j < p.size(); ++j) {
        m = std::max(m, p[j]);
        out[j] = m;
    }
    return out;
}

inline SamplePath running_min(const SamplePath& p) {
    SamplePath out(p.grid, p[0]);
    double m = p[0];
    for (std::size_t j = 1; j < p.size(); ++j) {
        m = std::min(m, p[j]);
        out[j] = m;
    }
    return out;
}

/// First time the path reaches `level`, refined by linear interpolation inside
/// the bracketing step. from_below selects the crossing direction.
/// Returns nullopt when the level is never reached on the grid.
inline std::optional<double> hitting_time(const SamplePath& p, double level, bool from_below = true) {
    auto reached = [&](double v) { return from_below ? v >= level : v <= level; };
    if (reached(p[0])) return 0.0;
    for (std::size_t j = 1; j < p.size(); ++j) {
        if (reached(p[j])) {
            const double prev = p[j - 1];
            const double frac = (level - prev) / (p[j] - prev);
            return p.t(j - 1) + frac * p.dt();
        }
    }
    return std::nullopt;
}

} // namespace deflab

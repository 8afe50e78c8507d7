#pragma once

#include <cmath>
#include <optional>
#include <span>

#include "deflab/grid.hpp"
#include "deflab/rng.hpp"

namespace deflab {

/// What a path-dependent coefficient may look at when asked for its value at
/// step j: current time/state, running extrema, and the whole path prefix.
struct StepContext {
    double t = 0.0;
    double x = 0.0;
    double x_max = 0.0;
    double x_min = 0.0;
    std::size_t index = 0;
    std::span<const double> prefix; // values[0..index]
};

/// Standard Brownian path: values[0] = 0, i.i.d. N(0, dt) increments drawn
/// from the stream in step order.
inline SamplePath gen_brownian(const TimeGrid& grid, RngStream& rng) {
    SamplePath w(grid, 0.0);
    const double sdt = std::sqrt(grid.dt());
    double x = 0.0;
    for (std::size_t j = 1; j < w.size(); ++j) {
        x += sdt * rng.gaussian();
        w[j] = x;
    }
    return w;
}

struct EulerResult {
    SamplePath path;
    /// First index at which the drift or diffusion stopped being finite; the
    /// path is frozen from there on. Ensemble statistics must report the
    /// flagged fraction rather than silently dropping such paths.
    std::optional<std::size_t> exploded_at;

    bool exploded() const { return exploded_at.has_value(); }
};

/// Euler-Maruyama with path-functional coefficients. With drift 0 and
/// diffusion 1 this reproduces gen_brownian bit-exactly for the same stream.
template <class DriftFn, class DiffFn>
EulerResult euler_maruyama(const TimeGrid& grid, RngStream& rng, double x0,
                           DriftFn&& drift, DiffFn&& diffusion) {
    EulerResult res{SamplePath(grid, x0), std::nullopt};
    auto& v = res.path.values;
    const double dt = grid.dt();
    const double sdt = std::sqrt(dt);
    double x = x0, xmax = x0, xmin = x0;
    for (std::size_t j = 0; j + 1 < v.size(); ++j) {
        const double z = rng.gaussian(); // one draw per step, flagged or not
        if (!res.exploded_at) {
            StepContext ctx{grid.t(j), x, xmax, xmin, j,
                            std::span<const double>(v.data(), j + 1)};
            const double mu = drift(ctx);
            const double sig = diffusion(ctx);
            if (!std::isfinite(mu) || !std::isfinite(sig)) {
                res.exploded_at = j;
            } else {
                x = x + mu * dt + sig * (sdt * z);
                xmax = std::max(xmax, x);
                xmin = std::min(xmin, x);
            }
        }
        v[j + 1] = x;
    }
    return res;
}

} // namespace deflab

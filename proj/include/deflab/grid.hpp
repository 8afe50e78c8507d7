#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace deflab {

/// Uniform time grid t_j = j * dt, j = 0..steps, with dt = horizon / steps.
struct TimeGrid {
    double horizon = 1.0;
    std::size_t steps = 1;

    TimeGrid() = default;
    TimeGrid(double horizon_, std::size_t steps_) : horizon(horizon_), steps(steps_) {
        if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be > 0");
        if (steps < 1) throw std::invalid_argument("TimeGrid: steps must be >= 1");
    }

    double dt() const { return horizon / static_cast<double>(steps); }
    double t(std::size_t j) const { return static_cast<double>(j) * dt(); }
    std::size_t size() const { return steps + 1; }

    bool operator==(const TimeGrid&) const = default;
};

/// Values of one realized process on a uniform grid; carrier of W, B, X, S, zeta, ...
struct SamplePath {
    TimeGrid grid;
    std::vector<double> values;

    SamplePath() = default;
    explicit SamplePath(TimeGrid g, double initial = 0.0)
        : grid(g), values(g.size(), initial) {}
    SamplePath(TimeGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.size())
            throw std::invalid_argument("SamplePath: values length must be steps+1");
    }

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t j) const { return values[j]; }
    double& operator[](std::size_t j) { return values[j]; }
    double front() const { return values.front(); }
    double back() const { return values.back(); }
    double dt() const { return grid.dt(); }
    double t(std::size_t j) const { return grid.t(j); }
};

inline void require_same_grid(const SamplePath& a, const SamplePath& b, const char* what) {
    if (!(a.grid == b.grid))
        throw std::invalid_argument(std::string(what) + ": paths live on different grids");
}

/// Grid node closest to time t (t must lie within the horizon).
inline std::size_t node_at(const TimeGrid& grid, double t) {
    const long long j = static_cast<long long>(t / grid.dt() + 0.5);
    if (j < 0 || static_cast<std::size_t>(j) > grid.steps)
        throw std::invalid_argument("node_at: time beyond horizon");
    return static_cast<std::size_t>(j);
}

} // namespace deflab

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "deflab/grid.hpp"

namespace deflab {

/// Finite-atom (or gridded) prior on the drift parameter, sorted by theta.
/// `tilt` holds the strictly positive weight-tilt h with sum(h * w) = 1;
/// empty means h = 1.
struct ParamPrior {
    std::vector<double> theta;
    std::vector<double> weight;
    std::vector<double> tilt;
    bool heavy_tail = false; // E|Theta| = infinity (generalized conditional means only for t > 0)

    std::size_t size() const { return theta.size(); }

    double h(std::size_t i) const { return tilt.empty() ? 1.0 : tilt[i]; }

    static ParamPrior atoms(std::vector<std::pair<double, double>> atom_list,
                            std::vector<double> tilt_values = {}) {
        if (atom_list.empty()) throw std::invalid_argument("ParamPrior: no atoms");
        std::vector<std::size_t> order(atom_list.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return atom_list[a].first < atom_list[b].first; });
        ParamPrior p;
        double total = 0.0;
        for (std::size_t i : order) total += atom_list[i].second;
        if (!(total > 0.0)) throw std::invalid_argument("ParamPrior: weights must be positive");
        for (std::size_t i : order) {
            p.theta.push_back(atom_list[i].first);
            p.weight.push_back(atom_list[i].second / total);
            if (!tilt_values.empty()) p.tilt.push_back(tilt_values[i]);
        }
        if (!p.tilt.empty()) {
            double hw = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) hw += p.tilt[i] * p.weight[i];
            if (std::abs(hw - 1.0) > 1e-9)
                throw std::invalid_argument("ParamPrior: tilt must satisfy sum(h w) = 1");
        }
        return p;
    }

    /// Inverse-Gamma prior mu[d theta] = 1{theta>0} theta^-3 e^{-1/theta} d theta,
    /// gridded in u = 1/theta (where the density is the Gamma(2,1) law u e^-u)
    /// with exact per-cell masses and midpoint atoms. Dropped tail mass is
    /// below 1e-6 on each side.
    static ParamPrior inverse_gamma_grid(std::size_t cells = 10000) {
        const double u_lo = 8e-4, u_hi = 17.5;
        auto upper_mass = [](double u) { return (1.0 + u) * std::exp(-u); }; // integral_u^inf v e^-v dv
        ParamPrior p;
        p.theta.resize(cells);
        p.weight.resize(cells);
        const double du = (u_hi - u_lo) / static_cast<double>(cells);
        double total = 0.0;
        for (std::size_t k = 0; k < cells; ++k) {
            const double a = u_lo + du * static_cast<double>(k);
            const double b = a + du;
            const double mass = upper_mass(a) - upper_mass(b);
            const double u_mid = 0.5 * (a + b);
            // ascending theta = descending u
            const std::size_t idx = cells - 1 - k;
            p.theta[idx] = 1.0 / u_mid;
            p.weight[idx] = mass;
            total += mass;
        }
        for (auto& w : p.weight) w /= total;
        return p;
    }

    /// Standard Cauchy prior on a symmetric grid; E|Theta| diverges, which is
    /// the heavy-tail case where the drift's conditional mean exists only in
    /// the generalized sense for t > 0.
    static ParamPrior cauchy_grid(std::size_t cells = 4000, double span = 200.0) {
        ParamPrior p;
        p.heavy_tail = true;
        p.theta.resize(cells);
        p.weight.resize(cells);
        const double dth = 2.0 * span / static_cast<double>(cells);
        double total = 0.0;
        for (std::size_t k = 0; k < cells; ++k) {
            const double a = -span + dth * static_cast<double>(k);
            const double b = a + dth;
            const double mass = (std::atan(b) - std::atan(a)) / 3.14159265358979323846;
            p.theta[k] = 0.5 * (a + b);
            p.weight[k] = mass;
            total += mass;
        }
        for (auto& w : p.weight) w /= total;
        return p;
    }
};

/// Drift functional G(theta, x, t) for the stock returns, with the family's
/// explosion (kill) rule making the dead set Sigma_t explicit.
struct DriftModel {
    enum class Family { linear, never_cross, custom };

    Family family = Family::never_cross;

    /// linear family: G = theta * H(t, prefix); H must stay nonzero.
    std::function<double(double, std::span<const double>)> linear_h;

    std::function<double(double, double, std::span<const double>, double)> custom_g;
    std::function<bool(double, double)> custom_kill;

    static DriftModel never_cross() { return DriftModel{Family::never_cross, {}, {}, {}}; }

    static DriftModel linear(std::function<double(double, std::span<const double>)> h = {}) {
        DriftModel m;
        m.family = Family::linear;
        m.linear_h = std::move(h);
        return m;
    }

    static DriftModel custom(std::function<double(double, double, std::span<const double>, double)> g,
                             std::function<bool(double, double)> kill) {
        DriftModel m;
        m.family = Family::custom;
        m.custom_g = std::move(g);
        m.custom_kill = std::move(kill);
        return m;
    }

    double g(double theta, double t, std::span<const double> prefix, double x) const {
        switch (family) {
            case Family::linear:
                return theta * (linear_h ? linear_h(t, prefix) : 1.0);
            case Family::never_cross:
                return theta * x < 1.0 ? -theta / (1.0 - theta * x) : 0.0;
            case Family::custom:
                return custom_g(theta, t, prefix, x);
        }
        return 0.0;
    }

    /// Atom enters Sigma (density hits zero) at state x.
    bool kills(double theta, double x) const {
        switch (family) {
            case Family::linear:
                return false;
            case Family::never_cross:
                return theta * x >= 1.0;
            case Family::custom:
                return custom_kill && custom_kill(theta, x);
        }
        return false;
    }
};

struct FilterState {
    double t = 0.0;
    double zeta = 1.0;
    double k_h = 0.0;
    std::size_t n_alive = 0;
    std::vector<double> log_zeta;  // -inf once dead
    std::vector<char> alive;
    std::vector<double> posterior; // w_i zeta^i / zeta, zero for dead atoms
};

struct FilterRun {
    TimeGrid grid;
    // trajectory columns, one value per grid node (CSV schema t,zeta,K_h,F_drift,n_alive,oY)
    std::vector<double> zeta;
    std::vector<double> k_h;
    std::vector<double> f_drift;
    std::vector<double> n_alive;
    std::vector<double> oy;
    FilterState final_state;
    std::vector<FilterState> checkpoint_states;
    bool zeta_hit_zero = false;
    std::size_t zeta_zero_index = 0;
};

struct FilterOptions {
    std::vector<double> checkpoint_times;
    /// Force the generic per-atom exponential accumulation even where the
    /// never-cross closed form is available.
    bool force_exp_route = false;
};

namespace closed_form {

/// Never-cross family: zeta^theta = (1 - theta X) on the alive set.
inline double never_cross_zeta(const ParamPrior& prior, double x, double x_max, double x_min) {
    double acc = 0.0;
    for (std::size_t i = 0; i < prior.size(); ++i) {
        const double th = prior.theta[i];
        const bool dead = (th > 0.0 && th * x_max >= 1.0) || (th < 0.0 && th * x_min >= 1.0);
        if (!dead) acc += prior.weight[i] * (1.0 - th * x);
    }
    return acc;
}

inline double inv_gamma_zeta(double x, double x_max) {
    return (1.0 + x_max - x) * std::exp(-x_max);
}

inline double inv_gamma_k1(double x_max) {
    return 1.0 - (1.0 + x_max) * std::exp(-x_max);
}

inline double inv_gamma_drift(double x, double x_max) {
    return -1.0 / (1.0 + x_max - x);
}

} // namespace closed_form

namespace detail {

inline double log_zeta_increment(double g, double dx) {
    const double gdx = g * dx;
    // Product-form stochastic exponential: exact for the never-cross family,
    // third-order equivalent to the Ito-sum form in general.
    if (gdx > -1.0) return std::log1p(gdx);
    return gdx - 0.5 * gdx * gdx;
}

} // namespace detail

/// Advances the per-parameter density processes zeta^theta along the observed
/// path, maintaining the dead set, the mixture zeta, the posterior, the mass
/// loss K^h, and the projected deflator column oY = (1 - K^h) / zeta.
inline FilterRun run_filter(const SamplePath& x, const ParamPrior& prior, const DriftModel& model,
                            const FilterOptions& opts = {}) {
    const std::size_t n = x.size();
    const std::size_t m = prior.size();
    FilterRun run;
    run.grid = x.grid;
    run.zeta.resize(n);
    run.k_h.resize(n);
    run.f_drift.resize(n);
    run.n_alive.resize(n);
    run.oy.resize(n);

    const bool closed = model.family == DriftModel::Family::never_cross && !opts.force_exp_route;

    // prefix sums over atoms sorted by theta, for O(1) alive-interval sums
    std::vector<double> pw(m + 1, 0.0), pwt(m + 1, 0.0), pwh(m + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        pw[i + 1] = pw[i] + prior.weight[i];
        pwt[i + 1] = pwt[i] + prior.weight[i] * prior.theta[i];
        pwh[i + 1] = pwh[i] + prior.weight[i] * prior.h(i);
    }

    std::vector<double> log_zeta(m, 0.0);
    std::vector<char> alive(m, 1);
    // alive interval for the never-cross closed route: atoms in [lo, hi)
    std::size_t lo = 0, hi = m;
    double k_h = 0.0;
    std::size_t next_checkpoint = 0;
    std::vector<double> cp_times = opts.checkpoint_times;
    std::sort(cp_times.begin(), cp_times.end());

    auto state_at = [&](double t, double zeta) {
        FilterState st;
        st.t = t;
        st.zeta = zeta;
        st.k_h = k_h;
        st.log_zeta.resize(m);
        st.alive.assign(alive.begin(), alive.end());
        st.posterior.assign(m, 0.0);
        double nal = 0;
        for (std::size_t i = 0; i < m; ++i) {
            st.log_zeta[i] = alive[i] ? log_zeta[i] : -std::numeric_limits<double>::infinity();
            if (alive[i]) ++nal;
        }
        st.n_alive = static_cast<std::size_t>(nal);
        if (zeta > 0.0) {
            for (std::size_t i = 0; i < m; ++i)
                if (alive[i]) st.posterior[i] = prior.weight[i] * std::exp(st.log_zeta[i]) / zeta;
        }
        return st;
    };

    auto fill_node = [&](std::size_t j, double zeta, double f) {
        run.zeta[j] = zeta;
        run.k_h[j] = k_h;
        run.f_drift[j] = f;
        run.n_alive[j] = closed ? static_cast<double>(hi - lo)
                                : static_cast<double>(std::count(alive.begin(), alive.end(), char(1)));
        if (zeta > 0.0 && !run.zeta_hit_zero) {
            run.oy[j] = (1.0 - k_h) / zeta;
        } else {
            if (!run.zeta_hit_zero) {
                run.zeta_hit_zero = true;
                run.zeta_zero_index = j;
            }
            run.oy[j] = j > 0 ? run.oy[j - 1] : 1.0; // frozen; path flagged
        }
    };

    auto closed_zeta_f = [&](double xv, double& zeta, double& f) {
        const double wsum = pw[hi] - pw[lo];
        const double ssum = pwt[hi] - pwt[lo];
        zeta = wsum - xv * ssum;
        if (wsum > 0.0) {
            const double theta_hat = ssum / wsum;
            f = -theta_hat / (1.0 - theta_hat * xv);
        } else {
            f = 0.0;
        }
    };

    auto exp_zeta_f = [&](std::size_t j, double xv, double& zeta, double& f) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i)
            if (alive[i]) mx = std::max(mx, log_zeta[i]);
        if (!std::isfinite(mx)) {
            zeta = 0.0;
            f = 0.0;
            return;
        }
        double zs = 0.0, fs = 0.0;
        const std::span<const double> prefix(x.values.data(), j + 1);
        for (std::size_t i = 0; i < m; ++i) {
            if (!alive[i]) continue;
            const double zi = prior.weight[i] * std::exp(log_zeta[i] - mx);
            zs += zi;
            fs += zi * model.g(prior.theta[i], x.t(j), prefix, xv);
        }
        zeta = zs * std::exp(mx);
        f = zs > 0.0 ? fs / zs : 0.0;
    };

    // t = 0 node (atoms already dead at the initial state are removed first)
    {
        if (closed) {
            while (hi > lo && prior.theta[hi - 1] > 0.0 && prior.theta[hi - 1] * x[0] >= 1.0) {
                --hi;
                k_h += prior.weight[hi] * prior.h(hi);
            }
            while (lo < hi && prior.theta[lo] < 0.0 && prior.theta[lo] * x[0] >= 1.0) {
                k_h += prior.weight[lo] * prior.h(lo);
                ++lo;
            }
        } else {
            for (std::size_t i = 0; i < m; ++i) {
                if (model.kills(prior.theta[i], x[0])) {
                    alive[i] = 0;
                    k_h += prior.weight[i] * prior.h(i);
                }
            }
        }
        double zeta, f;
        if (closed)
            closed_zeta_f(x[0], zeta, f);
        else
            exp_zeta_f(0, x[0], zeta, f);
        fill_node(0, zeta, f);
    }

    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double xj = x[j], xj1 = x[j + 1];
        const double dx = xj1 - xj;
        const double tj = x.t(j);

        if (closed) {
            // kills are monotone in theta: positive atoms die from the top as
            // the running max rises, negative atoms from the bottom
            while (hi > lo && prior.theta[hi - 1] > 0.0 && prior.theta[hi - 1] * xj1 >= 1.0) {
                --hi;
                k_h += prior.weight[hi] * prior.h(hi);
            }
            while (lo < hi && prior.theta[lo] < 0.0 && prior.theta[lo] * xj1 >= 1.0) {
                k_h += prior.weight[lo] * prior.h(lo);
                ++lo;
            }
            double zeta, f;
            closed_zeta_f(xj1, zeta, f);
            fill_node(j + 1, zeta, f);
        } else {
            const std::span<const double> prefix(x.values.data(), j + 1);
            for (std::size_t i = 0; i < m; ++i) {
                if (!alive[i]) continue;
                if (model.kills(prior.theta[i], xj1)) {
                    alive[i] = 0;
                    k_h += prior.weight[i] * prior.h(i);
                    continue;
                }
                const double g = model.g(prior.theta[i], tj, prefix, xj);
                if (!std::isfinite(g))
                    throw std::runtime_error("run_filter: non-finite drift on an alive atom "
                                             "(model misspecification)");
                log_zeta[i] += detail::log_zeta_increment(g, dx);
            }
            double zeta, f;
            exp_zeta_f(j + 1, xj1, zeta, f);
            fill_node(j + 1, zeta, f);
        }

        while (next_checkpoint < cp_times.size() && x.t(j + 1) >= cp_times[next_checkpoint] - 1e-12) {
            if (closed) {
                for (std::size_t i = 0; i < m; ++i) {
                    const bool al = i >= lo && i < hi;
                    alive[i] = al ? 1 : 0;
                    log_zeta[i] = al ? std::log(1.0 - prior.theta[i] * xj1) : 0.0;
                }
            }
            run.checkpoint_states.push_back(state_at(x.t(j + 1), run.zeta[j + 1]));
            ++next_checkpoint;
        }
    }

    if (closed) {
        for (std::size_t i = 0; i < m; ++i) {
            const bool al = i >= lo && i < hi;
            alive[i] = al ? 1 : 0;
            log_zeta[i] = al ? std::log(1.0 - prior.theta[i] * x.back()) : 0.0;
        }
    }
    run.final_state = state_at(x.grid.horizon, run.zeta.back());
    return run;
}

/// Posterior-mean drift F(X, t) = sum_alive G(theta_i) w_i zeta^i / zeta.
/// Refused at t = 0 for heavy-tailed priors (the prior mean does not exist)
/// and whenever zeta = 0 (the P-null branch).
inline double posterior_mean_drift(const FilterState& state, const ParamPrior& prior,
                                   const DriftModel& model, std::span<const double> prefix,
                                   double t) {
    if (prior.heavy_tail && t <= 0.0)
        throw std::domain_error("posterior_mean_drift: prior has no mean; t = 0 refused");
    if (!(state.zeta > 0.0))
        throw std::domain_error("posterior_mean_drift: zeta = 0 (P-null branch)");
    const double x = prefix.empty() ? 0.0 : prefix.back();
    double f = 0.0;
    for (std::size_t i = 0; i < prior.size(); ++i)
        if (state.alive[i]) f += state.posterior[i] * model.g(prior.theta[i], t, prefix, x);
    return f;
}

struct DeflatorPair {
    SamplePath oy; // optional projection (1 - K^h) / zeta
    SamplePath l;  // local-martingale factor 1 / zeta
    bool flagged = false;
};

/// Projected deflator oY = (1 - K^h) / zeta and its companion L = 1 / zeta.
inline DeflatorPair projected_deflator(const FilterRun& run) {
    DeflatorPair out{SamplePath(run.grid, 1.0), SamplePath(run.grid, 1.0), run.zeta_hit_zero};
    for (std::size_t j = 0; j < run.zeta.size(); ++j) {
        out.oy[j] = run.oy[j];
        const bool frozen = run.zeta_hit_zero && j >= run.zeta_zero_index;
        out.l[j] = frozen ? out.l[j > 0 ? j - 1 : 0] : 1.0 / run.zeta[j];
    }
    return out;
}

/// P[X*_inf > y] for the never-cross family:
/// mu((-inf, 1/y)) - y * integral of theta over (0, 1/y).
inline double max_law(double y, const ParamPrior& prior) {
    if (!(y > 0.0)) throw std::invalid_argument("max_law: y must be > 0");
    const double inv_y = 1.0 / y;
    double mass = 0.0, first_moment = 0.0;
    for (std::size_t i = 0; i < prior.size(); ++i) {
        const double th = prior.theta[i];
        if (th < inv_y) {
            mass += prior.weight[i];
            if (th > 0.0) first_moment += prior.weight[i] * th;
        }
    }
    return mass - y * first_moment;
}

} // namespace deflab

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "deflab/bayes.hpp"
#include "deflab/grid.hpp"
#include "deflab/parallel.hpp"
#include "deflab/rng.hpp"
#include "deflab/sde.hpp"
#include "deflab/stats.hpp"

namespace deflab {

/// Claim payoff, evaluable from the path restricted to [0, t].
using Payoff = std::function<double(const SamplePath&, double)>;

struct McEstimate {
    double value = 0.0;
    double se = 0.0;
    std::size_t n = 0;
    double flagged_fraction = 0.0;
};

enum class PriceSide { p_side, w_side };

struct DualPriceConfig {
    TimeGrid grid;
    double t = 1.0;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 1;
};

/// Draw an atom index from the prior with a single uniform.
inline std::size_t draw_atom(const ParamPrior& prior, double u) {
    double acc = 0.0;
    for (std::size_t i = 0; i < prior.size(); ++i) {
        acc += prior.weight[i];
        if (u < acc) return i;
    }
    return prior.size() - 1;
}

/// Two Monte Carlo routes to the same number:
///   P-side:  E_P[xi / zeta_t], simulating theta ~ prior and the P^theta path;
///   W-side:  E_W[xi 1{mu[Sigma_t] < 1}], simulating plain Brownian paths.
/// Exploded paths are excluded from the mean and reported via flagged_fraction.
inline McEstimate dual_price(const Payoff& payoff, const ParamPrior& prior, const DriftModel& model,
                             PriceSide side, const DualPriceConfig& cfg) {
    const std::size_t jt = node_at(cfg.grid, cfg.t);
    std::vector<double> vals(cfg.n_paths, 0.0);
    std::vector<char> ok(cfg.n_paths, 1);

    parallel_for(cfg.n_paths, [&](std::size_t i) {
        RngStream rng(cfg.seed, i);
        if (side == PriceSide::w_side) {
            const SamplePath x = gen_brownian(cfg.grid, rng);
            FilterRun run = run_filter(x, prior, model);
            const bool some_alive = run.n_alive[jt] > 0.0;
            vals[i] = some_alive ? payoff(x, cfg.t) : 0.0;
        } else {
            const double u = rng.uniform();
            const double theta = prior.theta[draw_atom(prior, u)];
            auto drift = [&](const StepContext& c) {
                const double g = model.g(theta, c.t, c.prefix, c.x);
                return model.kills(theta, c.x) ? std::numeric_limits<double>::quiet_NaN() : g;
            };
            auto one = [](const StepContext&) { return 1.0; };
            EulerResult er = euler_maruyama(cfg.grid, rng, 0.0, drift, one);
            if (er.exploded() && *er.exploded_at <= jt) {
                ok[i] = 0;
                return;
            }
            FilterRun run = run_filter(er.path, prior, model);
            if (!(run.zeta[jt] > 0.0)) {
                ok[i] = 0;
                return;
            }
            vals[i] = payoff(er.path, cfg.t) / run.zeta[jt];
        }
    });

    std::vector<double> kept;
    kept.reserve(cfg.n_paths);
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < cfg.n_paths; ++i) {
        if (ok[i])
            kept.push_back(vals[i]);
        else
            ++flagged;
    }
    const MeanStat ms = mean_se(kept);
    return {ms.mean, ms.se, ms.n, static_cast<double>(flagged) / static_cast<double>(cfg.n_paths)};
}

struct HedgingCosts {
    McEstimate p;                      // uninformed hedging cost E_W[xi 1{mu[Sigma_t] < 1}]
    std::vector<McEstimate> p_theta;   // per-atom informed costs E_W[xi 1{theta_i alive}]
    double ess_sup = 0.0;              // max over atoms with positive weight
    double gap = 0.0;                  // p - ess_sup
    double gap_se = 0.0;               // paired standard error against the best atom
};

/// Uninformed vs worst-case informed hedging costs, on shared W-side paths.
inline HedgingCosts hedging_costs(const Payoff& payoff, const ParamPrior& prior,
                                  const DriftModel& model, const DualPriceConfig& cfg) {
    const std::size_t jt = node_at(cfg.grid, cfg.t);
    const std::size_t m = prior.size();
    std::vector<double> p_vals(cfg.n_paths);
    std::vector<std::vector<double>> atom_vals(m, std::vector<double>(cfg.n_paths));

    parallel_for(cfg.n_paths, [&](std::size_t i) {
        RngStream rng(cfg.seed, i);
        const SamplePath x = gen_brownian(cfg.grid, rng);
        FilterOptions opts;
        opts.checkpoint_times = {cfg.t};
        FilterRun run = run_filter(x, prior, model, opts);
        const double xi = payoff(x, cfg.t);
        p_vals[i] = run.n_alive[jt] > 0.0 ? xi : 0.0;
        const FilterState& st = run.checkpoint_states.front();
        for (std::size_t a = 0; a < m; ++a) atom_vals[a][i] = st.alive[a] ? xi : 0.0;
    });

    HedgingCosts out;
    const MeanStat pm = mean_se(p_vals);
    out.p = {pm.mean, pm.se, pm.n, 0.0};
    std::size_t best = 0;
    for (std::size_t a = 0; a < m; ++a) {
        const MeanStat am = mean_se(atom_vals[a]);
        out.p_theta.push_back({am.mean, am.se, am.n, 0.0});
        if (am.mean > out.p_theta[best].value) best = a;
    }
    out.ess_sup = out.p_theta[best].value;
    std::vector<double> diff(cfg.n_paths);
    for (std::size_t i = 0; i < cfg.n_paths; ++i) diff[i] = p_vals[i] - atom_vals[best][i];
    const MeanStat dm = mean_se(diff);
    out.gap = dm.mean;
    out.gap_se = dm.se;
    return out;
}

} // namespace deflab

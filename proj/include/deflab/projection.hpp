#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "deflab/grid.hpp"
#include "deflab/levy.hpp"
#include "deflab/path_ops.hpp"
#include "deflab/rng.hpp"
#include "deflab/stats.hpp"

namespace deflab {

// ---------------------------------------------------------------------------
// Finite chains and the exact multiplicative decomposition
// ---------------------------------------------------------------------------

struct ChainNode {
    double value = 0.0;
    std::vector<std::size_t> children;
    std::vector<double> probs;
};

/// Finite-branching tree (time = depth) carrying a nonnegative adapted process.
struct FiniteChain {
    std::vector<ChainNode> nodes;
    std::size_t root = 0;
};

struct ChainDecomposition {
    std::vector<double> l; // martingale part, node-indexed
    std::vector<double> k; // predictable nondecreasing part, node-indexed
};

/// Multiplicative Doob-Meyer decomposition value = L (1 - K) on a finite
/// chain, by exact one-step conditional means. K at a child is determined at
/// the parent (predictable). The decomposition stops at the first zero of the
/// input; if the zero is announced (all children of a positive node have
/// conditional mean zero) K jumps to 1 there and L is continued flat.
inline ChainDecomposition chain_decompose(const FiniteChain& chain) {
    const std::size_t n = chain.nodes.size();
    ChainDecomposition out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    if (n == 0) return out;
    for (std::size_t v = 0; v < n; ++v) {
        const ChainNode& node = chain.nodes[v];
        if (node.value < 0.0) throw std::invalid_argument("chain_decompose: negative value");
        if (node.children.size() != node.probs.size())
            throw std::invalid_argument("chain_decompose: children/probs mismatch");
        if (!node.children.empty()) {
            double psum = 0.0;
            for (double p : node.probs) psum += p;
            if (std::abs(psum - 1.0) > 1e-12)
                throw std::invalid_argument("chain_decompose: probabilities must sum to 1 at node " +
                                            std::to_string(v));
        }
    }
    out.l[chain.root] = chain.nodes[chain.root].value;
    out.k[chain.root] = 0.0;

    // breadth-first: parents before children (builders emit them in order)
    for (std::size_t v = 0; v < n; ++v) {
        const ChainNode& node = chain.nodes[v];
        if (node.children.empty()) continue;
        double m = 0.0;
        for (std::size_t c = 0; c < node.children.size(); ++c)
            m += node.probs[c] * chain.nodes[node.children[c]].value;
        if (m > node.value * (1.0 + 1e-12) + 1e-12)
            throw std::invalid_argument("chain_decompose: not a supermartingale at node " +
                                        std::to_string(v));
        const double kv = out.k[v], lv = out.l[v];
        if (node.value <= 0.0) {
            // absorbed at zero: decomposition frozen
            for (std::size_t c : node.children) {
                out.k[c] = kv;
                out.l[c] = lv;
            }
        } else if (m <= 0.0) {
            // announced zero: K hits 1, no jump in L
            for (std::size_t c : node.children) {
                out.k[c] = 1.0;
                out.l[c] = lv;
            }
        } else {
            const double r = m / node.value; // one-step conditional mean ratio
            const double one_minus_k = (1.0 - kv) * r;
            for (std::size_t c : node.children) {
                out.k[c] = 1.0 - one_minus_k;
                out.l[c] = chain.nodes[c].value / one_minus_k;
            }
        }
    }
    return out;
}

/// Random supermartingale chain on a non-recombining tree: each node gets
/// 2..3 children, random branch probabilities, and a one-step mean ratio
/// drawn from [drift_lo, 1]. drift_lo = 1 builds a martingale chain.
inline FiniteChain random_supermartingale_chain(RngStream& rng, std::size_t depth,
                                                double drift_lo = 0.75) {
    FiniteChain chain;
    chain.nodes.push_back({1.0, {}, {}});
    std::vector<std::size_t> frontier{0};
    for (std::size_t d = 0; d < depth; ++d) {
        std::vector<std::size_t> next;
        for (std::size_t v : frontier) {
            const std::size_t kids = 2 + (rng.raw() % 2);
            std::vector<double> probs(kids), raw(kids);
            double psum = 0.0, mix = 0.0;
            for (std::size_t c = 0; c < kids; ++c) {
                probs[c] = 0.1 + rng.uniform();
                raw[c] = 0.1 + rng.uniform();
                psum += probs[c];
            }
            for (std::size_t c = 0; c < kids; ++c) {
                probs[c] /= psum;
                mix += probs[c] * raw[c];
            }
            const double ratio = drift_lo + (1.0 - drift_lo) * rng.uniform();
            const double target_mean = ratio * chain.nodes[v].value;
            for (std::size_t c = 0; c < kids; ++c) {
                const std::size_t id = chain.nodes.size();
                chain.nodes.push_back({raw[c] * target_mean / mix, {}, {}});
                chain.nodes[v].children.push_back(id);
                chain.nodes[v].probs.push_back(probs[c]);
                next.push_back(id);
            }
        }
        frontier = std::move(next);
    }
    return chain;
}

// ---------------------------------------------------------------------------
// Closed-form survival scenarios
// ---------------------------------------------------------------------------

enum class SurvivalTag { discrete_reveal, gaussian_reveal, excursion_count, bernoulli_reveal };

struct SurvivalInputs {
    const SamplePath* w = nullptr; // driving Brownian path
    const SamplePath* b = nullptr; // independent driver (gaussian_reveal only)
    double theta = 0.0;            // revealed parameter where the scenario has one
    double q = 0.5;
};

struct SurvivalPaths {
    SamplePath survival;
    SamplePath k;
    SamplePath m;
};

namespace detail {

/// nu = first |W| = 1, rho = first hit of -sign(W_nu) after nu (interpolated).
struct RevealTimes {
    double nu = std::numeric_limits<double>::infinity();
    double rho = std::numeric_limits<double>::infinity();
    double sign_at_nu = 0.0;
};

inline RevealTimes reveal_times(const SamplePath& w) {
    RevealTimes rt;
    std::size_t j_nu = 0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        if (std::abs(w[j]) >= 1.0) {
            rt.sign_at_nu = sign_of(w[j]);
            if (j == 0) {
                rt.nu = 0.0;
            } else {
                const double prev = std::abs(w[j - 1]);
                const double frac = (1.0 - prev) / (std::abs(w[j]) - prev);
                rt.nu = w.t(j - 1) + frac * w.dt();
            }
            j_nu = j;
            break;
        }
    }
    if (!std::isfinite(rt.nu)) return rt;
    const double barrier = -rt.sign_at_nu;
    for (std::size_t j = j_nu + 1; j < w.size(); ++j) {
        const bool crossed = rt.sign_at_nu > 0.0 ? w[j] <= barrier : w[j] >= barrier;
        if (crossed) {
            const double prev = w[j - 1];
            const double frac = (barrier - prev) / (w[j] - prev);
            rt.rho = w.t(j - 1) + frac * w.dt();
            break;
        }
    }
    return rt;
}

} // namespace detail

/// Closed-form conditional-survival triples (survival, K, M) per scenario;
/// (1 - K) M = survival holds exactly node by node. For gaussian_reveal and
/// bernoulli_reveal the paper pins only the projection itself, so K = 0 and
/// M carries the whole process.
inline SurvivalPaths survival_process(SurvivalTag tag, const SurvivalInputs& in) {
    if (in.w == nullptr) throw std::invalid_argument("survival_process: missing driving path");
    const SamplePath& w = *in.w;
    SurvivalPaths out{SamplePath(w.grid, 1.0), SamplePath(w.grid, 0.0), SamplePath(w.grid, 1.0)};

    switch (tag) {
        case SurvivalTag::discrete_reveal: {
            const double q = in.q;
            if (!(q > 0.0 && q <= 1.0))
                throw std::invalid_argument("discrete_reveal: q must be in (0, 1]");
            const auto rt = detail::reveal_times(w);
            for (std::size_t j = 0; j < w.size(); ++j) {
                const double t = w.t(j);
                const bool mid = t >= rt.nu && t < rt.rho;
                const bool late = t >= rt.rho;
                const double theta_known_nonzero = in.theta != 0.0 ? 1.0 : 0.0;
                out.survival[j] = 1.0 - (mid ? q / 2.0 : 0.0) - (late ? theta_known_nonzero : 0.0);
                out.k[j] = mid ? q / 2.0 : (late ? q : 0.0);
                if (q == 1.0)
                    out.m[j] = 1.0;
                else
                    out.m[j] = late ? (in.theta == 0.0 ? 1.0 / (1.0 - q) : 0.0) : 1.0;
            }
            break;
        }
        case SurvivalTag::gaussian_reveal: {
            if (in.b == nullptr) throw std::invalid_argument("gaussian_reveal: missing second driver");
            require_same_grid(w, *in.b, "gaussian_reveal");
            SamplePath integrand(w.grid, 0.0);
            for (std::size_t j = 0; j < w.size(); ++j)
                integrand[j] = std::sqrt(2.0) * std::exp(-w.t(j));
            const SamplePath psi = ito_integral(integrand, *in.b);
            double run_max = w[0], run_min = w[0];
            for (std::size_t j = 0; j < w.size(); ++j) {
                run_max = std::max(run_max, w[j]);
                run_min = std::min(run_min, w[j]);
                const double et = std::exp(w.t(j));
                const double hi = run_max > 0.0 ? normal_cdf(et * (1.0 / run_max - psi[j])) : 1.0;
                const double lo = run_min < 0.0 ? normal_cdf(et * (1.0 / run_min - psi[j])) : 0.0;
                out.survival[j] = hi - lo;
                out.k[j] = 0.0;
                out.m[j] = out.survival[j];
            }
            break;
        }
        case SurvivalTag::excursion_count: {
            const SamplePath lam = local_time(w, levy_transform(w));
            std::size_t count = 0;
            bool seeking_barrier = true;
            double run_sign = sign_of(w[0]);
            for (std::size_t j = 0; j < w.size(); ++j) {
                if (seeking_barrier) {
                    if (std::abs(w[j]) >= 0.5 * (1.0 + lam[j])) {
                        ++count;
                        seeking_barrier = false;
                        run_sign = sign_of(w[j]);
                    }
                } else if (sign_of(w[j]) != run_sign) {
                    seeking_barrier = true; // returned to zero
                }
                const double surv = std::ldexp(1.0, -static_cast<int>(count));
                out.survival[j] = surv;
                out.k[j] = 1.0 - surv;
                out.m[j] = 1.0;
            }
            break;
        }
        case SurvivalTag::bernoulli_reveal: {
            const double q = in.q;
            if (!(q > 0.0 && q < 1.0))
                throw std::invalid_argument("bernoulli_reveal: q must be in (0, 1)");
            const double theta = in.theta;
            SamplePath x(w.grid, 0.0);
            for (std::size_t j = 0; j + 1 < w.size(); ++j) {
                const double t = w.t(j);
                const double vol = t < 1.0 ? 1.0 : theta;
                x[j + 1] = x[j] + theta * w.dt() + vol * (w[j + 1] - w[j]);
            }
            for (std::size_t j = 0; j < w.size(); ++j) {
                const double t = w.t(j);
                double oy;
                if (t < 1.0)
                    oy = 1.0 / (1.0 - q + q * std::exp(x[j] - 0.5 * t));
                else
                    oy = theta == 0.0 ? 1.0 : std::exp(-x[j] + 0.5 * t);
                out.survival[j] = oy;
                out.k[j] = 0.0;
                out.m[j] = oy;
            }
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Statistical martingale classification
// ---------------------------------------------------------------------------

struct MartingaleVerdict {
    std::vector<double> times;
    std::vector<MeanStat> means;
    struct PairVerdict {
        double z = 0.0;
        int direction = 0; // 0 constant, -1 decreasing at threshold, +1 increasing
    };
    std::vector<PairVerdict> pairs;
    bool martingale_consistent = false;
    bool strict_supermartingale_evidence = false;

    std::string summary() const {
        std::ostringstream os;
        for (std::size_t k = 0; k < means.size(); ++k) {
            os << "t=" << times[k] << " mean=" << means[k].mean << " se=" << means[k].se;
            if (k > 0) {
                os << " pair_z=" << pairs[k - 1].z << " verdict="
                   << (pairs[k - 1].direction == 0 ? "constant"
                                                   : (pairs[k - 1].direction < 0 ? "decreasing" : "increasing"));
            }
            os << '\n';
        }
        os << "overall: "
           << (martingale_consistent
                   ? "martingale-consistent"
                   : (strict_supermartingale_evidence ? "strict-supermartingale-evidence" : "inconclusive"))
           << '\n';
        return os.str();
    }
};

/// Paired-difference trend test on ensemble checkpoints at the given z
/// threshold. values[path][checkpoint].
inline MartingaleVerdict martingale_test(const std::vector<std::vector<double>>& values,
                                         const std::vector<double>& times, double z_threshold = 3.0) {
    if (values.size() < 1000)
        throw std::invalid_argument("martingale_test: need at least 1000 paths");
    const std::size_t npaths = values.size();
    const std::size_t ncp = times.size();
    for (const auto& row : values)
        if (row.size() != ncp) throw std::invalid_argument("martingale_test: ragged input");

    MartingaleVerdict v;
    v.times = times;
    std::vector<double> col(npaths);
    for (std::size_t k = 0; k < ncp; ++k) {
        for (std::size_t i = 0; i < npaths; ++i) col[i] = values[i][k];
        v.means.push_back(mean_se(col));
    }
    bool any_down = false, any_up = false;
    for (std::size_t k = 0; k + 1 < ncp; ++k) {
        for (std::size_t i = 0; i < npaths; ++i) col[i] = values[i][k + 1] - values[i][k];
        const MeanStat d = mean_se(col);
        MartingaleVerdict::PairVerdict pv;
        pv.z = d.se > 0.0 ? d.mean / d.se : 0.0;
        pv.direction = pv.z <= -z_threshold ? -1 : (pv.z >= z_threshold ? 1 : 0);
        any_down |= pv.direction < 0;
        any_up |= pv.direction > 0;
        v.pairs.push_back(pv);
    }
    v.martingale_consistent = !any_down && !any_up;
    v.strict_supermartingale_evidence = any_down && !any_up;
    return v;
}

} // namespace deflab

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "deflab/grid.hpp"
#include "deflab/levy.hpp"

namespace deflab {

inline constexpr double kInfiniteTime = std::numeric_limits<double>::infinity();

/// Strictly decreasing positive local-time levels s_1 > s_2 > ... > 0.
struct LevelSequence {
    std::vector<double> s;

    explicit LevelSequence(std::vector<double> levels) : s(std::move(levels)) {
        if (s.empty()) throw std::invalid_argument("LevelSequence: empty");
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!(s[i] > 0.0)) throw std::invalid_argument("LevelSequence: levels must be > 0");
            if (i > 0 && !(s[i] < s[i - 1]))
                throw std::invalid_argument("LevelSequence: levels must strictly decrease");
        }
    }

    static LevelSequence dyadic(double s1, std::size_t count) {
        std::vector<double> v(count);
        for (std::size_t i = 0; i < count; ++i) v[i] = s1 * std::ldexp(1.0, -static_cast<int>(i));
        return LevelSequence(std::move(v));
    }

    std::size_t count() const { return s.size(); }

    /// Lower edge of window I_n = (s_{n+1}, s_n], n in [0, count). The last
    /// window continues the geometric spacing with a virtual deeper level.
    double window_low(std::size_t n) const {
        if (n + 1 < s.size()) return s[n + 1];
        if (s.size() >= 2) return s.back() * (s.back() / s[s.size() - 2]);
        return s[0] * 0.5;
    }
};

/// Probability law on (0, inf]: finite atoms or a closed-form exponential.
/// quantile() is the right-continuous generalized inverse inf{t : F(t) >= u};
/// at u = 0 it returns the left endpoint of the support (the u = 0 cell has
/// zero mass in the continuum construction).
class TargetLaw {
  public:
    static TargetLaw exponential(double rate) {
        if (!(rate > 0.0)) throw std::invalid_argument("TargetLaw: rate must be > 0");
        TargetLaw t;
        t.rate_ = rate;
        return t;
    }

    static TargetLaw atoms(std::vector<std::pair<double, double>> atom_list) {
        if (atom_list.empty()) throw std::invalid_argument("TargetLaw: no atoms");
        std::sort(atom_list.begin(), atom_list.end());
        double total = 0.0;
        for (auto& [t, w] : atom_list) {
            if (!(t > 0.0)) throw std::invalid_argument("TargetLaw: atoms live on (0, inf]");
            if (!(w > 0.0)) throw std::invalid_argument("TargetLaw: atom weights must be > 0");
            total += w;
        }
        TargetLaw law;
        law.atoms_ = std::move(atom_list);
        for (auto& [t, w] : law.atoms_) w /= total;
        return law;
    }

    static TargetLaw point_mass(double c) { return atoms({{c, 1.0}}); }

    double cdf(double t) const {
        if (rate_ > 0.0) return t <= 0.0 ? 0.0 : 1.0 - std::exp(-rate_ * t);
        double acc = 0.0;
        for (const auto& [a, w] : atoms_) {
            if (a > t) break;
            acc += w;
        }
        return acc;
    }

    /// Left limit F(t-), needed for sup-distance against laws with atoms.
    double cdf_left(double t) const {
        if (rate_ > 0.0) return cdf(t);
        double acc = 0.0;
        for (const auto& [a, w] : atoms_) {
            if (a >= t) break;
            acc += w;
        }
        return acc;
    }

    /// mu((s, inf]).
    double tail(double s) const { return 1.0 - cdf(s); }

    double quantile(double u) const {
        if (rate_ > 0.0) return u <= 0.0 ? 0.0 : -std::log1p(-u) / rate_;
        if (u <= 0.0) return atoms_.front().first;
        double acc = 0.0;
        for (const auto& [a, w] : atoms_) {
            acc += w;
            if (acc >= u) return a;
        }
        return atoms_.back().first;
    }

    /// Generalized inverse of mu conditioned to (s, inf]. The degenerate
    /// branch mu((s, inf]) = 0 is the point mass at infinity.
    double conditioned_quantile(double s, double u) const {
        if (rate_ > 0.0) return std::max(s, 0.0) + quantile(u);
        double tail_mass = 0.0;
        for (const auto& [a, w] : atoms_)
            if (a > s) tail_mass += w;
        if (tail_mass <= 0.0) return kInfiniteTime;
        const double want = u * tail_mass;
        double acc = 0.0;
        for (const auto& [a, w] : atoms_) {
            if (a <= s) continue;
            acc += w;
            if (acc >= want) return a;
        }
        return atoms_.back().first;
    }

  private:
    TargetLaw() = default;
    double rate_ = 0.0; // > 0 selects the exponential branch
    std::vector<std::pair<double, double>> atoms_;
};

struct UniformDraw {
    double value = 0.0; // sum of 2^-k X_k over extracted bits
    int bits = 0;       // number of sign bits found (capped at k_bits)
    bool flagged = false; // fewer than k_bits excursions in the window
};

/// Lemma-style uniforms: for each level window I_n = (s_{n+1}, s_n], order the
/// excursions with local-time coordinate in I_n by decreasing height (ties by
/// start index) and read their signs as binary digits.
inline std::vector<UniformDraw> extract_uniforms(const std::vector<ExcursionRecord>& recs,
                                                 const LevelSequence& levels, int k_bits) {
    if (k_bits < 1) throw std::invalid_argument("extract_uniforms: k_bits must be >= 1");
    std::vector<UniformDraw> out(levels.count());
    std::vector<const ExcursionRecord*> bucket;
    for (std::size_t n = 0; n < levels.count(); ++n) {
        const double hi = levels.s[n];
        const double lo = levels.window_low(n);
        bucket.clear();
        for (const auto& r : recs)
            if (r.local_time_coord > lo && r.local_time_coord <= hi) bucket.push_back(&r);
        std::sort(bucket.begin(), bucket.end(), [](const ExcursionRecord* a, const ExcursionRecord* b) {
            if (a->height != b->height) return a->height > b->height;
            return a->start_index < b->start_index;
        });
        UniformDraw& d = out[n];
        const int take = std::min<std::size_t>(bucket.size(), static_cast<std::size_t>(k_bits));
        for (int k = 0; k < take; ++k)
            if (bucket[static_cast<std::size_t>(k)]->sign > 0) d.value += std::ldexp(1.0, -(k + 1));
        d.bits = take;
        d.flagged = take < k_bits;
    }
    return out;
}

/// Per-level inputs of the stopping-time recursion; sigma is the inverse
/// local time at the level (valid only when swept = true).
struct LevelData {
    bool swept = false;
    double sigma = 0.0;
    UniformDraw u;
};

struct TauResult {
    double tau = kInfiniteTime;
    bool constructed = false;    // false when no level was usable on this path
    bool top_level_resolved = false; // sigma_{s_1} < horizon
    int base_level = -1;         // shallowest level used (0-based)
    int deepest_level = -1;      // deepest level used (0-based)
    int levels_used = 0;
    std::vector<double> chain;   // tau after each used level; nonincreasing
};

/// The recursion tau_{n+1} = tau'_{n+1} 1{tau'_{n+1} <= sigma_n} + tau_n 1{...}
/// run over the levels that are usable on this path (window swept and at
/// least one sign bit found). Partially extracted uniforms are centered in
/// their dyadic cell so that an uninformative draw never forces the
/// degenerate left-endpoint branch.
inline TauResult tau_from_levels(const std::vector<LevelData>& levels, const TargetLaw& target) {
    TauResult res;
    res.top_level_resolved = !levels.empty() && levels.front().swept;
    double sigma_prev = 0.0;
    for (std::size_t n = 0; n < levels.size(); ++n) {
        const LevelData& ld = levels[n];
        if (!ld.swept || ld.u.bits < 1) continue;
        const double u_mid = ld.u.value + std::ldexp(1.0, -(ld.u.bits + 1));
        const double draw = target.conditioned_quantile(ld.sigma, u_mid);
        if (!res.constructed) {
            res.tau = draw;
            res.constructed = true;
            res.base_level = static_cast<int>(n);
        } else if (draw <= sigma_prev) {
            res.tau = draw;
        }
        res.deepest_level = static_cast<int>(n);
        ++res.levels_used;
        res.chain.push_back(res.tau);
        sigma_prev = ld.sigma;
    }
    return res;
}

struct TauOptions {
    int k_bits = 20;
    double h_min = 0.0; // excursion height threshold; must be > 0
};

/// Full pipeline on a stored path: Levy transform, local time, excursions,
/// level uniforms, then the recursion.
inline TauResult independent_stopping_time(const SamplePath& w, const TargetLaw& target,
                                           const LevelSequence& levels, const TauOptions& opt) {
    if (!(opt.h_min > 0.0))
        throw std::invalid_argument("independent_stopping_time: h_min must be > 0");
    const SamplePath b = levy_transform(w);
    const SamplePath lam = local_time(w, b);
    const auto recs = excursions(w, opt.h_min);
    const auto draws = extract_uniforms(recs, levels, opt.k_bits);
    std::vector<LevelData> data(levels.count());
    for (std::size_t n = 0; n < levels.count(); ++n) {
        const auto sig = inverse_local_time(lam, levels.s[n]);
        data[n].swept = sig.has_value();
        data[n].sigma = sig.value_or(0.0);
        data[n].u = draws[n];
    }
    return tau_from_levels(data, target);
}

} // namespace deflab

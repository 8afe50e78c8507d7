#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "deflab/grid.hpp"
#include "deflab/path_ops.hpp"

namespace deflab {

/// One excursion of W away from zero: grid span, sign, height, and the value
/// of the local time on the span (constant there).
struct ExcursionRecord {
    std::size_t start_index = 0;
    std::size_t end_index = 0;
    int sign = 0; // -1 or +1
    double height = 0.0;
    double duration = 0.0;
    double local_time_coord = 0.0;
};

/// Incremental excursion detector. Feed path values in index order; the same
/// state machine backs both the SamplePath operations and the streaming
/// ensemble loops (where storing a fine-grid path would be wasteful).
///
/// Segmentation is by maximal constant-sign runs of W. A sign flip between
/// grid points is the grid-resolution event "W crossed zero"; a true excursion
/// cannot flip sign internally, so runs never fragment one excursion, and the
/// signs of retained records inherit the fair-coin law of true excursion
/// signs. Records below h_min are dropped (a grid resolves finitely many of
/// the countable excursions).
class ExcursionScanner {
  public:
    ExcursionScanner(double dt, double h_min, double zero_band = 0.0)
        : dt_(dt), h_min_(h_min), band_(zero_band) {}

    void push(double w) {
        if (count_ == 0) {
            run_first_ = 0;
            run_sign_ = sign_of(w);
            run_maxabs_ = std::abs(w);
            run_start_lt_ = 0.0;
            base_abs_ = std::abs(w);
            prev_w_ = w;
            if (std::abs(w) <= band_) ++in_band_;
            count_ = 1;
            return;
        }
        const std::size_t j = count_;
        const double dw = w - prev_w_;
        b_ += sign_of(prev_w_) * dw;
        const double lam_prev = lam_;
        lam_ = std::max(lam_, std::abs(w) - base_abs_ - b_);
        const double s = sign_of(w);
        if (s != run_sign_) {
            close_run(j);
            run_first_ = j;
            run_sign_ = s;
            run_maxabs_ = std::abs(w);
            run_start_lt_ = lam_prev;
        } else {
            run_maxabs_ = std::max(run_maxabs_, std::abs(w));
        }
        if (std::abs(w) <= band_) ++in_band_;
        prev_w_ = w;
        count_ = j + 1;
    }

    /// Close the trailing (possibly incomplete) run. Its local-time coordinate
    /// equals the terminal local time, so it can never fall inside a window
    /// that is already fully swept.
    void finish() {
        if (count_ > 0) close_run(count_ - 1);
    }

    const std::vector<ExcursionRecord>& records() const { return records_; }
    double levy_value() const { return b_; }
    double local_time_value() const { return lam_; }
    std::size_t in_band_count() const { return in_band_; }

  private:
    void close_run(std::size_t boundary) {
        const std::size_t start = run_first_ > 0 ? run_first_ - 1 : 0;
        const std::size_t end = boundary;
        if (end > start && run_maxabs_ >= h_min_) {
            ExcursionRecord rec;
            rec.start_index = start;
            rec.end_index = end;
            rec.sign = run_sign_ > 0 ? 1 : -1;
            rec.height = run_maxabs_;
            rec.duration = static_cast<double>(end - start) * dt_;
            rec.local_time_coord = run_start_lt_;
            records_.push_back(rec);
        }
    }

    double dt_;
    double h_min_;
    double band_;
    std::size_t count_ = 0;
    double prev_w_ = 0.0;
    double b_ = 0.0;
    double lam_ = 0.0;
    double base_abs_ = 0.0;
    std::size_t in_band_ = 0;
    std::size_t run_first_ = 0;
    double run_sign_ = -1.0;
    double run_maxabs_ = 0.0;
    double run_start_lt_ = 0.0;
    std::vector<ExcursionRecord> records_;
};

/// B = int sign(W) dW, the Levy transform of W.
inline SamplePath levy_transform(const SamplePath& w) {
    SamplePath signs(w.grid, 0.0);
    for (std::size_t j = 0; j < w.size(); ++j) signs[j] = sign_of(w[j]);
    return ito_integral(signs, w);
}

/// Local time at zero from the Tanaka identity, Lambda = |W| - |W_0| - B,
/// monotonized by cumulative max (the raw grid version is already
/// nondecreasing; the max guards against rounding).
inline SamplePath local_time(const SamplePath& w, const SamplePath& b) {
    require_same_grid(w, b, "local_time");
    SamplePath lam(w.grid, 0.0);
    double m = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        m = std::max(m, std::abs(w[j]) - std::abs(w[0]) - b[j]);
        lam[j] = m;
    }
    return lam;
}

/// Excursion decomposition of W keeping records of height >= h_min, ordered
/// by start index.
inline std::vector<ExcursionRecord> excursions(const SamplePath& w, double h_min) {
    if (!(h_min > 0.0)) throw std::invalid_argument("excursions: h_min must be > 0");
    ExcursionScanner scan(w.dt(), h_min);
    for (double v : w.values) scan.push(v);
    scan.finish();
    return scan.records();
}

/// sigma_s = inf{t : Lambda_t > s}, interpolated inside the crossing step.
inline std::optional<double> inverse_local_time(const SamplePath& lam, double s) {
    if (s < 0.0) throw std::invalid_argument("inverse_local_time: s must be >= 0");
    for (std::size_t j = 0; j < lam.size(); ++j) {
        if (lam[j] > s) {
            if (j == 0) return 0.0;
            const double lo = lam[j - 1];
            const double frac = (s - lo) / (lam[j] - lo);
            return lam.t(j - 1) + frac * lam.dt();
        }
    }
    return std::nullopt;
}

} // namespace deflab

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace deflab {

/// Compensated (Kahan) accumulator; summation order is fixed by the caller,
/// so reductions are reproducible bit-for-bit.
class KahanSum {
  public:
    void add(double x) {
        const double y = x - comp_;
        const double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct MeanStat {
    double mean = 0.0;
    double se = 0.0; // standard error of the mean
    std::size_t n = 0;
};

inline MeanStat mean_se(std::span<const double> xs) {
    MeanStat r;
    r.n = xs.size();
    if (r.n == 0) return r;
    KahanSum s;
    for (double x : xs) s.add(x);
    r.mean = s.value() / static_cast<double>(r.n);
    if (r.n > 1) {
        KahanSum q;
        for (double x : xs) q.add((x - r.mean) * (x - r.mean));
        const double var = q.value() / static_cast<double>(r.n - 1);
        r.se = std::sqrt(var / static_cast<double>(r.n));
    }
    return r;
}

/// Mean and SE of a Bernoulli frequency.
inline MeanStat binomial_stat(std::size_t hits, std::size_t n) {
    MeanStat r;
    r.n = n;
    if (n == 0) return r;
    r.mean = static_cast<double>(hits) / static_cast<double>(n);
    r.se = std::sqrt(r.mean * (1.0 - r.mean) / static_cast<double>(n));
    return r;
}

inline double pearson_corr(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("pearson_corr: need two equal-length samples");
    const auto mx = mean_se(xs).mean;
    const auto my = mean_se(ys).mean;
    KahanSum sxy, sxx, syy;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy.add(dx * dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
    }
    const double den = std::sqrt(sxx.value() * syy.value());
    return den > 0.0 ? sxy.value() / den : 0.0;
}

inline double skewness(std::span<const double> xs) {
    const auto m = mean_se(xs).mean;
    KahanSum s2, s3;
    for (double x : xs) {
        const double d = x - m;
        s2.add(d * d);
        s3.add(d * d * d);
    }
    const double n = static_cast<double>(xs.size());
    const double v = s2.value() / n;
    return (s3.value() / n) / std::pow(v, 1.5);
}

inline double excess_kurtosis(std::span<const double> xs) {
    const auto m = mean_se(xs).mean;
    KahanSum s2, s4;
    for (double x : xs) {
        const double d = x - m;
        s2.add(d * d);
        s4.add(d * d * d * d);
    }
    const double n = static_cast<double>(xs.size());
    const double v = s2.value() / n;
    return (s4.value() / n) / (v * v) - 3.0;
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) * 0.39894228040143267794;
}

/// Asymptotic Kolmogorov distribution Q(lambda) = P[D > d], with the Stephens
/// small-sample correction folded into lambda.
inline double kolmogorov_p(double d, std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = d * (sn + 0.12 + 0.11 / sn);
    if (lambda < 1e-8) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-16) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
    double d = 0.0; // sup-distance
    double p = 1.0; // asymptotic p-value
    std::size_t n = 0;
};

/// Two-sided KS test of a sample against a CDF. For target laws with atoms
/// the left limit F(x-) must be supplied so that like limits are compared on
/// each side of a jump; defaults to the continuous case F(x-) = F(x).
inline KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf,
                        const std::function<double(double)>& cdf_left = {}) {
    if (sample.empty()) throw std::invalid_argument("ks_test: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < sample.size()) {
        std::size_t j = i;
        while (j < sample.size() && sample[j] == sample[i]) ++j; // block of equal values
        const double f_right = cdf(sample[i]);
        const double f_left = cdf_left ? cdf_left(sample[i]) : f_right;
        d = std::max(d, std::abs(static_cast<double>(j) / n - f_right));
        d = std::max(d, std::abs(f_left - static_cast<double>(i) / n));
        i = j;
    }
    KsResult r;
    r.d = d;
    r.n = sample.size();
    r.p = kolmogorov_p(d, sample.size());
    return r;
}

/// Chi-square upper tail for 1 degree of freedom.
inline double chi2_p_1df(double x) {
    return std::erfc(std::sqrt(std::max(x, 0.0) * 0.5));
}

struct Chi2Result {
    double statistic = 0.0;
    double p = 1.0;
};

/// 2x2 independence chi-square (e.g. consecutive excursion signs).
/// counts[a][b] = #{pairs with first sign a, second sign b}, a,b in {0,1}.
inline Chi2Result chi2_independence_2x2(const std::size_t counts[2][2]) {
    const double r0 = static_cast<double>(counts[0][0] + counts[0][1]);
    const double r1 = static_cast<double>(counts[1][0] + counts[1][1]);
    const double c0 = static_cast<double>(counts[0][0] + counts[1][0]);
    const double c1 = static_cast<double>(counts[0][1] + counts[1][1]);
    const double tot = r0 + r1;
    Chi2Result res;
    if (tot == 0.0 || r0 == 0.0 || r1 == 0.0 || c0 == 0.0 || c1 == 0.0) return res;
    const double exp00 = r0 * c0 / tot, exp01 = r0 * c1 / tot;
    const double exp10 = r1 * c0 / tot, exp11 = r1 * c1 / tot;
    auto term = [](double obs, double exp) {
        const double d = obs - exp;
        return d * d / exp;
    };
    res.statistic = term(static_cast<double>(counts[0][0]), exp00) +
                    term(static_cast<double>(counts[0][1]), exp01) +
                    term(static_cast<double>(counts[1][0]), exp10) +
                    term(static_cast<double>(counts[1][1]), exp11);
    res.p = chi2_p_1df(res.statistic);
    return res;
}

} // namespace deflab

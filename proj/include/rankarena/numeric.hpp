#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "errors.hpp"

namespace rankarena {

/// log1p for |x| <= kSeriesLimit via ln(1+x) = 2 atanh(x / (2 + x)).
/// Branch-free so loops over a day window vectorize; the truncation error is
/// below 2e-15 relative inside the limit.
inline constexpr double kSeriesLimit = 0.1;

inline double log1p_series(double x) {
    const double u = x / (2.0 + x);
    const double u2 = u * u;
    double p = 1.0 / 13.0;
    p = p * u2 + 1.0 / 11.0;
    p = p * u2 + 1.0 / 9.0;
    p = p * u2 + 1.0 / 7.0;
    p = p * u2 + 1.0 / 5.0;
    p = p * u2 + 1.0 / 3.0;
    p = p * u2 + 1.0;
    return 2.0 * u * p;
}

/// out[i] = ln(1 + in[i]). Returns false if some in[i] <= -1.
inline bool log1p_inplace(std::span<const double> in, std::span<double> out) {
    const std::size_t n = in.size();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = log1p_series(in[i]);
        worst = std::max(worst, std::abs(in[i]));
    }
    if (worst > kSeriesLimit) {
        for (std::size_t i = 0; i < n; ++i) {
            if (in[i] <= -1.0) return false;
            if (std::abs(in[i]) > kSeriesLimit) out[i] = std::log1p(in[i]);
        }
    }
    return true;
}

/// Sum over sample standard deviation (divisor n-1), i.e. n * mean / sd.
/// Throws ScoreError when the window has no dispersion.
inline double sum_over_sd(double sum, double centered_ss, std::size_t n, double scale) {
    if (n < 2) throw ScoreError("information ratio needs at least two days");
    const double var = centered_ss / static_cast<double>(n - 1);
    // Relative floor: rounding noise on a constant series must not count as variance.
    if (!(var > 0.0) || std::sqrt(var) <= 1e-13 * scale)
        throw ScoreError("zero variance in information-ratio window");
    return sum / std::sqrt(var);
}

inline double information_ratio_of(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 2) throw ScoreError("information ratio needs at least two days");
    double sum = 0.0, scale = 0.0;
    for (double v : x) {
        sum += v;
        scale = std::max(scale, std::abs(v));
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return sum_over_sd(sum, ss, n, scale);
}

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7, the R default). `sorted` must be ascending.
inline double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw ParameterError("quantile of empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, p);
}

inline double mean_of(std::span<const double> x) {
    if (x.empty()) return 0.0;
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Unbiased sample variance; zero for fewer than two values.
inline double variance_of(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = mean_of(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return ss / static_cast<double>(x.size() - 1);
}

inline double chi2_quantile(double p, double dof) {
    return boost::math::quantile(boost::math::chi_squared(dof), p);
}

inline double chi2_survival(double x, double dof) {
    if (x <= 0.0) return 1.0;
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), x));
}

/// Running mean/variance (Welford).
struct RunningStats {
    long long n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double sd() const { return std::sqrt(variance()); }
    double standard_error() const { return n > 0 ? sd() / std::sqrt(static_cast<double>(n)) : 0.0; }
};

} // namespace rankarena

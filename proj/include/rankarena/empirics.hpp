#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "market.hpp"
#include "numeric.hpp"
#include "scoring.hpp"

namespace rankarena {

/// Share of gross exposure held long.
inline double beta_plus(const Eigen::Ref<const Eigen::VectorXd>& w) {
    const double gross = w.cwiseAbs().sum();
    if (!(gross > 0.0)) throw ParameterError("long share undefined for zero gross exposure");
    return w.cwiseMax(0.0).sum() / gross;
}

inline double beta_minus(const Eigen::Ref<const Eigen::VectorXd>& w) {
    const double gross = w.cwiseAbs().sum();
    if (!(gross > 0.0)) throw ParameterError("short share undefined for zero gross exposure");
    return (-w).cwiseMax(0.0).sum() / gross;
}

/// Sample skewness m3 / m2^(3/2) with divisor n.
inline double sample_skewness(std::span<const double> x) {
    if (x.size() < 3) throw ParameterError("skewness needs at least three observations");
    const double mean = mean_of(x);
    double m2 = 0.0, m3 = 0.0;
    for (double v : x) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    const double n = static_cast<double>(x.size());
    m2 /= n;
    m3 /= n;
    if (!(m2 > 0.0)) throw ScoreError("skewness undefined for a constant series");
    return m3 / std::pow(m2, 1.5);
}

inline std::vector<double> asset_skewness(const ReturnPanel& panel) {
    std::vector<double> out;
    for (int i = 0; i < panel.n_assets(); ++i) {
        const Eigen::VectorXd row = panel.returns().row(i).transpose();
        out.push_back(sample_skewness(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))));
    }
    return out;
}

/// Exposure to skewed assets: sum_i (w_i / sum|w|) * skew_i.
inline double skew_exposure(const Eigen::Ref<const Eigen::VectorXd>& w, std::span<const double> asset_skews) {
    if (static_cast<std::size_t>(w.size()) != asset_skews.size()) throw ParameterError("skew vector has wrong length");
    const double gross = w.cwiseAbs().sum();
    if (!(gross > 0.0)) throw ParameterError("skew exposure undefined for zero gross exposure");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) acc += w(i) / gross * asset_skews[static_cast<std::size_t>(i)];
    return acc;
}

/// Per (interval, team) long share and skew exposure; NaN where the team has
/// no position that interval.
struct TeamExposure {
    Eigen::MatrixXd beta_plus;  // M x K
    Eigen::MatrixXd gamma;      // M x K

    /// Mean of `values` over the intervals of each window, per team (P x K).
    static Eigen::MatrixXd period_means(const Eigen::MatrixXd& values, const std::vector<Window>& windows) {
        Eigen::MatrixXd out(static_cast<Eigen::Index>(windows.size()), values.cols());
        for (std::size_t p = 0; p < windows.size(); ++p) {
            for (Eigen::Index k = 0; k < values.cols(); ++k) {
                double sum = 0.0;
                int n = 0;
                for (int m = windows[p].first; m <= windows[p].last; ++m) {
                    if (std::isfinite(values(m, k))) {
                        sum += values(m, k);
                        ++n;
                    }
                }
                out(static_cast<Eigen::Index>(p), k) = n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
            }
        }
        return out;
    }
};

inline TeamExposure compute_exposures(const SubmissionPanel& submissions, std::span<const double> asset_skews) {
    const SubmissionPanel filled = submissions.carried_forward();
    TeamExposure e;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    e.beta_plus = Eigen::MatrixXd::Constant(filled.n_intervals(), filled.n_teams(), nan);
    e.gamma = Eigen::MatrixXd::Constant(filled.n_intervals(), filled.n_teams(), nan);
    for (int m = 0; m < filled.n_intervals(); ++m) {
        for (int k = 0; k < filled.n_teams(); ++k) {
            if (!filled.submitted(k, m)) continue;
            const Eigen::VectorXd w = filled.weights(k, m);
            if (!(w.cwiseAbs().sum() > 0.0)) continue;
            e.beta_plus(m, k) = beta_plus(w);
            if (!asset_skews.empty()) e.gamma(m, k) = skew_exposure(w, asset_skews);
        }
    }
    return e;
}

/// One bin of a binned-mean profile.
struct BinRow {
    int group;     // interval or period index, 0-based
    double lo;
    double hi;
    int n;
    double mean;
    double se;     // NaN for n < 2
};

namespace detail {

inline void emit_bins(int group, double lo, double width, int n_bins, const std::vector<double>& x,
                      const std::vector<double>& y, std::vector<BinRow>& out) {
    std::vector<RunningStats> bins(static_cast<std::size_t>(n_bins));
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
        int b = static_cast<int>(std::floor((x[i] - lo) / width + 1e-9));
        b = std::clamp(b, 0, n_bins - 1);
        bins[static_cast<std::size_t>(b)].add(y[i]);
    }
    for (int b = 0; b < n_bins; ++b) {
        const RunningStats& s = bins[static_cast<std::size_t>(b)];
        if (s.n == 0) continue;
        out.push_back({group, lo + b * width, lo + (b + 1) * width, static_cast<int>(s.n), s.mean,
                       s.n > 1 ? s.standard_error() : std::numeric_limits<double>::quiet_NaN()});
    }
}

} // namespace detail

/// |rank_{1:m-1} - rank_{1:m}| binned by the long share submitted for m,
/// for every m >= 1. `cumulative_ranks` is M x K.
inline std::vector<BinRow> rank_change_profile(const Eigen::MatrixXi& cumulative_ranks, const Eigen::MatrixXd& beta_plus,
                                               double bin_width = 0.1) {
    if (cumulative_ranks.rows() < 2) throw ParameterError("rank changes need at least two intervals");
    const int n_bins = static_cast<int>(std::ceil(1.0 / bin_width - 1e-9));
    std::vector<BinRow> out;
    for (Eigen::Index m = 1; m < cumulative_ranks.rows(); ++m) {
        std::vector<double> x, y;
        for (Eigen::Index k = 0; k < cumulative_ranks.cols(); ++k) {
            x.push_back(beta_plus(m, k));
            y.push_back(std::abs(cumulative_ranks(m - 1, k) - cumulative_ranks(m, k)));
        }
        detail::emit_bins(static_cast<int>(m), 0.0, bin_width, n_bins, x, y, out);
    }
    return out;
}

/// Mean of a per-team value binned by attained rank (bin width in ranks), per period.
inline std::vector<BinRow> rank_profile(const Eigen::MatrixXd& values, const Eigen::MatrixXi& ranks, int rank_bin_width) {
    std::vector<BinRow> out;
    const int k = static_cast<int>(values.cols());
    const int n_bins = (k + rank_bin_width - 1) / rank_bin_width;
    for (Eigen::Index p = 0; p < values.rows(); ++p) {
        std::vector<double> x, y;
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            x.push_back(ranks(p, j));
            y.push_back(values(p, j));
        }
        detail::emit_bins(static_cast<int>(p), 1.0, rank_bin_width, n_bins, x, y, out);
    }
    return out;
}

/// Cross-team average long share per interval (per team first, then averaged).
inline std::vector<double> mean_beta_by_interval(const Eigen::MatrixXd& beta_plus) {
    std::vector<double> out;
    for (Eigen::Index m = 0; m < beta_plus.rows(); ++m) {
        std::vector<double> v;
        for (Eigen::Index k = 0; k < beta_plus.cols(); ++k)
            if (std::isfinite(beta_plus(m, k))) v.push_back(beta_plus(m, k));
        out.push_back(v.empty() ? std::numeric_limits<double>::quiet_NaN() : mean_of(v));
    }
    return out;
}

struct MedianSplitRow {
    std::string period;
    double benchmark_ir;
    double median_beta;
    int n_below;
    int n_above;
    std::vector<double> p_below;  // one per q in q_list; NaN for an empty group
    std::vector<double> p_above;
};

/// Splits teams at the period median of their mean long share (strictly
/// below vs at-or-above) and tabulates P(rank <= q) per group.
inline std::vector<MedianSplitRow> median_split_table(const Eigen::MatrixXd& beta_bar, const Eigen::MatrixXi& ranks,
                                                      const std::vector<std::string>& period_labels,
                                                      const std::vector<double>& benchmark_ir,
                                                      const std::vector<int>& q_list) {
    std::vector<MedianSplitRow> out;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index p = 0; p < beta_bar.rows(); ++p) {
        std::vector<double> finite;
        for (Eigen::Index k = 0; k < beta_bar.cols(); ++k)
            if (std::isfinite(beta_bar(p, k))) finite.push_back(beta_bar(p, k));
        MedianSplitRow row;
        row.period = period_labels.at(static_cast<std::size_t>(p));
        row.benchmark_ir = p < static_cast<Eigen::Index>(benchmark_ir.size()) ? benchmark_ir[static_cast<std::size_t>(p)] : nan;
        row.median_beta = finite.empty() ? nan : quantile(finite, 0.5);
        std::vector<int> hit_below(q_list.size(), 0), hit_above(q_list.size(), 0);
        row.n_below = row.n_above = 0;
        for (Eigen::Index k = 0; k < beta_bar.cols(); ++k) {
            const double b = beta_bar(p, k);
            if (!std::isfinite(b)) continue;
            const bool below = b < row.median_beta;
            (below ? row.n_below : row.n_above) += 1;
            for (std::size_t j = 0; j < q_list.size(); ++j)
                if (ranks(p, k) <= q_list[j]) (below ? hit_below[j] : hit_above[j]) += 1;
        }
        for (std::size_t j = 0; j < q_list.size(); ++j) {
            row.p_below.push_back(row.n_below > 0 ? static_cast<double>(hit_below[j]) / row.n_below : nan);
            row.p_above.push_back(row.n_above > 0 ? static_cast<double>(hit_above[j]) / row.n_above : nan);
        }
        out.push_back(std::move(row));
    }
    return out;
}

} // namespace rankarena

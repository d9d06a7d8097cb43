#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "market.hpp"
#include "numeric.hpp"
#include "portfolio.hpp"
#include "random.hpp"

namespace rankarena {

struct MomentStats {
    double mean;
    double kurtosis;
};

/// Cross-sectional mean and kurtosis (population moments, divisor K).
inline MomentStats moment_stats(std::span<const double> values) {
    if (values.empty()) throw ParameterError("moment_stats of an empty cross-section");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double m2 = 0.0, m4 = 0.0;
    for (double v : values) {
        const double d2 = (v - mean) * (v - mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    if (!(m2 > 0.0)) throw ScoreError("kurtosis undefined: cross-section has zero variance");
    return {mean, m4 / (m2 * m2)};
}

/// Observed per-interval cross-sectional mean (g1) and kurtosis (g2) of the
/// leaderboard IR.
struct MomentTarget {
    std::vector<double> g1;
    std::vector<double> g2;

    int n_intervals() const { return static_cast<int>(g1.size()); }

    /// `interval_ir` is M x K (row m holds IR_{T_m, :}).
    static MomentTarget from_leaderboard(const Eigen::MatrixXd& interval_ir) {
        MomentTarget t;
        for (Eigen::Index m = 0; m < interval_ir.rows(); ++m) {
            std::vector<double> row;  // teams without a score that interval are skipped
            for (Eigen::Index k = 0; k < interval_ir.cols(); ++k)
                if (std::isfinite(interval_ir(m, k))) row.push_back(interval_ir(m, k));
            const MomentStats s = moment_stats(row);
            t.g1.push_back(s.mean);
            t.g2.push_back(s.kurtosis);
        }
        t.validate();
        return t;
    }

    void validate() const {
        if (g1.empty() || g1.size() != g2.size()) throw ParameterError("moment target needs matching g1/g2 for M >= 1");
        for (double k : g2)
            if (!(k >= 1.0 - 1e-12)) throw ParameterError("kurtosis below its lower bound of 1");
    }
};

/// Simulated mean and variance of (g1, g2) for one candidate and interval.
struct MomentDistribution {
    double mu_g1 = 0.0;
    double var_g1 = 0.0;
    double mu_g2 = 0.0;
    double var_g2 = 0.0;
    bool degenerate = false;  // some simulated cross-section had zero variance
};

namespace detail {

/// IR of one team over an interval of `len` days whose plain returns are
/// (2 P_a - P_c) / c, with P_j the sum of the first j permuted asset rows.
/// NaN when the window has no dispersion.
inline double permuted_window_ir(const double* pa, const double* pc, double inv_c, int len, double* buf) {
    double worst = 0.0;
    double sum = 0.0;
    for (int t = 0; t < len; ++t) {
        const double x = (2.0 * pa[t] - pc[t]) * inv_c;
        worst = std::max(worst, std::abs(x));
        const double l = log1p_series(x);
        buf[t] = l;
        sum += l;
    }
    if (worst > kSeriesLimit) {
        sum = 0.0;
        for (int t = 0; t < len; ++t) {
            const double x = (2.0 * pa[t] - pc[t]) * inv_c;
            if (x <= -1.0) return std::numeric_limits<double>::quiet_NaN();
            if (std::abs(x) > kSeriesLimit) buf[t] = std::log1p(x);
            sum += buf[t];
        }
    }
    const double mean = sum / len;
    double ss = 0.0, scale = 0.0;
    for (int t = 0; t < len; ++t) {
        ss += (buf[t] - mean) * (buf[t] - mean);
        scale = std::max(scale, std::abs(buf[t]));
    }
    const double var = ss / (len - 1);
    if (!(var > 0.0) || std::sqrt(var) <= 1e-13 * scale) return std::numeric_limits<double>::quiet_NaN();
    return sum / std::sqrt(var);
}

/// Shifted power sums of a cross-section, enough for mean and kurtosis.
struct PowerSums {
    double shift = 0.0;
    double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
    bool bad = false;

    void add(double v, bool first) {
        if (!std::isfinite(v)) {
            bad = true;
            return;
        }
        if (first) shift = v;
        const double d = v - shift;
        const double d2 = d * d;
        s1 += d;
        s2 += d2;
        s3 += d2 * d;
        s4 += d2 * d2;
    }

    /// Returns false if undefined (non-finite member or zero variance).
    bool moments(double n, double& mean, double& kurt) const {
        if (bad) return false;
        const double a = s1 / n;
        const double m2 = s2 / n - a * a;
        const double m4 = s4 / n - 4.0 * a * s3 / n + 6.0 * a * a * s2 / n - 3.0 * a * a * a * a;
        mean = shift + a;
        // Cross-sections equal up to summation-order rounding count as constant.
        const double scale = std::abs(mean) + std::sqrt(std::max(s2 / n, 0.0));
        if (!(m2 > 0.0) || !(m2 > 1e-24 * scale * scale)) return false;
        kurt = m4 / (m2 * m2);
        return true;
    }
};

struct MomentAccumulator {
    RunningStats g1, g2;
    bool degenerate = false;

    MomentDistribution result() const {
        MomentDistribution d;
        d.degenerate = degenerate;
        d.mu_g1 = g1.mean;
        d.var_g1 = g1.variance();
        d.mu_g2 = degenerate ? std::numeric_limits<double>::quiet_NaN() : g2.mean;
        d.var_g2 = degenerate ? std::numeric_limits<double>::quiet_NaN() : g2.variance();
        return d;
    }
};

} // namespace detail

/// Simulates baseline leaderboards against FIXED interval returns. Team k of
/// simulation s in interval m gets a uniform permutation of the assets; a
/// candidate (n+, n0, n-) goes long the first n+ assets and short the next n-.
/// The permutations depend only on (seed, m, s, k), never on the candidate, so
/// all candidates share common random numbers and the single-candidate and
/// batched paths give bit-identical results.
class MomentSimulator {
public:
    MomentSimulator(const ReturnPanel& panel, int n_teams, int n_sim, std::uint64_t seed)
        : panel_(panel), n_teams_(n_teams), n_sim_(n_sim), seed_(seed) {
        if (n_sim < 2) throw ParameterError("n_sim must be at least 2");
        if (n_teams < 1) throw ParameterError("n_teams must be positive");
        // Day-major copy so that one asset's interval returns are contiguous.
        returns_t_ = panel.returns().transpose();
    }

    int n_assets() const { return panel_.n_assets(); }
    int n_sim() const { return n_sim_; }
    int n_teams() const { return n_teams_; }
    const ReturnPanel& panel() const { return panel_; }

    /// Every (n+, n0, n-) with n+ + n0 + n- = I and n0 != I, ordered by n+ then n0.
    static std::vector<BaselineTheta> candidates(int n_assets) {
        std::vector<BaselineTheta> out;
        for (int a = 0; a <= n_assets; ++a)
            for (int c = n_assets; c >= std::max(a, 1); --c) out.push_back({a, n_assets - c, c - a});
        return out;
    }

    MomentDistribution simulate(const BaselineTheta& theta, int m) const {
        theta.validate(n_assets());
        const int a = theta.n_plus;
        const int c = theta.n_active();
        const int len = panel_.interval_length(m);
        std::vector<double> pa(static_cast<std::size_t>(len)), pc(static_cast<std::size_t>(len)),
            buf(static_cast<std::size_t>(len));
        std::vector<int> perm(static_cast<std::size_t>(n_assets()));
        detail::MomentAccumulator acc;
        for (int s = 0; s < n_sim_; ++s) {
            Engine rng = engine(m, s);
            detail::PowerSums sums;
            for (int k = 0; k < n_teams_; ++k) {
                draw_permutation(rng, perm);
                std::fill(pc.begin(), pc.end(), 0.0);
                for (int j = 0; j <= c; ++j) {
                    if (j == a) std::copy(pc.begin(), pc.end(), pa.begin());
                    if (j == c) break;
                    const double* row = asset_row(m, perm[static_cast<std::size_t>(j)]);
                    for (int t = 0; t < len; ++t) pc[static_cast<std::size_t>(t)] += row[t];
                }
                sums.add(detail::permuted_window_ir(pa.data(), pc.data(), 1.0 / c, len, buf.data()), k == 0);
            }
            record(sums, acc);
        }
        return acc.result();
    }

    /// Distributions for every candidate of candidates(I), same order.
    std::vector<MomentDistribution> simulate_all(int m) const {
        const int n = n_assets();
        const int len = panel_.interval_length(m);
        const std::vector<BaselineTheta> cands = candidates(n);
        std::vector<detail::MomentAccumulator> acc(cands.size());
        std::vector<detail::PowerSums> sums(cands.size());
        std::vector<double> prefix(static_cast<std::size_t>((n + 1) * len));
        std::vector<double> buf(static_cast<std::size_t>(len));
        std::vector<int> perm(static_cast<std::size_t>(n));
        std::vector<double> inv(static_cast<std::size_t>(n + 1), 0.0);
        for (int c = 1; c <= n; ++c) inv[static_cast<std::size_t>(c)] = 1.0 / c;
        for (int s = 0; s < n_sim_; ++s) {
            Engine rng = engine(m, s);
            std::fill(sums.begin(), sums.end(), detail::PowerSums{});
            for (int k = 0; k < n_teams_; ++k) {
                draw_permutation(rng, perm);
                std::fill(prefix.begin(), prefix.begin() + len, 0.0);
                for (int j = 0; j < n; ++j) {
                    const double* row = asset_row(m, perm[static_cast<std::size_t>(j)]);
                    const double* prev = prefix.data() + static_cast<std::size_t>(j * len);
                    double* next = prefix.data() + static_cast<std::size_t>((j + 1) * len);
                    for (int t = 0; t < len; ++t) next[t] = prev[t] + row[t];
                }
                std::size_t idx = 0;
                for (int a = 0; a <= n; ++a) {
                    const double* pa = prefix.data() + static_cast<std::size_t>(a * len);
                    for (int c = n; c >= std::max(a, 1); --c, ++idx) {
                        const double* pc = prefix.data() + static_cast<std::size_t>(c * len);
                        sums[idx].add(detail::permuted_window_ir(pa, pc, inv[static_cast<std::size_t>(c)], len, buf.data()),
                                      k == 0);
                    }
                }
            }
            for (std::size_t i = 0; i < cands.size(); ++i) record(sums[i], acc[i]);
        }
        std::vector<MomentDistribution> out;
        out.reserve(cands.size());
        for (const auto& a : acc) out.push_back(a.result());
        return out;
    }

private:
    Engine engine(int m, int s) const {
        return make_engine(seed_, Stream::msm, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(s));
    }

    void draw_permutation(Engine& rng, std::vector<int>& perm) const {
        std::iota(perm.begin(), perm.end(), 0);
        partial_shuffle(std::span<int>(perm), perm.size(), rng);
    }

    const double* asset_row(int m, int asset) const {
        // returns_t_ is T x I column-major: column `asset` holds that asset's days.
        return returns_t_.data() + static_cast<std::ptrdiff_t>(asset) * returns_t_.rows() + panel_.interval_begin(m);
    }

    void record(const detail::PowerSums& sums, detail::MomentAccumulator& acc) const {
        double mean = 0.0, kurt = 0.0;
        const bool ok = sums.moments(static_cast<double>(n_teams_), mean, kurt);
        if (sums.bad) {
            acc.degenerate = true;
            return;
        }
        acc.g1.add(mean);
        if (ok)
            acc.g2.add(kurt);
        else
            acc.degenerate = true;
    }

    ReturnPanel panel_;
    Eigen::MatrixXd returns_t_;
    int n_teams_;
    int n_sim_;
    std::uint64_t seed_;
};

inline MomentDistribution simulate_moment_dist(const BaselineTheta& theta, const ReturnPanel& panel, int m,
                                               int n_teams, int n_sim, std::uint64_t seed) {
    return MomentSimulator(panel, n_teams, n_sim, seed).simulate(theta, m);
}

/// Standardized moment function of one interval.
inline Eigen::Vector2d moment_function(double g1_obs, double g2_obs, const MomentDistribution& d) {
    if (d.degenerate || !(d.var_g1 > 0.0) || !(d.var_g2 > 0.0))
        throw EstimationError("simulated moment variance is zero; standardization undefined");
    const double e1 = g1_obs - d.mu_g1;
    const double e2 = g2_obs - d.mu_g2;
    return {(e1 * e1 - d.var_g1) / std::sqrt(d.var_g1), (e2 * e2 - d.var_g2) / std::sqrt(d.var_g2)};
}

/// Identity-weighted quadratic form of the interval-averaged moment function.
inline double objective_from(const MomentTarget& target, const std::vector<MomentDistribution>& per_interval) {
    Eigen::Vector2d gbar = Eigen::Vector2d::Zero();
    for (int m = 0; m < target.n_intervals(); ++m)
        gbar += moment_function(target.g1[static_cast<std::size_t>(m)], target.g2[static_cast<std::size_t>(m)],
                                per_interval[static_cast<std::size_t>(m)]);
    gbar /= static_cast<double>(target.n_intervals());
    return gbar.squaredNorm();
}

inline double msm_objective(const MomentTarget& target, const BaselineTheta& theta, const MomentSimulator& sim) {
    target.validate();
    if (target.n_intervals() > sim.panel().n_intervals()) throw ParameterError("target has more intervals than the panel");
    std::vector<MomentDistribution> dists;
    for (int m = 0; m < target.n_intervals(); ++m) dists.push_back(sim.simulate(theta, m));
    return objective_from(target, dists);
}

inline double msm_objective(const MomentTarget& target, const BaselineTheta& theta, const ReturnPanel& panel,
                            int n_teams, int n_sim, std::uint64_t seed) {
    return msm_objective(target, theta, MomentSimulator(panel, n_teams, n_sim, seed));
}

struct ThetaEstimate {
    BaselineTheta theta;
    double objective;
    std::vector<BaselineTheta> candidates;
    std::vector<double> surface;  // objective per candidate; +inf where undefined
};

/// Exhaustive search over the count simplex. Candidates whose simulated
/// moments are degenerate (e.g. every team identical) score +inf. Ties go to
/// the lexicographically smallest (n+, n0, n-).
inline ThetaEstimate estimate_theta(const MomentTarget& target, const MomentSimulator& sim) {
    target.validate();
    const int n_intervals = target.n_intervals();
    if (n_intervals > sim.panel().n_intervals()) throw ParameterError("target has more intervals than the panel");
    ThetaEstimate est;
    est.candidates = MomentSimulator::candidates(sim.n_assets());
    std::vector<std::vector<MomentDistribution>> by_interval(static_cast<std::size_t>(n_intervals));
    parallel_for(static_cast<std::size_t>(n_intervals),
                 [&](std::size_t m) { by_interval[m] = sim.simulate_all(static_cast<int>(m)); });
    est.surface.resize(est.candidates.size());
    std::vector<MomentDistribution> column(static_cast<std::size_t>(n_intervals));
    for (std::size_t i = 0; i < est.candidates.size(); ++i) {
        for (int m = 0; m < n_intervals; ++m) column[static_cast<std::size_t>(m)] = by_interval[static_cast<std::size_t>(m)][i];
        try {
            est.surface[i] = objective_from(target, column);
        } catch (const EstimationError&) {
            est.surface[i] = std::numeric_limits<double>::infinity();
        }
    }
    std::size_t best = est.candidates.size();
    for (std::size_t i = 0; i < est.candidates.size(); ++i) {
        if (!std::isfinite(est.surface[i])) continue;
        if (best == est.candidates.size() || est.surface[i] < est.surface[best] ||
            (est.surface[i] == est.surface[best] && est.candidates[i] < est.candidates[best]))
            best = i;
    }
    if (best == est.candidates.size()) throw EstimationError("no candidate has a defined objective");
    est.theta = est.candidates[best];
    est.objective = est.surface[best];
    return est;
}

inline ThetaEstimate estimate_theta(const MomentTarget& target, const ReturnPanel& panel, int n_teams, int n_sim,
                                    std::uint64_t seed) {
    return estimate_theta(target, MomentSimulator(panel, n_teams, n_sim, seed));
}

/// Per-interval leaderboard IR (M x K) of K baseline teams on `panel`.
inline Eigen::MatrixXd simulate_leaderboard_ir(const ReturnPanel& panel, const BaselineTheta& theta, int n_teams,
                                               Engine& rng) {
    theta.validate(panel.n_assets());
    Eigen::MatrixXd out(panel.n_intervals(), n_teams);
    Eigen::MatrixXd weights(n_teams, panel.n_assets());
    Eigen::VectorXd w(panel.n_assets());
    std::vector<int> scratch;
    for (int m = 0; m < panel.n_intervals(); ++m) {
        for (int k = 0; k < n_teams; ++k) {
            sample_baseline_into(theta, rng, scratch, w);
            weights.row(k) = w.transpose();
        }
        Eigen::MatrixXd ret = panel.interval(m).transpose() * weights.transpose();  // len x K
        for (int k = 0; k < n_teams; ++k) {
            auto col = ret.col(k);
            std::span<double> s(col.data(), static_cast<std::size_t>(col.size()));
            if (!log1p_inplace(s, s)) throw ScoreError("simulated team went bankrupt");
            out(m, k) = information_ratio_of(s);
        }
    }
    return out;
}

} // namespace rankarena

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "market.hpp"
#include "msm.hpp"
#include "numeric.hpp"
#include "portfolio.hpp"
#include "random.hpp"

namespace rankarena {

/// Long-share actions 0.0, 0.1, ..., 1.0.
inline constexpr int kBetaCount = 11;
inline double beta_of(int b) { return b / 10.0; }

struct KernelConfig {
    int n_paths = 10000;
    int n_teams = 163;  // focal team plus K - 1 baseline opponents
    int n_intervals = 12;
    std::uint64_t seed = 1;
};

/// Empirical gap increments per (interval, action): the focal team's
/// per-interval IR minus the change of the q-th highest cumulative additive
/// score among the opponents.
class TransitionKernel {
public:
    TransitionKernel(int n_intervals, int n_paths, int q)
        : n_intervals_(n_intervals), n_paths_(n_paths), q_(q),
          increments_(static_cast<std::size_t>(n_intervals) * kBetaCount * static_cast<std::size_t>(n_paths), 0.0) {}

    int n_intervals() const { return n_intervals_; }
    int n_paths() const { return n_paths_; }
    int q() const { return q_; }

    std::span<const double> cell(int m, int b) const {
        return {increments_.data() + offset(m, b), static_cast<std::size_t>(n_paths_)};
    }
    std::span<double> cell(int m, int b) { return {increments_.data() + offset(m, b), static_cast<std::size_t>(n_paths_)}; }

private:
    std::size_t offset(int m, int b) const {
        if (m < 0 || m >= n_intervals_ || b < 0 || b >= kBetaCount) throw ParameterError("kernel cell out of range");
        return (static_cast<std::size_t>(m) * kBetaCount + static_cast<std::size_t>(b)) * static_cast<std::size_t>(n_paths_);
    }

    int n_intervals_;
    int n_paths_;
    int q_;
    std::vector<double> increments_;
};

/// Simulates full competitions under the stylized model with K - 1 baseline
/// opponents. Every action is evaluated on the same returns and the same asset
/// permutation within a path.
inline TransitionKernel build_kernel(const MarketModel& model, const BaselineTheta& theta, int q,
                                     const KernelConfig& cfg) {
    theta.validate(model.n_assets);
    const int n_opp = cfg.n_teams - 1;
    if (cfg.n_paths < 1) throw ParameterError("n_paths must be at least 1");
    if (q < 1 || q > n_opp) throw ParameterError("target rank q must lie in 1..K-1");
    const MarketModel base = model.with_lambda(0.0);
    const int n_assets = model.n_assets;
    const int len = model.days_per_interval;
    TransitionKernel kernel(cfg.n_intervals, cfg.n_paths, q);

    parallel_for(static_cast<std::size_t>(cfg.n_paths), [&](std::size_t p) {
        Engine rng = make_engine(cfg.seed, Stream::kernel, p);
        const ReturnPanel panel = sample_returns(base, cfg.n_intervals * len, rng);
        const Eigen::MatrixXd returns_t = panel.returns().transpose();  // T x I
        Eigen::MatrixXd weights(n_opp, n_assets);
        Eigen::VectorXd w(n_assets);
        std::vector<int> scratch, perm(static_cast<std::size_t>(n_assets));
        std::vector<double> cumulative(static_cast<std::size_t>(n_opp), 0.0), sorted;
        std::vector<double> prefix(static_cast<std::size_t>((n_assets + 1) * len)), buf(static_cast<std::size_t>(len));
        double previous_qth = 0.0;
        for (int m = 0; m < cfg.n_intervals; ++m) {
            for (int k = 0; k < n_opp; ++k) {
                sample_baseline_into(theta, rng, scratch, w);
                weights.row(k) = w.transpose();
            }
            Eigen::MatrixXd ret = returns_t.middleRows(panel.interval_begin(m), len) * weights.transpose();  // len x K-1
            for (int k = 0; k < n_opp; ++k) {
                auto col = ret.col(k);
                std::span<double> s(col.data(), static_cast<std::size_t>(len));
                if (!log1p_inplace(s, s)) throw ScoreError("simulated opponent went bankrupt");
                cumulative[static_cast<std::size_t>(k)] += information_ratio_of(s);
            }
            sorted = cumulative;
            std::nth_element(sorted.begin(), sorted.begin() + (q - 1), sorted.end(), std::greater<>());
            const double qth = sorted[static_cast<std::size_t>(q - 1)];
            const double field_step = qth - previous_qth;
            previous_qth = qth;

            std::iota(perm.begin(), perm.end(), 0);
            partial_shuffle(std::span<int>(perm), perm.size(), rng);
            std::fill(prefix.begin(), prefix.begin() + len, 0.0);
            for (int j = 0; j < n_assets; ++j) {
                const double* row = returns_t.data() + static_cast<std::ptrdiff_t>(perm[static_cast<std::size_t>(j)]) * returns_t.rows() +
                                    panel.interval_begin(m);
                const double* prev = prefix.data() + static_cast<std::size_t>(j * len);
                double* next = prefix.data() + static_cast<std::size_t>((j + 1) * len);
                for (int t = 0; t < len; ++t) next[t] = prev[t] + row[t];
            }
            const double* all = prefix.data() + static_cast<std::size_t>(n_assets * len);
            for (int b = 0; b < kBetaCount; ++b) {
                const int n_long = long_count(beta_of(b), n_assets);
                const double own = detail::permuted_window_ir(prefix.data() + static_cast<std::size_t>(n_long * len), all,
                                                              1.0 / n_assets, len, buf.data());
                if (!std::isfinite(own)) throw ScoreError("focal IR undefined in kernel simulation");
                kernel.cell(m, b)[p] = own - field_step;
            }
        }
    });
    return kernel;
}

/// Uniform gap grid from lo to hi inclusive.
inline std::vector<double> make_grid(double lo, double hi, double step) {
    if (!(hi > lo) || !(step > 0.0)) throw ParameterError("invalid grid specification");
    std::vector<double> g;
    const int n = static_cast<int>(std::llround((hi - lo) / step));
    for (int i = 0; i <= n; ++i) g.push_back(lo + i * step);
    return g;
}

inline std::vector<double> default_delta_grid() { return make_grid(-40.0, 40.0, 0.5); }

/// Optimal long share beta+(m, delta) and value V_m(delta), m 0-based.
struct RankPolicy {
    int q = 1;
    std::vector<double> grid;
    Eigen::MatrixXd beta;   // M x G
    Eigen::MatrixXd value;  // M x G

    int n_intervals() const { return static_cast<int>(beta.rows()); }

    std::size_t nearest(double delta) const {
        const auto it = std::lower_bound(grid.begin(), grid.end(), delta);
        if (it == grid.begin()) return 0;
        if (it == grid.end()) return grid.size() - 1;
        const std::size_t hi = static_cast<std::size_t>(it - grid.begin());
        return (delta - grid[hi - 1] <= grid[hi] - delta) ? hi - 1 : hi;
    }

    /// Nearest-grid-point lookup; delta is clamped to the grid.
    double act(int m, double delta) const {
        if (m < 0 || m >= n_intervals()) throw ParameterError("interval out of range for policy");
        return beta(m, static_cast<Eigen::Index>(nearest(delta)));
    }

    double value_at(int m, double delta) const { return value(m, static_cast<Eigen::Index>(nearest(delta))); }
};

namespace detail {

/// Piecewise-linear interpolation of `v` on a uniform grid, clamped at the ends.
struct UniformInterpolator {
    double lo, step;
    std::span<const double> v;

    double operator()(double x) const {
        const double pos = (x - lo) / step;
        if (pos <= 0.0) return v.front();
        const double last = static_cast<double>(v.size() - 1);
        if (pos >= last) return v.back();
        const auto i = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(i);
        return v[i] + frac * (v[i + 1] - v[i]);
    }
};

/// Argmax over actions. Only exact ties (up to rounding) are broken: toward
/// the highest beta when ahead (mimic the field, also the secured-win
/// boundary), toward the lowest when behind (dispersion in hopeless spots).
/// Near-ties are not pooled: on common-random-number kernels they carry the
/// signal the policy lives on, and pooling them toward long positions throws
/// most of the advantage away.
inline int pick_action(const std::array<double, kBetaCount>& value, double delta) {
    int best = 0;
    for (int b = 1; b < kBetaCount; ++b)
        if (value[static_cast<std::size_t>(b)] > value[static_cast<std::size_t>(best)]) best = b;
    const double bar = value[static_cast<std::size_t>(best)] - 1e-12;
    if (delta >= 0.0) {
        for (int b = kBetaCount - 1; b >= 0; --b)
            if (value[static_cast<std::size_t>(b)] >= bar) return b;
    } else {
        for (int b = 0; b < kBetaCount; ++b)
            if (value[static_cast<std::size_t>(b)] >= bar) return b;
    }
    return best;
}

} // namespace detail

/// Backward induction. Last stage: V(delta) = max_b P(delta + inc >= 0);
/// earlier stages: V_m(delta) = max_b E[V_{m+1}(delta + inc)].
inline RankPolicy solve(const TransitionKernel& kernel, std::vector<double> grid, int q) {
    if (grid.size() < 2 || !std::is_sorted(grid.begin(), grid.end())) throw ParameterError("delta grid must be sorted");
    if (q != kernel.q()) throw ConfigurationError("kernel was built for a different target rank");
    const double step = grid[1] - grid[0];
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (std::abs(grid[i] - grid[i - 1] - step) > 1e-9 * std::max(1.0, std::abs(step)))
            throw ParameterError("delta grid must be uniformly spaced");
    const int n_m = kernel.n_intervals();
    const int n_p = kernel.n_paths();
    if (n_p < 1) throw ConfigurationError("empty kernel cell");
    const auto n_g = static_cast<Eigen::Index>(grid.size());
    RankPolicy policy;
    policy.q = q;
    policy.grid = grid;
    policy.beta.resize(n_m, n_g);
    policy.value.resize(n_m, n_g);

    // Last stage via sorted increments.
    {
        const int m = n_m - 1;
        std::array<std::vector<double>, kBetaCount> sorted;
        for (int b = 0; b < kBetaCount; ++b) {
            const auto c = kernel.cell(m, b);
            sorted[static_cast<std::size_t>(b)].assign(c.begin(), c.end());
            std::sort(sorted[static_cast<std::size_t>(b)].begin(), sorted[static_cast<std::size_t>(b)].end());
        }
        for (Eigen::Index g = 0; g < n_g; ++g) {
            std::array<double, kBetaCount> val{};
            for (int b = 0; b < kBetaCount; ++b) {
                const auto& s = sorted[static_cast<std::size_t>(b)];
                const auto it = std::lower_bound(s.begin(), s.end(), -grid[static_cast<std::size_t>(g)]);
                val[static_cast<std::size_t>(b)] = static_cast<double>(s.end() - it) / n_p;
            }
            const int pick = detail::pick_action(val, grid[static_cast<std::size_t>(g)]);
            policy.beta(m, g) = beta_of(pick);
            policy.value(m, g) = *std::max_element(val.begin(), val.end());
        }
    }

    std::vector<double> next(grid.size());
    for (int m = n_m - 2; m >= 0; --m) {
        for (Eigen::Index g = 0; g < n_g; ++g) next[static_cast<std::size_t>(g)] = policy.value(m + 1, g);
        const detail::UniformInterpolator interp{grid.front(), step, next};
        for (Eigen::Index g = 0; g < n_g; ++g) {
            const double delta = grid[static_cast<std::size_t>(g)];
            std::array<double, kBetaCount> val{};
            for (int b = 0; b < kBetaCount; ++b) {
                double sum = 0.0;
                for (double inc : kernel.cell(m, b)) sum += interp(delta + inc);
                val[static_cast<std::size_t>(b)] = sum / n_p;
            }
            const int pick = detail::pick_action(val, delta);
            policy.beta(m, g) = beta_of(pick);
            policy.value(m, g) = std::clamp(*std::max_element(val.begin(), val.end()), 0.0, 1.0);
        }
    }
    return policy;
}

/// Largest decrease of V_m along the grid (0 for a monotone table).
inline double max_monotonicity_violation(const RankPolicy& policy) {
    double worst = 0.0;
    for (Eigen::Index m = 0; m < policy.value.rows(); ++m)
        for (Eigen::Index g = 1; g < policy.value.cols(); ++g)
            worst = std::max(worst, policy.value(m, g - 1) - policy.value(m, g));
    return worst;
}

} // namespace rankarena

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "market.hpp"
#include "numeric.hpp"
#include "portfolio.hpp"

namespace rankarena {

/// Weights w[i, m, k] for K teams over M intervals. Intervals a team did not
/// submit for are flagged and filled by carried_forward().
class SubmissionPanel {
public:
    SubmissionPanel() = default;
    SubmissionPanel(int n_teams, int n_intervals, int n_assets)
        : n_teams_(n_teams), n_intervals_(n_intervals), n_assets_(n_assets),
          weights_(static_cast<std::size_t>(n_intervals), Eigen::MatrixXd::Zero(n_teams, n_assets)),
          submitted_(static_cast<std::size_t>(n_intervals), std::vector<char>(static_cast<std::size_t>(n_teams), 0)) {
        if (n_teams < 1 || n_intervals < 1 || n_assets < 1) throw ParameterError("empty submission panel");
        for (int k = 0; k < n_teams; ++k) team_ids_.push_back(std::to_string(k + 1));
    }

    int n_teams() const { return n_teams_; }
    int n_intervals() const { return n_intervals_; }
    int n_assets() const { return n_assets_; }

    const std::vector<std::string>& team_ids() const { return team_ids_; }
    void set_team_ids(std::vector<std::string> ids) {
        if (static_cast<int>(ids.size()) != n_teams_) throw ParameterError("team id count mismatch");
        team_ids_ = std::move(ids);
    }

    void set(int team, int m, const Eigen::Ref<const Eigen::VectorXd>& w) {
        check(team, m);
        if (w.size() != n_assets_) throw ParameterError("weight vector has wrong length");
        weights_[static_cast<std::size_t>(m)].row(team) = w.transpose();
        submitted_[static_cast<std::size_t>(m)][static_cast<std::size_t>(team)] = 1;
    }

    /// K x I weights of interval m.
    const Eigen::MatrixXd& interval(int m) const { return weights_.at(static_cast<std::size_t>(m)); }
    Eigen::VectorXd weights(int team, int m) const { return interval(m).row(team).transpose(); }
    bool submitted(int team, int m) const {
        check(team, m);
        return submitted_[static_cast<std::size_t>(m)][static_cast<std::size_t>(team)] != 0;
    }

    /// First interval with a submission; n_intervals() if the team never submitted.
    int first_active(int team) const {
        for (int m = 0; m < n_intervals_; ++m)
            if (submitted(team, m)) return m;
        return n_intervals_;
    }

    bool complete() const {
        for (int m = 0; m < n_intervals_; ++m)
            for (int k = 0; k < n_teams_; ++k)
                if (!submitted(k, m) && first_active(k) <= m) return false;
        return true;
    }

    /// Missing intervals reuse the previous interval's weights. Intervals before
    /// a team's first submission stay empty (the team is not scored there).
    SubmissionPanel carried_forward() const {
        SubmissionPanel out = *this;
        for (int k = 0; k < n_teams_; ++k) {
            for (int m = 1; m < n_intervals_; ++m) {
                if (!out.submitted(k, m) && out.submitted(k, m - 1)) {
                    out.weights_[static_cast<std::size_t>(m)].row(k) = out.weights_[static_cast<std::size_t>(m - 1)].row(k);
                    out.submitted_[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] = 1;
                }
            }
        }
        return out;
    }

    /// Indices of the first team of every group of teams whose weights are
    /// bitwise identical in every interval.
    std::vector<int> distinct_teams() const {
        std::vector<int> keep;
        for (int k = 0; k < n_teams_; ++k) {
            bool duplicate = false;
            for (int j : keep) {
                bool same = true;
                for (int m = 0; m < n_intervals_ && same; ++m)
                    same = submitted(k, m) == submitted(j, m) && interval(m).row(k) == interval(m).row(j);
                if (same) {
                    duplicate = true;
                    break;
                }
            }
            if (!duplicate) keep.push_back(k);
        }
        return keep;
    }

    SubmissionPanel select(const std::vector<int>& teams) const {
        SubmissionPanel out(static_cast<int>(teams.size()), n_intervals_, n_assets_);
        std::vector<std::string> ids;
        for (std::size_t j = 0; j < teams.size(); ++j) {
            const int k = teams[j];
            ids.push_back(team_ids_.at(static_cast<std::size_t>(k)));
            for (int m = 0; m < n_intervals_; ++m)
                if (submitted(k, m)) out.set(static_cast<int>(j), m, weights(k, m));
        }
        out.set_team_ids(std::move(ids));
        return out;
    }

private:
    void check(int team, int m) const {
        if (team < 0 || team >= n_teams_ || m < 0 || m >= n_intervals_) throw ParameterError("team/interval out of range");
    }

    int n_teams_ = 0;
    int n_intervals_ = 0;
    int n_assets_ = 0;
    std::vector<Eigen::MatrixXd> weights_;
    std::vector<std::vector<char>> submitted_;
    std::vector<std::string> team_ids_;
};

/// Daily team returns, T x K. Days before a team's first submission are zero
/// and excluded from scoring via first_day.
struct DailyReturns {
    Eigen::MatrixXd values;
    std::vector<int> first_day;

    int n_days() const { return static_cast<int>(values.rows()); }
    int n_teams() const { return static_cast<int>(values.cols()); }
};

/// Plain returns RET[t, k] = sum_i w[i, m(t), k] r[i, t].
inline DailyReturns plain_returns(const SubmissionPanel& submissions, const ReturnPanel& panel) {
    if (submissions.n_assets() != panel.n_assets()) throw ParameterError("asset universes differ");
    if (submissions.n_intervals() < panel.n_intervals()) throw ParameterError("submissions do not cover every interval");
    const SubmissionPanel filled = submissions.complete() ? submissions : submissions.carried_forward();
    DailyReturns out;
    out.values.resize(panel.n_days(), filled.n_teams());
    for (int m = 0; m < panel.n_intervals(); ++m)
        out.values.middleRows(panel.interval_begin(m), panel.interval_length(m)).noalias() =
            panel.interval(m).transpose() * filled.interval(m).transpose();
    for (int k = 0; k < filled.n_teams(); ++k) {
        const int m0 = filled.first_active(k);
        out.first_day.push_back(m0 >= panel.n_intervals() ? panel.n_days() : panel.interval_begin(m0));
    }
    return out;
}

/// Log returns ret = ln(1 + RET). RET <= -1 is a hard error (bankruptcy).
inline DailyReturns to_log_returns(DailyReturns plain) {
    for (Eigen::Index k = 0; k < plain.values.cols(); ++k) {
        auto col = plain.values.col(k);
        std::span<double> s(col.data(), static_cast<std::size_t>(col.size()));
        if (!log1p_inplace(s, s))
            throw ScoreError("team " + std::to_string(k + 1) + " has a daily return <= -100% (bankrupt)");
    }
    return plain;
}

inline DailyReturns daily_returns(const SubmissionPanel& submissions, const ReturnPanel& panel) {
    return to_log_returns(plain_returns(submissions, panel));
}

/// Information ratio of a log-return window: sum / sample sd.
inline double ir(std::span<const double> daily_ret) { return information_ratio_of(daily_ret); }

/// IR over days t1..t2 inclusive.
inline double ir(std::span<const double> daily_ret, int t1, int t2) {
    if (t1 < 0 || t2 >= static_cast<int>(daily_ret.size()) || t2 <= t1) throw ParameterError("invalid IR window");
    return information_ratio_of(daily_ret.subspan(static_cast<std::size_t>(t1), static_cast<std::size_t>(t2 - t1 + 1)));
}

/// rank_k = #{k' : IR_k' >= IR_k}; ties share the larger rank.
inline std::vector<int> rank(std::span<const double> values) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> out;
    out.reserve(values.size());
    for (double v : values) {
        const auto first_ge = std::lower_bound(sorted.begin(), sorted.end(), v);
        out.push_back(static_cast<int>(sorted.end() - first_ge));
    }
    return out;
}

/// Per-interval IR, each standardized by its own interval's sd; their sum is
/// the additive cumulative score.
inline std::vector<double> ir_additive(std::span<const double> daily_ret, int days_per_interval) {
    if (days_per_interval < 2) throw ParameterError("intervals need at least two days");
    std::vector<double> out;
    for (std::size_t begin = 0; begin < daily_ret.size(); begin += static_cast<std::size_t>(days_per_interval)) {
        const std::size_t len = std::min<std::size_t>(static_cast<std::size_t>(days_per_interval), daily_ret.size() - begin);
        out.push_back(information_ratio_of(daily_ret.subspan(begin, len)));
    }
    return out;
}

/// Scoring window over intervals m1..m2 inclusive (0-based).
struct Window {
    int first;
    int last;

    std::string label() const { return std::to_string(first + 1) + "-" + std::to_string(last + 1); }
    friend bool operator==(const Window&, const Window&) = default;
};

inline std::vector<Window> interval_windows(int n_intervals) {
    std::vector<Window> out;
    for (int m = 0; m < n_intervals; ++m) out.push_back({m, m});
    return out;
}

/// Quarters of three intervals each, as used for the quarterly prizes.
inline std::vector<Window> quarter_windows(int n_intervals) {
    std::vector<Window> out;
    for (int q = 0; q + 2 < n_intervals; q += 3) out.push_back({q, q + 2});
    return out;
}

inline std::vector<Window> cumulative_windows(int n_intervals) {
    std::vector<Window> out;
    for (int m = 0; m < n_intervals; ++m) out.push_back({0, m});
    return out;
}

/// IR and rank of every team over a set of windows. A team whose IR is
/// undefined in a window (zero variance, or not yet active) gets NaN and rank K.
class ScoreBoard {
public:
    ScoreBoard(const DailyReturns& log_returns, int days_per_interval, std::vector<Window> windows)
        : windows_(std::move(windows)), n_teams_(log_returns.n_teams()) {
        const int n_days = log_returns.n_days();
        for (const Window& w : windows_) {
            const int begin = w.first * days_per_interval;
            const int end = std::min(n_days, (w.last + 1) * days_per_interval);
            if (w.first < 0 || w.last < w.first || begin >= n_days) throw ParameterError("window outside the calendar");
            std::vector<double> irs(static_cast<std::size_t>(n_teams_), std::numeric_limits<double>::quiet_NaN());
            for (int k = 0; k < n_teams_; ++k) {
                const int start = std::max(begin, log_returns.first_day[static_cast<std::size_t>(k)]);
                if (end - start < 2) continue;
                const auto col = log_returns.values.col(k);
                try {
                    irs[static_cast<std::size_t>(k)] = information_ratio_of(
                        std::span<const double>(col.data() + start, static_cast<std::size_t>(end - start)));
                } catch (const ScoreError&) {
                }
            }
            ir_.push_back(irs);
            ranks_.push_back(rank_with_undefined(irs));
        }
    }

    const std::vector<Window>& windows() const { return windows_; }
    int n_teams() const { return n_teams_; }
    const std::vector<double>& ir(std::size_t window) const { return ir_.at(window); }
    const std::vector<int>& ranks(std::size_t window) const { return ranks_.at(window); }

    std::size_t index_of(const Window& w) const {
        for (std::size_t i = 0; i < windows_.size(); ++i)
            if (windows_[i] == w) return i;
        throw ParameterError("window not on the scoreboard: " + w.label());
    }

    /// Ranks with NaN scores pushed to the bottom (rank K).
    static std::vector<int> rank_with_undefined(const std::vector<double>& irs) {
        std::vector<double> finite;
        for (double v : irs)
            if (std::isfinite(v)) finite.push_back(v);
        const std::vector<int> finite_ranks = rank(finite);
        std::vector<int> out;
        std::size_t j = 0;
        for (double v : irs) out.push_back(std::isfinite(v) ? finite_ranks[j++] : static_cast<int>(irs.size()));
        return out;
    }

private:
    std::vector<Window> windows_;
    int n_teams_;
    std::vector<std::vector<double>> ir_;
    std::vector<std::vector<int>> ranks_;
};

} // namespace rankarena

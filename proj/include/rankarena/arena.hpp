#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dp_policy.hpp"
#include "empirics.hpp"
#include "errors.hpp"
#include "market.hpp"
#include "numeric.hpp"
#include "portfolio.hpp"
#include "random.hpp"
#include "scoring.hpp"

namespace rankarena {

/// Strategy of the single strategic ("focal") team.
struct FocalStrategy {
    enum class Kind { baseline, tangency, rank_opt, bootstrapped };

    Kind kind = Kind::baseline;
    double lambda = 0.0;                        // tangency only
    std::shared_ptr<const RankPolicy> policy;   // rank_opt only
    std::optional<BaselineTheta> theta;         // baseline in the bootstrap arena

    static FocalStrategy baseline() { return {}; }
    static FocalStrategy tangency(double lambda) {
        if (!(lambda >= 0.0)) throw ParameterError("lambda must be non-negative");
        FocalStrategy s;
        s.kind = Kind::tangency;
        s.lambda = lambda;
        return s;
    }
    static FocalStrategy rank_opt(std::shared_ptr<const RankPolicy> policy) {
        if (!policy) throw ParameterError("rank_opt needs a solved policy");
        FocalStrategy s;
        s.kind = Kind::rank_opt;
        s.policy = std::move(policy);
        return s;
    }
    static FocalStrategy bootstrapped() {
        FocalStrategy s;
        s.kind = Kind::bootstrapped;
        return s;
    }

    std::string name() const {
        switch (kind) {
        case Kind::baseline: return "baseline";
        case Kind::tangency: return "tangency(" + format_lambda() + ")";
        case Kind::rank_opt: return "rank_opt(q=" + std::to_string(policy->q) + ")";
        case Kind::bootstrapped: return "bootstrapped";
        }
        return "unknown";
    }

private:
    std::string format_lambda() const {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", lambda);
        return buf;
    }
};

struct ArenaConfig {
    int n_teams = 163;
    int n_intervals = 12;
    long n_reps = 100000;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_teams < 2) throw ParameterError("arena needs at least two teams");
        if (n_intervals < 1) throw ParameterError("arena needs at least one interval");
        if (n_reps < 1) throw ParameterError("n_reps must be at least 1");
    }
};

/// Aggregate outcome of one focal strategy. Ranks are 1-based; histograms
/// are indexed by rank - 1.
struct ArenaReport {
    std::string strategy;
    int n_teams = 0;
    long n_reps = 0;
    double mean_ir = 0.0;
    double se_ir = 0.0;
    double mean_beta_plus = 0.0;
    std::vector<long long> rank_histogram;
    std::vector<std::vector<long long>> quarter_histograms;

    double prob_rank_leq(int q) const { return cumulative_share(rank_histogram, q); }
    double prob_quarter_rank_leq(std::size_t quarter, int q) const {
        return cumulative_share(quarter_histograms.at(quarter), q);
    }
    /// Monte Carlo standard error of prob_rank_leq(q).
    double prob_rank_leq_se(int q) const {
        const double p = prob_rank_leq(q);
        return std::sqrt(p * (1.0 - p) / static_cast<double>(n_reps));
    }

private:
    double cumulative_share(const std::vector<long long>& hist, int q) const {
        long long hits = 0;
        for (int r = 0; r < std::min<int>(q, static_cast<int>(hist.size())); ++r) hits += hist[static_cast<std::size_t>(r)];
        return static_cast<double>(hits) / static_cast<double>(n_reps);
    }
};

/// Outcome of the focal team in one replication.
struct FocalOutcome {
    double ir = std::numeric_limits<double>::quiet_NaN();
    int rank = 0;
    std::vector<int> quarter_ranks;
    double mean_beta_plus = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

/// One competition: the returns everybody faces and the opponents' daily log
/// returns. Interval m covers days [bounds[m], bounds[m + 1]).
class Round {
public:
    Round(Eigen::MatrixXd returns_t, std::vector<int> bounds, Eigen::MatrixXd opponent_log)
        : returns_t_(std::move(returns_t)), bounds_(std::move(bounds)), opponent_log_(std::move(opponent_log)) {
        total_ir_ = window_irs(0, n_intervals());
        for (int q = 0; q + 2 < n_intervals(); q += 3) quarter_ir_.push_back(window_irs(q, q + 3));
        cumulative_sorted_.resize(static_cast<std::size_t>(n_intervals()));
    }

    int n_intervals() const { return static_cast<int>(bounds_.size()) - 1; }
    int n_assets() const { return static_cast<int>(returns_t_.cols()); }
    int begin(int m) const { return bounds_[static_cast<std::size_t>(m)]; }
    int length(int m) const { return bounds_[static_cast<std::size_t>(m) + 1] - bounds_[static_cast<std::size_t>(m)]; }
    const Eigen::MatrixXd& returns_t() const { return returns_t_; }

    /// Plays a focal team. choose(m, delta, q_of_policy) must return its weights
    /// for interval m; delta is its gap to the q-th best opponent at the start of
    /// interval m under exact cumulative scoring (0 at m = 0).
    template <class Choose>
    FocalOutcome play(Choose&& choose, int q) {
        const int n_days = bounds_.back();
        Eigen::VectorXd log_ret(n_days);
        double beta_sum = 0.0;
        for (int m = 0; m < n_intervals(); ++m) {
            double delta = 0.0;
            if (m > 0 && q > 0) {
                const double own = safe_ir(std::span<const double>(log_ret.data(), static_cast<std::size_t>(begin(m))));
                delta = own - qth_cumulative(m, q);
            }
            const Eigen::VectorXd w = choose(m, delta);
            beta_sum += beta_plus(w);
            auto block = log_ret.segment(begin(m), length(m));
            block.noalias() = returns_t_.middleRows(begin(m), length(m)) * w;
            std::span<double> s(block.data(), static_cast<std::size_t>(length(m)));
            if (!log1p_inplace(s, s)) throw ScoreError("focal team went bankrupt");
        }
        FocalOutcome out;
        out.ir = safe_ir(std::span<const double>(log_ret.data(), static_cast<std::size_t>(n_days)));
        out.rank = rank_among(total_ir_, out.ir);
        for (std::size_t qi = 0; qi < quarter_ir_.size(); ++qi) {
            const int b = begin(static_cast<int>(3 * qi));
            const int e = bounds_[3 * qi + 3];
            const double v = safe_ir(std::span<const double>(log_ret.data() + b, static_cast<std::size_t>(e - b)));
            out.quarter_ranks.push_back(rank_among(quarter_ir_[qi], v));
        }
        out.mean_beta_plus = beta_sum / n_intervals();
        return out;
    }

private:
    static double safe_ir(std::span<const double> x) {
        if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
        try {
            return information_ratio_of(x);
        } catch (const ScoreError&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    }

    /// 1 + number of opponents scoring at least `own`; an undefined own
    /// score ranks last, undefined opponent scores never beat anyone.
    static int rank_among(const std::vector<double>& opponents, double own) {
        const int k = static_cast<int>(opponents.size()) + 1;
        if (!std::isfinite(own)) return k;
        int r = 1;
        for (double v : opponents) r += (v >= own) ? 1 : 0;
        return r;
    }

    std::vector<double> window_irs(int m_first, int m_end) const {
        const int b = begin(m_first);
        const int e = bounds_[static_cast<std::size_t>(m_end)];
        std::vector<double> out(static_cast<std::size_t>(opponent_log_.cols()));
        for (Eigen::Index k = 0; k < opponent_log_.cols(); ++k)
            out[static_cast<std::size_t>(k)] =
                safe_ir(std::span<const double>(opponent_log_.col(k).data() + b, static_cast<std::size_t>(e - b)));
        return out;
    }

    double qth_cumulative(int m, int q) {
        auto& sorted = cumulative_sorted_[static_cast<std::size_t>(m)];
        if (sorted.empty()) {
            sorted = window_irs(0, m);
            for (double& v : sorted)
                if (!std::isfinite(v)) v = -std::numeric_limits<double>::infinity();
            std::sort(sorted.begin(), sorted.end(), std::greater<>());
        }
        return sorted[static_cast<std::size_t>(std::min<int>(q, static_cast<int>(sorted.size())) - 1)];
    }

    Eigen::MatrixXd returns_t_;
    std::vector<int> bounds_;
    Eigen::MatrixXd opponent_log_;
    std::vector<double> total_ir_;
    std::vector<std::vector<double>> quarter_ir_;
    std::vector<std::vector<double>> cumulative_sorted_;
};

inline void add_opponent_block(const Eigen::MatrixXd& returns_t, int begin, int len, const Eigen::MatrixXd& weights,
                               Eigen::MatrixXd& opponent_log) {
    auto block = opponent_log.middleRows(begin, len);
    block.noalias() = returns_t.middleRows(begin, len) * weights.transpose();
    for (Eigen::Index k = 0; k < block.cols(); ++k) {
        std::span<double> s(opponent_log.col(k).data() + begin, static_cast<std::size_t>(len));
        if (!log1p_inplace(s, s)) throw ScoreError("simulated opponent went bankrupt");
    }
}

inline std::vector<ArenaReport> aggregate(const std::vector<FocalStrategy>& focals,
                                          const std::vector<std::vector<FocalOutcome>>& outcomes, int n_teams) {
    std::vector<ArenaReport> reports;
    for (std::size_t f = 0; f < focals.size(); ++f) {
        ArenaReport rep;
        rep.strategy = focals[f].name();
        rep.n_teams = n_teams;
        rep.n_reps = static_cast<long>(outcomes.size());
        rep.rank_histogram.assign(static_cast<std::size_t>(n_teams), 0);
        RunningStats ir_stats;
        double beta_sum = 0.0;
        for (const auto& per_rep : outcomes) {
            const FocalOutcome& o = per_rep[f];
            if (std::isfinite(o.ir)) ir_stats.add(o.ir);
            beta_sum += o.mean_beta_plus;
            rep.rank_histogram[static_cast<std::size_t>(o.rank - 1)] += 1;
            if (rep.quarter_histograms.size() < o.quarter_ranks.size())
                rep.quarter_histograms.resize(o.quarter_ranks.size(), std::vector<long long>(static_cast<std::size_t>(n_teams), 0));
            for (std::size_t q = 0; q < o.quarter_ranks.size(); ++q)
                rep.quarter_histograms[q][static_cast<std::size_t>(o.quarter_ranks[q] - 1)] += 1;
        }
        rep.mean_ir = ir_stats.mean;
        rep.se_ir = ir_stats.standard_error();
        rep.mean_beta_plus = beta_sum / static_cast<double>(outcomes.size());
        reports.push_back(std::move(rep));
    }
    return reports;
}

} // namespace detail

/// Stylized arena: K - 1 baseline opponents under the normal market model.
/// Each focal strategy plays its own competition against the same opponents
/// and returns within a replication, so strategy comparisons share random
/// numbers; every competition on its own has exactly one focal team.
inline std::vector<ArenaReport> run_stylized(const MarketModel& model, const BaselineTheta& theta,
                                             const std::vector<FocalStrategy>& focals, const ArenaConfig& cfg) {
    cfg.validate();
    model.validate();
    theta.validate(model.n_assets);
    if (focals.empty()) throw ParameterError("no focal strategy given");
    std::vector<std::optional<TangencySolver>> solvers(focals.size());
    for (std::size_t f = 0; f < focals.size(); ++f) {
        const FocalStrategy& s = focals[f];
        if (s.kind == FocalStrategy::Kind::bootstrapped) throw ParameterError("bootstrapped focal needs the bootstrap arena");
        if (s.kind == FocalStrategy::Kind::tangency) {
            if (s.lambda != 0.0 && s.lambda != model.lambda)
                throw ParameterError("tangency lambda must be 0 or the market model's lambda");
            solvers[f].emplace(model.with_lambda(s.lambda));
        }
        if (s.kind == FocalStrategy::Kind::rank_opt && s.policy->n_intervals() < cfg.n_intervals)
            throw ParameterError("policy covers fewer intervals than the arena");
    }
    const int n_opp = cfg.n_teams - 1;
    const int len = model.days_per_interval;
    const int n_days = cfg.n_intervals * len;
    std::vector<int> bounds;
    for (int m = 0; m <= cfg.n_intervals; ++m) bounds.push_back(m * len);
    std::vector<std::vector<FocalOutcome>> outcomes(static_cast<std::size_t>(cfg.n_reps));

    parallel_for(static_cast<std::size_t>(cfg.n_reps), [&](std::size_t r) {
        Engine rng_ret = make_engine(cfg.seed, Stream::returns, r);
        const ReturnPanel panel = sample_returns(model, n_days, rng_ret);
        Eigen::MatrixXd returns_t = panel.returns().transpose();
        Engine rng_opp = make_engine(cfg.seed, Stream::opponents, r);
        Eigen::MatrixXd weights(n_opp, model.n_assets), opponent_log(n_days, n_opp);
        Eigen::VectorXd w(model.n_assets);
        std::vector<int> scratch;
        for (int m = 0; m < cfg.n_intervals; ++m) {
            for (int k = 0; k < n_opp; ++k) {
                sample_baseline_into(theta, rng_opp, scratch, w);
                weights.row(k) = w.transpose();
            }
            detail::add_opponent_block(returns_t, m * len, len, weights, opponent_log);
        }
        detail::Round round(std::move(returns_t), bounds, std::move(opponent_log));
        auto& out = outcomes[r];
        for (std::size_t f = 0; f < focals.size(); ++f) {
            const FocalStrategy& s = focals[f];
            Engine rng = make_engine(cfg.seed, Stream::focal, r, f);
            Eigen::VectorXd own(model.n_assets);
            const int q = s.kind == FocalStrategy::Kind::rank_opt ? s.policy->q : 0;
            out.push_back(round.play(
                [&](int m, double delta) -> Eigen::VectorXd {
                    switch (s.kind) {
                    case FocalStrategy::Kind::baseline: sample_baseline_into(theta, rng, scratch, own); break;
                    case FocalStrategy::Kind::tangency:
                        own = (*solvers[f])(s.lambda > 0.0 ? panel.predictable_sum(m)
                                                           : Eigen::VectorXd::Zero(model.n_assets));
                        break;
                    case FocalStrategy::Kind::rank_opt: rank_opt_weights_into(s.policy->act(m, delta), rng, scratch, own); break;
                    case FocalStrategy::Kind::bootstrapped: break;
                    }
                    return own;
                },
                q));
        }
    });
    return detail::aggregate(focals, outcomes, cfg.n_teams);
}

inline ArenaReport run_stylized(const MarketModel& model, const BaselineTheta& theta, const FocalStrategy& focal,
                                const ArenaConfig& cfg) {
    return run_stylized(model, theta, std::vector<FocalStrategy>{focal}, cfg).front();
}

/// Draws of the bootstrap arena's interval indices for replication r. Shared by
/// every strategy played with the same seed.
inline std::vector<int> resampled_intervals(std::uint64_t seed, std::size_t r, int n_positions, int n_observed) {
    Engine rng = make_engine(seed, Stream::resample, r);
    std::uniform_int_distribution<int> pick(0, n_observed - 1);
    std::vector<int> out;
    for (int j = 0; j < n_positions; ++j) out.push_back(pick(rng));
    return out;
}

/// Bootstrap arena: intervals of observed returns resampled with replacement;
/// opponents draw, per position, a real submission made for the source
/// interval.
inline std::vector<ArenaReport> run_bootstrap(const ReturnPanel& prices, const SubmissionPanel& submissions,
                                              const std::vector<FocalStrategy>& focals, const ArenaConfig& cfg) {
    cfg.validate();
    if (focals.empty()) throw ParameterError("no focal strategy given");
    if (submissions.n_assets() != prices.n_assets()) throw ParameterError("submission and price panels disagree on assets");
    const int n_observed = std::min(prices.n_intervals(), submissions.n_intervals());
    const SubmissionPanel filled = submissions.carried_forward();
    std::vector<std::vector<int>> pool(static_cast<std::size_t>(n_observed));
    for (int m = 0; m < n_observed; ++m) {
        for (int k = 0; k < filled.n_teams(); ++k)
            if (filled.submitted(k, m)) pool[static_cast<std::size_t>(m)].push_back(k);
        if (pool[static_cast<std::size_t>(m)].empty())
            throw IngestionError("no submissions for interval " + std::to_string(m + 1));
    }
    for (const FocalStrategy& s : focals) {
        if (s.kind == FocalStrategy::Kind::tangency) throw ParameterError("tangency focal needs the stylized arena");
        if (s.kind == FocalStrategy::Kind::baseline && !s.theta) throw ParameterError("baseline focal needs theta here");
        if (s.kind == FocalStrategy::Kind::rank_opt && s.policy->n_intervals() < cfg.n_intervals)
            throw ParameterError("policy covers fewer intervals than the arena");
    }
    const int n_opp = cfg.n_teams - 1;
    const int n_assets = prices.n_assets();
    std::vector<std::vector<FocalOutcome>> outcomes(static_cast<std::size_t>(cfg.n_reps));

    parallel_for(static_cast<std::size_t>(cfg.n_reps), [&](std::size_t r) {
        const std::vector<int> source = resampled_intervals(cfg.seed, r, cfg.n_intervals, n_observed);
        std::vector<int> bounds{0};
        for (int s : source) bounds.push_back(bounds.back() + prices.interval_length(s));
        Eigen::MatrixXd returns_t(bounds.back(), n_assets);
        for (int j = 0; j < cfg.n_intervals; ++j)
            returns_t.middleRows(bounds[static_cast<std::size_t>(j)], prices.interval_length(source[static_cast<std::size_t>(j)])) =
                prices.interval(source[static_cast<std::size_t>(j)]).transpose();
        Engine rng_opp = make_engine(cfg.seed, Stream::opponents, r);
        Eigen::MatrixXd weights(n_opp, n_assets), opponent_log(bounds.back(), n_opp);
        for (int j = 0; j < cfg.n_intervals; ++j) {
            const auto& candidates = pool[static_cast<std::size_t>(source[static_cast<std::size_t>(j)])];
            std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
            const Eigen::MatrixXd& interval = filled.interval(source[static_cast<std::size_t>(j)]);
            for (int k = 0; k < n_opp; ++k) weights.row(k) = interval.row(candidates[pick(rng_opp)]);
            detail::add_opponent_block(returns_t, bounds[static_cast<std::size_t>(j)],
                                       bounds[static_cast<std::size_t>(j) + 1] - bounds[static_cast<std::size_t>(j)], weights,
                                       opponent_log);
        }
        detail::Round round(std::move(returns_t), bounds, std::move(opponent_log));
        auto& out = outcomes[r];
        std::vector<int> scratch;
        for (std::size_t f = 0; f < focals.size(); ++f) {
            const FocalStrategy& s = focals[f];
            Engine rng = make_engine(cfg.seed, Stream::focal, r, f);
            Eigen::VectorXd own(n_assets);
            const int q = s.kind == FocalStrategy::Kind::rank_opt ? s.policy->q : 0;
            out.push_back(round.play(
                [&](int m, double delta) -> Eigen::VectorXd {
                    switch (s.kind) {
                    case FocalStrategy::Kind::baseline: sample_baseline_into(*s.theta, rng, scratch, own); break;
                    case FocalStrategy::Kind::bootstrapped: {
                        const auto& candidates = pool[static_cast<std::size_t>(source[static_cast<std::size_t>(m)])];
                        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
                        own = filled.interval(source[static_cast<std::size_t>(m)]).row(candidates[pick(rng)]).transpose();
                        break;
                    }
                    case FocalStrategy::Kind::rank_opt: rank_opt_weights_into(s.policy->act(m, delta), rng, scratch, own); break;
                    case FocalStrategy::Kind::tangency: break;
                    }
                    return own;
                },
                q));
        }
    });
    return detail::aggregate(focals, outcomes, cfg.n_teams);
}

/// Per-row summary of leaderboards. Each board is (M + 1) x K: one row of
/// IR per interval followed by the IR over the whole horizon.
struct BoardStatistics {
    std::vector<std::string> labels;    // "1".."M", "total"
    Eigen::MatrixXd mean;               // rows x 4: mean, sd, q01, q99
    Eigen::MatrixXd across_sd;          // rows x 4; zeros for a single board
};

/// mean, sample sd (NaN for one team), q01 and q99 of every board row.
inline Eigen::MatrixXd board_row_statistics(const Eigen::MatrixXd& board) {
    Eigen::MatrixXd out(board.rows(), 4);
    for (Eigen::Index m = 0; m < board.rows(); ++m) {
        std::vector<double> v;
        for (Eigen::Index k = 0; k < board.cols(); ++k)
            if (std::isfinite(board(m, k))) v.push_back(board(m, k));
        if (v.empty()) throw ParameterError("leaderboard row has no defined scores");
        std::sort(v.begin(), v.end());
        out(m, 0) = mean_of(v);
        out(m, 1) = v.size() > 1 ? std::sqrt(variance_of(v)) : std::numeric_limits<double>::quiet_NaN();
        out(m, 2) = quantile_sorted(v, 0.01);
        out(m, 3) = quantile_sorted(v, 0.99);
    }
    return out;
}

inline BoardStatistics leaderboard_stats(const std::vector<Eigen::MatrixXd>& boards) {
    if (boards.empty()) throw ParameterError("need at least one leaderboard");
    const Eigen::Index rows = boards.front().rows();
    std::vector<Eigen::MatrixXd> stats;
    for (const auto& b : boards) {
        if (b.rows() != rows) throw ParameterError("leaderboards differ in shape");
        stats.push_back(board_row_statistics(b));
    }
    BoardStatistics out;
    for (Eigen::Index m = 0; m + 1 < rows; ++m) out.labels.push_back(std::to_string(m + 1));
    out.labels.push_back("total");
    out.mean = Eigen::MatrixXd::Zero(rows, 4);
    out.across_sd = Eigen::MatrixXd::Zero(rows, 4);
    for (Eigen::Index m = 0; m < rows; ++m) {
        for (int c = 0; c < 4; ++c) {
            RunningStats s;
            for (const auto& st : stats) s.add(st(m, c));
            out.mean(m, c) = s.mean;
            out.across_sd(m, c) = s.sd();
        }
    }
    return out;
}

/// Leaderboard of K baseline teams on a fixed return panel: per-interval IR
/// rows and the whole-horizon IR as the last row.
inline Eigen::MatrixXd simulate_board(const ReturnPanel& panel, const BaselineTheta& theta, int n_teams, Engine& rng) {
    theta.validate(panel.n_assets());
    const int n_m = panel.n_intervals();
    const Eigen::MatrixXd returns_t = panel.returns().transpose();
    Eigen::MatrixXd weights(n_teams, panel.n_assets()), log_ret(panel.n_days(), n_teams);
    Eigen::VectorXd w(panel.n_assets());
    std::vector<int> scratch;
    for (int m = 0; m < n_m; ++m) {
        for (int k = 0; k < n_teams; ++k) {
            sample_baseline_into(theta, rng, scratch, w);
            weights.row(k) = w.transpose();
        }
        detail::add_opponent_block(returns_t, panel.interval_begin(m), panel.interval_length(m), weights, log_ret);
    }
    Eigen::MatrixXd board(n_m + 1, n_teams);
    for (int k = 0; k < n_teams; ++k) {
        const double* col = log_ret.col(k).data();
        for (int m = 0; m < n_m; ++m)
            board(m, k) = information_ratio_of(
                std::span<const double>(col + panel.interval_begin(m), static_cast<std::size_t>(panel.interval_length(m))));
        board(n_m, k) = information_ratio_of(std::span<const double>(col, static_cast<std::size_t>(panel.n_days())));
    }
    return board;
}

inline std::vector<Eigen::MatrixXd> simulate_boards(const ReturnPanel& panel, const BaselineTheta& theta, int n_teams,
                                                    int n_sim, std::uint64_t seed, std::uint64_t stream_index = 0) {
    if (n_sim < 1) throw ParameterError("n_sim must be at least 1");
    std::vector<Eigen::MatrixXd> boards(static_cast<std::size_t>(n_sim));
    parallel_for(boards.size(), [&](std::size_t s) {
        Engine rng = make_engine(seed, Stream::observed, stream_index, s);
        boards[s] = simulate_board(panel, theta, n_teams, rng);
    });
    return boards;
}

/// Interval-level IR of ternary portfolios as a function of position counts:
/// each row holds (n_zero, short share, mean, sd, q95) of IR_{T_m} and of its
/// difference to a benchmark portfolio drawn from `benchmark` on the same returns.
struct PositionEffectRow {
    int n_zero;
    double short_share;
    double mean_ir, sd_ir, q95_ir;
    double mean_diff, sd_diff, q95_diff;
};

inline std::vector<PositionEffectRow> position_effects(const MarketModel& model, const BaselineTheta& benchmark,
                                                       const std::vector<int>& zero_counts,
                                                       const std::vector<double>& short_shares, int n_sim,
                                                       std::uint64_t seed) {
    model.validate();
    benchmark.validate(model.n_assets);
    if (n_sim < 2) throw ParameterError("n_sim must be at least 2");
    struct Cell {
        BaselineTheta theta;
        double share;
    };
    std::vector<Cell> cells;
    for (int n0 : zero_counts) {
        for (double s : short_shares) {
            const int active = model.n_assets - n0;
            if (active < 1 || !(s >= 0.0 && s <= 1.0)) throw ParameterError("invalid position-effect grid point");
            const int n_minus = static_cast<int>(std::floor(s * active + 0.5 + 1e-9));
            cells.push_back({{active - n_minus, n0, n_minus}, s});
        }
    }
    std::vector<PositionEffectRow> rows(cells.size());
    const MarketModel base = model.with_lambda(0.0);
    parallel_for(cells.size(), [&](std::size_t c) {
        std::vector<double> irs, diffs;
        std::vector<int> scratch;
        Eigen::VectorXd w(model.n_assets), wb(model.n_assets);
        for (int s = 0; s < n_sim; ++s) {
            Engine rng = make_engine(seed, Stream::returns, c, static_cast<std::uint64_t>(s));
            const ReturnPanel panel = sample_returns(base, model.days_per_interval, rng);
            sample_baseline_into(cells[c].theta, rng, scratch, w);
            sample_baseline_into(benchmark, rng, scratch, wb);
            Eigen::VectorXd a = panel.returns().transpose() * w, b = panel.returns().transpose() * wb;
            std::span<double> sa(a.data(), static_cast<std::size_t>(a.size())), sb(b.data(), static_cast<std::size_t>(b.size()));
            if (!log1p_inplace(sa, sa) || !log1p_inplace(sb, sb)) throw ScoreError("portfolio went bankrupt");
            const double ia = information_ratio_of(sa), ib = information_ratio_of(sb);
            irs.push_back(ia);
            diffs.push_back(ia - ib);
        }
        PositionEffectRow& row = rows[c];
        row.n_zero = cells[c].theta.n_zero;
        row.short_share = cells[c].share;
        row.mean_ir = mean_of(irs);
        row.sd_ir = std::sqrt(variance_of(irs));
        row.q95_ir = quantile(irs, 0.95);
        row.mean_diff = mean_of(diffs);
        row.sd_diff = std::sqrt(variance_of(diffs));
        row.q95_diff = quantile(diffs, 0.95);
    });
    return rows;
}

} // namespace rankarena

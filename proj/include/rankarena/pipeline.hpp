#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "arena.hpp"
#include "dp_policy.hpp"
#include "empirics.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "market.hpp"
#include "msm.hpp"
#include "portfolio.hpp"
#include "scoring.hpp"
#include "sharpe_test.hpp"

namespace rankarena {

inline constexpr const char* kVersion = "1.0.0";

/// Monte Carlo sizes of every stage.
struct Scale {
    int level_reps = 1000;
    int level_boot = 1000;
    long stylized_reps = 100000;
    long bootstrap_reps = 10000;
    int kernel_paths = 10000;
    int msm_sims = 1000;
    int board_sims = 1000;
    int pvalue_boot = 1000;
    int position_sims = 10000;

    static Scale full() { return {}; }
    static Scale desk() { return {100, 100, 5000, 2000, 2000, 100, 200, 200, 500}; }
};

struct RunConfig {
    std::string command = "reproduce-all";
    std::optional<std::filesystem::path> prices;
    std::optional<std::filesystem::path> submissions;
    std::optional<std::filesystem::path> leaderboard;
    std::filesystem::path out = "out";
    std::optional<std::uint64_t> seed;
    std::optional<long> reps;
    std::vector<double> alphas{0.01, 0.05, 0.1};
    std::vector<int> q_targets{1, 20};
    std::vector<double> tangency_lambdas{0.0, 0.0001, 0.0002, 0.0003};
    bool desk_scale = false;
    bool strict = false;
    std::optional<Scale> scale_override;  // programmatic callers only
    MarketModel model;
    BaselineTheta theta{38, 29, 33};
    int n_teams = 163;
    int n_intervals = 12;

    static const std::vector<std::string>& commands() {
        static const std::vector<std::string> c{"calibrate-market", "calibrate-theta", "test-sharpe", "solve-policy",
                                                "run-arena",        "empirics",        "reproduce-all"};
        return c;
    }

    Scale scale() const {
        Scale s = scale_override ? *scale_override : desk_scale ? Scale::desk() : Scale::full();
        if (reps) {
            s.stylized_reps = *reps;
            s.bootstrap_reps = *reps;
        }
        return s;
    }

    /// Applies key=value settings (command-line flags take precedence when
    /// the caller applies them afterwards).
    void apply(const std::map<std::string, std::string>& kv) {
        for (const auto& [key, value] : kv) {
            try {
                if (key == "mu_r") model.mu_r = std::stod(value);
                else if (key == "annual_return") model.mu_r = daily_mean_from_annual(std::stod(value), 252);
                else if (key == "sigma_rr") model.sigma_rr = std::stod(value);
                else if (key == "sigma_rr_prime") model.sigma_rr_prime = std::stod(value);
                else if (key == "lambda") model.lambda = std::stod(value);
                else if (key == "n_assets") model.n_assets = std::stoi(value);
                else if (key == "days_per_interval") model.days_per_interval = std::stoi(value);
                else if (key == "n_plus") theta.n_plus = std::stoi(value);
                else if (key == "n_zero") theta.n_zero = std::stoi(value);
                else if (key == "n_minus") theta.n_minus = std::stoi(value);
                else if (key == "n_teams") n_teams = std::stoi(value);
                else if (key == "n_intervals") n_intervals = std::stoi(value);
                else if (key == "seed") seed = std::stoull(value);
                else if (key == "reps") reps = std::stol(value);
                else if (key == "desk_scale") desk_scale = value == "1" || value == "true";
                else if (key == "strict") strict = value == "1" || value == "true";
                else if (key == "prices") prices = value;
                else if (key == "submissions") submissions = value;
                else if (key == "leaderboard") leaderboard = value;
                else if (key == "out") out = value;
                else throw ConfigurationError("unknown config key '" + key + "'");
            } catch (const std::logic_error&) {
                throw ConfigurationError("invalid value for config key '" + key + "': " + value);
            }
        }
    }

    void validate() const {
        if (!seed) throw ConfigurationError("a seed is mandatory (--seed)");
        if (std::find(commands().begin(), commands().end(), command) == commands().end())
            throw ConfigurationError("unknown command '" + command + "'");
        if (reps && *reps < 1) throw ConfigurationError("--reps must be positive");
        for (double a : alphas)
            if (!(a > 0.0 && a < 1.0)) throw ConfigurationError("alpha levels must lie in (0, 1)");
        for (int q : q_targets)
            if (q < 1 || q >= n_teams) throw ConfigurationError("q targets must lie in 1..K-1");
        model.validate();
        theta.validate(model.n_assets);
    }
};

/// FNV-1a 64 of a file, for the manifest.
inline std::string file_checksum(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::uint64_t h = 1469598103934665603ULL;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Runs the stages of one command and records what was written.
class Pipeline {
public:
    explicit Pipeline(RunConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        scale_ = cfg_.scale();
        std::filesystem::create_directories(cfg_.out);
        load_data();
    }

    const RunConfig& config() const { return cfg_; }

    /// Executes cfg.command; failures abort with the stage name after writing
    /// the partial manifest.
    void run() {
        const std::string& c = cfg_.command;
        if (c == "calibrate-market") stage("calibrate-market", [&] { calibrate_market(); });
        else if (c == "calibrate-theta") stage("calibrate-theta", [&] { calibrate_theta(); });
        else if (c == "test-sharpe") stage("test-sharpe", [&] { test_sharpe(); });
        else if (c == "solve-policy") stage("solve-policy", [&] { solve_policy(); });
        else if (c == "run-arena") stage("run-arena", [&] { run_arena(); });
        else if (c == "empirics") stage("empirics", [&] { empirics(); });
        else {
            stage("calibrate-market", [&] { calibrate_market(); });
            stage("leaderboard", [&] { leaderboard(); });
            stage("calibrate-theta", [&] { calibrate_theta(); });
            stage("test-sharpe", [&] { test_sharpe(); });
            stage("solve-policy", [&] { solve_policy(); });
            stage("run-arena", [&] { run_arena(); });
            stage("position-effects", [&] { position_effects_stage(); });
            stage("empirics", [&] { empirics(); });
        }
        write_manifest();
    }

    const nlohmann::json& manifest() const { return manifest_; }

private:
    struct Skip {
        std::string reason;
    };

    template <class F>
    void stage(const std::string& name, F&& body) {
        nlohmann::json entry{{"stage", name}};
        const std::size_t before = files_.size();
        try {
            body();
            entry["status"] = "done";
        } catch (const Skip& s) {
            entry["status"] = "skipped";
            entry["reason"] = s.reason;
        } catch (const std::exception& e) {
            entry["status"] = "failed";
            entry["error"] = e.what();
            stages_.push_back(entry);
            write_manifest();
            throw std::runtime_error("stage " + name + " failed: " + e.what());
        }
        entry["files"] = nlohmann::json::array();
        for (std::size_t i = before; i < files_.size(); ++i) entry["files"].push_back(files_[i]);
        stages_.push_back(entry);
    }

    std::uint64_t seed() const { return *cfg_.seed; }
    std::filesystem::path path(const std::string& name) const { return cfg_.out / name; }

    void commit(CsvWriter& w) {
        w.commit();
        files_.push_back(w.path().filename().string());
    }

    void load_data() {
        if (cfg_.prices) {
            prices_ = ingest_prices(*cfg_.prices);
            returns_ = prices_->to_returns(cfg_.model.days_per_interval);
        }
        if (cfg_.submissions) {
            if (!prices_) throw ConfigurationError("submissions need a price file (--prices)");
            IngestedSubmissions s = ingest_submissions(*cfg_.submissions, prices_->asset_ids, returns_->n_intervals(), cfg_.strict);
            violations_ = std::move(s.violations);
            submissions_ = std::move(s.panel);
        }
    }

    bool have_data() const { return returns_.has_value() && submissions_.has_value(); }

    /// Observed per-interval IR leaderboard (M x K), NaN where undefined.
    Eigen::MatrixXd observed_interval_board() const {
        const ScoreBoard board(daily_returns(*submissions_, *returns_), returns_->days_per_interval(),
                               interval_windows(returns_->n_intervals()));
        Eigen::MatrixXd out(returns_->n_intervals(), submissions_->n_teams());
        for (int m = 0; m < returns_->n_intervals(); ++m)
            for (int k = 0; k < submissions_->n_teams(); ++k) out(m, k) = board.ir(static_cast<std::size_t>(m))[static_cast<std::size_t>(k)];
        return out;
    }

    /// Return panel for the synthetic stages: observed returns when ingested,
    /// otherwise one fixed draw of the market model.
    ReturnPanel reference_panel() const {
        if (returns_) return *returns_;
        Engine rng = make_engine(seed(), Stream::observed, 0);
        return sample_returns(cfg_.model.with_lambda(0.0), cfg_.n_intervals * cfg_.model.days_per_interval, rng);
    }

    void calibrate_market() {
        if (!returns_) throw Skip{"no price file"};
        const CompoundSymmetryFit fit = fit_covariance_cs(*returns_);
        CsvWriter w(path("market_calibration.csv"), {"parameter", "value"});
        w.row({"mu_r", format_number(returns_->returns().mean())});
        w.row({"sigma_rr", format_number(fit.sigma_rr)});
        w.row({"sigma_rr_prime", format_number(fit.sigma_rr_prime)});
        w.row({"n_assets", std::to_string(returns_->n_assets())});
        w.row({"n_days", std::to_string(returns_->n_days())});
        w.row({"n_intervals", std::to_string(returns_->n_intervals())});
        w.row({"weight_violations", std::to_string(violations_.size())});
        commit(w);
        if (!violations_.empty()) {
            CsvWriter v(path("weight_violations.csv"), {"team_id", "interval", "gross_exposure"});
            for (const auto& x : violations_) v.row({x.team_id, std::to_string(x.interval), format_number(x.gross)});
            commit(v);
        }
    }

    void leaderboard() {
        const ReturnPanel panel = reference_panel();
        const auto boards = simulate_boards(panel, cfg_.theta, cfg_.n_teams, scale_.board_sims, seed());
        const BoardStatistics sim = leaderboard_stats(boards);
        CsvWriter w(path("table1_leaderboard.csv"), {"interval", "source", "mean", "sd", "q01", "q99", "sd_mean",
                                                     "sd_sd", "sd_q01", "sd_q99"});
        std::optional<Eigen::MatrixXd> observed;
        if (have_data()) {
            Eigen::MatrixXd board(returns_->n_intervals() + 1, submissions_->n_teams());
            board.topRows(returns_->n_intervals()) = observed_interval_board();
            const ScoreBoard total(daily_returns(*submissions_, *returns_), returns_->days_per_interval(),
                                   {Window{0, returns_->n_intervals() - 1}});
            for (int k = 0; k < submissions_->n_teams(); ++k) board(returns_->n_intervals(), k) = total.ir(0)[static_cast<std::size_t>(k)];
            observed = board_row_statistics(board);
        }
        for (std::size_t r = 0; r < sim.labels.size(); ++r) {
            const auto i = static_cast<Eigen::Index>(r);
            if (observed)
                w.row({sim.labels[r], "observed", format_number((*observed)(i, 0)), format_number((*observed)(i, 1)),
                       format_number((*observed)(i, 2)), format_number((*observed)(i, 3)), "", "", "", ""});
            w.row({sim.labels[r], returns_ ? "simulated" : "simulated_synthetic", format_number(sim.mean(i, 0)),
                   format_number(sim.mean(i, 1)), format_number(sim.mean(i, 2)), format_number(sim.mean(i, 3)),
                   format_number(sim.across_sd(i, 0)), format_number(sim.across_sd(i, 1)),
                   format_number(sim.across_sd(i, 2)), format_number(sim.across_sd(i, 3))});
        }
        commit(w);
    }

    void calibrate_theta() {
        MomentTarget target;
        ReturnPanel panel;
        std::string source;
        int n_teams = cfg_.n_teams;
        if (cfg_.leaderboard) {
            if (!returns_) throw ConfigurationError("a leaderboard needs the price file it was scored on");
            const Eigen::MatrixXd board = read_leaderboard(*cfg_.leaderboard, returns_->n_intervals());
            target = MomentTarget::from_leaderboard(board);
            n_teams = static_cast<int>(board.cols());
            panel = *returns_;
            source = "leaderboard";
        } else if (have_data()) {
            const Eigen::MatrixXd board = observed_interval_board();
            target = MomentTarget::from_leaderboard(board);
            n_teams = static_cast<int>(board.cols());
            panel = *returns_;
            source = "observed";
        } else {
            // Known-truth self-test on a synthetic panel.
            panel = reference_panel();
            Engine rng = make_engine(seed(), Stream::observed, 1);
            target = MomentTarget::from_leaderboard(simulate_leaderboard_ir(panel, BaselineTheta{50, 20, 30}, n_teams, rng));
            source = "synthetic_truth_50_20_30";
        }
        const MomentSimulator sim(panel, n_teams, scale_.msm_sims, seed());
        const ThetaEstimate est = estimate_theta(target, sim);
        CsvWriter w(path("theta_estimate.csv"), {"source", "n_plus", "n_zero", "n_minus", "objective", "n_sim"});
        w.row({source, std::to_string(est.theta.n_plus), std::to_string(est.theta.n_zero),
               std::to_string(est.theta.n_minus), format_number(est.objective), std::to_string(scale_.msm_sims)});
        commit(w);
        CsvWriter s(path("theta_surface.csv"), {"n_plus", "n_zero", "n_minus", "objective"});
        for (std::size_t i = 0; i < est.candidates.size(); ++i)
            s.row({std::to_string(est.candidates[i].n_plus), std::to_string(est.candidates[i].n_zero),
                   std::to_string(est.candidates[i].n_minus), format_number(est.surface[i])});
        commit(s);
    }

    void test_sharpe() {
        LevelStudyConfig lc;
        lc.alphas = cfg_.alphas;
        lc.n_reps = scale_.level_reps;
        lc.n_boot = scale_.level_boot;
        lc.n_intervals = cfg_.n_intervals;
        lc.seed = seed();
        const LevelStudyTable t = level_study(cfg_.model.with_lambda(0.0), cfg_.theta, lc);
        CsvWriter w(path("table2_level.csv"), {"alpha", "K", "asymptotic", "bootstrap", "n_reps", "n_boot"});
        for (std::size_t a = 0; a < t.alphas.size(); ++a)
            for (std::size_t k = 0; k < t.k_values.size(); ++k)
                w.row({format_number(t.alphas[a]), std::to_string(t.k_values[k]), format_number(t.asymptotic[a][k]),
                       format_number(t.bootstrap[a][k]), std::to_string(lc.n_reps), std::to_string(lc.n_boot)});
        commit(w);
        if (!have_data()) return;
        const MergedTeams merged = merge_duplicate_teams(submissions_->carried_forward());
        const TestReport r = sharpe_equality_test(merged.panel, *returns_, cfg_.alphas, scale_.pvalue_boot, seed());
        CsvWriter p(path("table_pvalue.csv"), {"n_teams", "n_merged", "t2", "dof", "p_asymptotic", "p_bootstrap",
                                               "n_bootstrap"});
        p.row({std::to_string(merged.panel.n_teams()), std::to_string(merged.n_merged), format_number(r.t2),
               std::to_string(r.dof), format_number(r.p_asymptotic), format_number(r.p_bootstrap.value_or(NAN)),
               std::to_string(r.n_bootstrap)});
        commit(p);
    }

    std::shared_ptr<const RankPolicy> policy(int q) {
        if (auto it = policies_.find(q); it != policies_.end()) return it->second;
        KernelConfig kc;
        kc.n_paths = scale_.kernel_paths;
        kc.n_teams = cfg_.n_teams;
        kc.n_intervals = cfg_.n_intervals;
        kc.seed = seed();
        const TransitionKernel kernel = build_kernel(cfg_.model, cfg_.theta, q, kc);
        auto p = std::make_shared<const RankPolicy>(solve(kernel, default_delta_grid(), q));
        policies_[q] = p;
        return p;
    }

    void solve_policy() {
        for (int q : cfg_.q_targets) {
            const auto p = policy(q);
            CsvWriter w(path("policy_q" + std::to_string(q) + ".csv"), {"m", "delta", "beta_plus", "value"});
            for (int m = 0; m < p->n_intervals(); ++m)
                for (std::size_t g = 0; g < p->grid.size(); ++g)
                    w.row({std::to_string(m + 1), format_number(p->grid[g]),
                           format_number(p->beta(m, static_cast<Eigen::Index>(g))),
                           format_number(p->value(m, static_cast<Eigen::Index>(g)))});
            commit(w);
        }
    }

    static std::vector<std::string> report_row(const ArenaReport& r, bool with_beta) {
        std::vector<std::string> row{r.strategy, format_number(r.mean_ir)};
        if (with_beta) row.push_back(format_number(r.mean_beta_plus));
        for (int q : {1, 5, 10, 20}) row.push_back(format_number(r.prob_rank_leq(q)));
        row.push_back(std::to_string(r.n_reps));
        return row;
    }

    void write_arena(const std::string& table, const std::string& histogram, const std::vector<ArenaReport>& reports) {
        CsvWriter w(path(table), {"portfolio", "mean_ir", "mean_beta_plus", "p_rank_le_1", "p_rank_le_5",
                                  "p_rank_le_10", "p_rank_le_20", "n_reps"});
        for (const auto& r : reports) w.row(report_row(r, true));
        commit(w);
        CsvWriter h(path(histogram), {"portfolio", "window", "rank", "count"});
        for (const auto& r : reports) {
            for (std::size_t k = 0; k < r.rank_histogram.size(); ++k)
                h.row({r.strategy, "total", std::to_string(k + 1), std::to_string(r.rank_histogram[k])});
            for (std::size_t q = 0; q < r.quarter_histograms.size(); ++q)
                for (std::size_t k = 0; k < r.quarter_histograms[q].size(); ++k)
                    h.row({r.strategy, "quarter" + std::to_string(q + 1), std::to_string(k + 1),
                           std::to_string(r.quarter_histograms[q][k])});
        }
        commit(h);
    }

    void run_arena() {
        ArenaConfig ac;
        ac.n_teams = cfg_.n_teams;
        ac.n_intervals = cfg_.n_intervals;
        ac.n_reps = scale_.stylized_reps;
        ac.seed = seed();

        std::vector<ArenaReport> tangency;
        for (double lambda : cfg_.tangency_lambdas) {
            const auto r = run_stylized(cfg_.model.with_lambda(lambda), cfg_.theta,
                                        std::vector<FocalStrategy>{FocalStrategy::tangency(lambda)}, ac);
            tangency.push_back(r.front());
        }
        CsvWriter t(path("table3_tangency.csv"), {"portfolio", "mean_ir", "p_rank_le_1", "p_rank_le_5", "p_rank_le_10",
                                                  "p_rank_le_20", "n_reps"});
        for (const auto& r : tangency) t.row(report_row(r, false));
        commit(t);

        std::vector<FocalStrategy> focals{FocalStrategy::baseline()};
        for (int q : cfg_.q_targets) focals.push_back(FocalStrategy::rank_opt(policy(q)));
        write_arena("table4_stylized.csv", "fig3a_rank_histogram.csv", run_stylized(cfg_.model, cfg_.theta, focals, ac));

        if (!have_data()) throw Skip{"bootstrap arena needs prices and submissions"};
        std::vector<FocalStrategy> boot{FocalStrategy::bootstrapped()};
        for (int q : cfg_.q_targets) boot.push_back(FocalStrategy::rank_opt(policy(q)));
        ac.n_reps = scale_.bootstrap_reps;
        write_arena("table5_bootstrap.csv", "fig3b_rank_histogram.csv", run_bootstrap(*returns_, *submissions_, boot, ac));
    }

    void position_effects_stage() {
        std::vector<int> zeros;
        for (int n0 = 0; n0 <= 80; n0 += 10) zeros.push_back(n0);
        std::vector<double> shares;
        for (int s = 0; s <= 10; ++s) shares.push_back(s / 10.0);
        const auto rows = position_effects(cfg_.model, cfg_.theta, zeros, shares, scale_.position_sims, seed());
        CsvWriter w(path("figA6_position_effects.csv"), {"n_zero", "short_share", "mean_ir", "sd_ir", "q95_ir",
                                                         "mean_diff", "sd_diff", "q95_diff"});
        for (const auto& r : rows)
            w.row({std::to_string(r.n_zero), format_number(r.short_share), format_number(r.mean_ir),
                   format_number(r.sd_ir), format_number(r.q95_ir), format_number(r.mean_diff),
                   format_number(r.sd_diff), format_number(r.q95_diff)});
        commit(w);
    }

    void empirics() {
        if (!have_data()) throw Skip{"empirics need prices and submissions"};
        const int n_m = returns_->n_intervals();
        const TeamExposure e = compute_exposures(*submissions_, asset_skewness(*returns_));
        const DailyReturns logs = daily_returns(*submissions_, *returns_);

        CsvWriter f4(path("fig4_mean_beta.csv"), {"interval", "mean_beta_plus"});
        const auto means = mean_beta_by_interval(e.beta_plus);
        for (int m = 0; m < n_m; ++m) f4.row({std::to_string(m + 1), format_number(means[static_cast<std::size_t>(m)])});
        commit(f4);

        const ScoreBoard cumulative(logs, returns_->days_per_interval(), cumulative_windows(n_m));
        Eigen::MatrixXi cum_ranks(n_m, submissions_->n_teams());
        for (int m = 0; m < n_m; ++m)
            for (int k = 0; k < submissions_->n_teams(); ++k) cum_ranks(m, k) = cumulative.ranks(static_cast<std::size_t>(m))[static_cast<std::size_t>(k)];
        CsvWriter f5(path("fig5_rank_change.csv"), {"interval", "beta_lo", "beta_hi", "n", "mean_abs_rank_change", "se"});
        for (const auto& b : rank_change_profile(cum_ranks, e.beta_plus))
            f5.row({std::to_string(b.group + 1), format_number(b.lo), format_number(b.hi), std::to_string(b.n),
                    format_number(b.mean), format_number(b.se)});
        commit(f5);

        std::vector<Window> periods = quarter_windows(n_m);
        periods.push_back({0, n_m - 1});
        std::vector<std::string> labels;
        for (const auto& p : periods) labels.push_back(p.label());
        const ScoreBoard board(logs, returns_->days_per_interval(), periods);
        Eigen::MatrixXi ranks(static_cast<Eigen::Index>(periods.size()), submissions_->n_teams());
        for (std::size_t p = 0; p < periods.size(); ++p)
            for (int k = 0; k < submissions_->n_teams(); ++k) ranks(static_cast<Eigen::Index>(p), k) = board.ranks(p)[static_cast<std::size_t>(k)];
        const Eigen::MatrixXd beta_bar = TeamExposure::period_means(e.beta_plus, periods);
        const Eigen::MatrixXd gamma_bar = TeamExposure::period_means(e.gamma, periods);

        auto write_profile = [&](const std::string& name, const char* column, const Eigen::MatrixXd& values) {
            CsvWriter w(path(name), {"period", "rank_lo", "rank_hi", "n", column, "se"});
            for (const auto& b : rank_profile(values, ranks, 10))
                w.row({labels[static_cast<std::size_t>(b.group)], format_number(b.lo), format_number(b.hi - 1),
                       std::to_string(b.n), format_number(b.mean), format_number(b.se)});
            commit(w);
        };
        write_profile("fig6_beta_by_rank.csv", "mean_beta_plus", beta_bar);
        write_profile("figA8_skew_by_rank.csv", "mean_skew_exposure", gamma_bar);

        // Equal-weight long benchmark IR per period.
        const Eigen::VectorXd ew = returns_->returns().colwise().mean().transpose();
        std::vector<double> ew_log(static_cast<std::size_t>(ew.size()));
        if (!log1p_inplace(std::span<const double>(ew.data(), ew_log.size()), ew_log))
            throw ScoreError("equal-weight benchmark went bankrupt");
        std::vector<double> bench;
        for (const auto& p : periods) {
            const int b = returns_->interval_begin(p.first);
            const int end = returns_->interval_begin(p.last) + returns_->interval_length(p.last);
            bench.push_back(information_ratio_of(std::span<const double>(ew_log.data() + b, static_cast<std::size_t>(end - b))));
        }
        const std::vector<int> qs{1, 5, 10, 20};
        std::vector<std::string> header{"period", "benchmark_ir", "median_beta_plus", "n_below", "n_above"};
        for (int q : qs) {
            header.push_back("below_p_rank_le_" + std::to_string(q));
            header.push_back("above_p_rank_le_" + std::to_string(q));
        }
        CsvWriter t6(path("table6_median_split.csv"), header);
        for (const auto& row : median_split_table(beta_bar, ranks, labels, bench, qs)) {
            std::vector<std::string> cells{row.period, format_number(row.benchmark_ir), format_number(row.median_beta),
                                           std::to_string(row.n_below), std::to_string(row.n_above)};
            for (std::size_t j = 0; j < qs.size(); ++j) {
                cells.push_back(format_number(row.p_below[j]));
                cells.push_back(format_number(row.p_above[j]));
            }
            t6.row(cells);
        }
        commit(t6);
    }

    void write_manifest() {
        nlohmann::json m;
        m["version"] = kVersion;
        m["command"] = cfg_.command;
        m["seed"] = seed();
        m["desk_scale"] = cfg_.desk_scale;
        m["scale"] = {{"level_reps", scale_.level_reps},         {"level_boot", scale_.level_boot},
                      {"stylized_reps", scale_.stylized_reps},   {"bootstrap_reps", scale_.bootstrap_reps},
                      {"kernel_paths", scale_.kernel_paths},     {"msm_sims", scale_.msm_sims},
                      {"board_sims", scale_.board_sims},         {"pvalue_boot", scale_.pvalue_boot},
                      {"position_sims", scale_.position_sims}};
        m["model"] = {{"mu_r", cfg_.model.mu_r},       {"sigma_rr", cfg_.model.sigma_rr},
                      {"sigma_rr_prime", cfg_.model.sigma_rr_prime}, {"lambda", cfg_.model.lambda},
                      {"n_assets", cfg_.model.n_assets}, {"days_per_interval", cfg_.model.days_per_interval}};
        m["theta"] = {cfg_.theta.n_plus, cfg_.theta.n_zero, cfg_.theta.n_minus};
        m["n_teams"] = cfg_.n_teams;
        m["inputs"] = {{"prices", cfg_.prices ? cfg_.prices->filename().string() : ""},
                       {"submissions", cfg_.submissions ? cfg_.submissions->filename().string() : ""},
                       {"leaderboard", cfg_.leaderboard ? cfg_.leaderboard->filename().string() : ""}};
        m["stages"] = stages_;
        nlohmann::json checksums = nlohmann::json::object();
        for (const auto& f : files_) checksums[f] = file_checksum(path(f));
        m["checksums"] = checksums;
        manifest_ = m;
        const std::filesystem::path target = path("manifest.json");
        const std::filesystem::path tmp = target.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::trunc);
            out << m.dump(2) << '\n';
            if (!out) throw ConfigurationError("cannot write manifest");
        }
        std::filesystem::rename(tmp, target);
    }

    RunConfig cfg_;
    Scale scale_;
    std::optional<PricePanel> prices_;
    std::optional<ReturnPanel> returns_;
    std::optional<SubmissionPanel> submissions_;
    std::vector<WeightViolation> violations_;
    std::map<int, std::shared_ptr<const RankPolicy>> policies_;
    std::vector<std::string> files_;
    nlohmann::json stages_ = nlohmann::json::array();
    nlohmann::json manifest_;
};

} // namespace rankarena

// Command-line front end: ingestion, calibration, tests, policy solving,
// arena simulation and report generation.
#include <cstdio>
#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "rankarena/pipeline.hpp"

int main(int argc, char** argv) {
    using namespace rankarena;
    CLI::App app{"Rank-based tournament toolkit"};
    RunConfig cfg;
    std::string command = "reproduce-all";
    std::string prices, submissions, leaderboard, config_file, out = "out";
    std::uint64_t seed = 0;
    long reps = 0;
    std::vector<double> alphas;
    std::vector<int> qs;

    app.add_option("--cmd", command, "calibrate-market | calibrate-theta | test-sharpe | solve-policy | run-arena | "
                                     "empirics | reproduce-all")
        ->check(CLI::IsMember(RunConfig::commands()));
    app.add_option("--prices", prices, "CSV with date,asset_id,close")->check(CLI::ExistingFile);
    app.add_option("--submissions", submissions, "CSV with team_id,interval,asset_id,weight")->check(CLI::ExistingFile);
    app.add_option("--leaderboard", leaderboard, "CSV with team_id,interval,ir")->check(CLI::ExistingFile);
    app.add_option("--config", config_file, "key=value configuration file")->check(CLI::ExistingFile);
    app.add_option("--out", out, "output directory");
    auto* seed_opt = app.add_option("--seed", seed, "random seed (mandatory)");
    auto* reps_opt = app.add_option("--reps", reps, "arena replications")->check(CLI::PositiveNumber);
    app.add_option("--alpha", alphas, "test levels")->delimiter(',');
    app.add_option("--q", qs, "target ranks for the rank policy")->delimiter(',');
    auto* desk = app.add_flag("--desk-scale", "reduced Monte Carlo sizes");
    auto* strict = app.add_flag("--strict", "fail on weight-constraint violations");
    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_file.empty()) cfg.apply(load_config(config_file));
        cfg.command = command;
        if (!prices.empty()) cfg.prices = prices;
        if (!submissions.empty()) cfg.submissions = submissions;
        if (!leaderboard.empty()) cfg.leaderboard = leaderboard;
        if (app.count("--out") || !cfg.out.empty()) cfg.out = app.count("--out") ? out : cfg.out.string();
        if (seed_opt->count()) cfg.seed = seed;
        if (reps_opt->count()) cfg.reps = reps;
        if (!alphas.empty()) cfg.alphas = alphas;
        if (!qs.empty()) cfg.q_targets = qs;
        if (desk->count()) cfg.desk_scale = true;
        if (strict->count()) cfg.strict = true;

        Pipeline pipeline(cfg);
        pipeline.run();
        for (const auto& s : pipeline.manifest()["stages"]) {
            std::cout << s["stage"].get<std::string>() << ": " << s["status"].get<std::string>();
            if (s.contains("reason")) std::cout << " (" << s["reason"].get<std::string>() << ")";
            std::cout << '\n';
        }
        std::cout << "outputs in " << cfg.out.string() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

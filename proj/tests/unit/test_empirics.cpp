#include <cmath>

#include <gtest/gtest.h>

#include "rankarena/empirics.hpp"

using namespace rankarena;

TEST(BetaPlus, Examples) {
    EXPECT_EQ(beta_plus(Eigen::VectorXd::Constant(10, 0.1)), 1.0);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(100);
    w.head(38).setConstant(1.0 / 71);
    w.segment(38, 33).setConstant(-1.0 / 71);
    EXPECT_NEAR(beta_plus(w), 38.0 / 71, 1e-15);
    EXPECT_THROW(beta_plus(Eigen::VectorXd::Zero(3)), ParameterError);
}

TEST(BetaPlus, PropertyComplementAndScaleInvariance) {
    Engine rng(3);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> c(0.01, 50);
    for (int trial = 0; trial < 500; ++trial) {
        Eigen::VectorXd w(20);
        for (auto& v : w) v = z(rng);
        EXPECT_NEAR(beta_plus(w) + beta_minus(w), 1.0, 1e-14);
        EXPECT_NEAR(beta_plus(c(rng) * w), beta_plus(w), 1e-14);
    }
}

TEST(Skewness, SymmetricAndOneAssetCases) {
    const std::vector<double> sym{-2, -1, 0, 1, 2};
    EXPECT_NEAR(sample_skewness(sym), 0.0, 1e-15);
    const std::vector<double> skewed{0, 0, 0, 0, 10};
    EXPECT_GT(sample_skewness(skewed), 1.0);
    std::vector<double> skews{0.5, -1.0, 2.0};
    EXPECT_DOUBLE_EQ(skew_exposure(Eigen::Vector3d(0, 0.4, 0), skews), -1.0);
    EXPECT_THROW(sample_skewness(std::vector<double>{1, 1, 1}), ScoreError);
}

TEST(Skewness, SimulatedSymmetricReturnsAreNearZero) {
    const ReturnPanel p = sample_returns(MarketModel{}, 20000, 4);
    const auto s = asset_skewness(p);
    for (double v : s) EXPECT_LT(std::abs(v), 5 * std::sqrt(6.0 / 20000));
    EXPECT_LT(std::abs(skew_exposure(Eigen::VectorXd::Constant(100, 0.01), s)), 5 * std::sqrt(6.0 / 20000));
}

TEST(Skewness, MatchesDotProductOracle) {
    Engine rng(5);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd w(30);
        std::vector<double> s(30);
        for (auto& v : w) v = z(rng);
        for (auto& v : s) v = z(rng);
        double gross = 0, dot = 0;
        for (int i = 0; i < 30; ++i) gross += std::abs(w(i));
        for (int i = 0; i < 30; ++i) dot += w(i) * s[static_cast<std::size_t>(i)];
        EXPECT_NEAR(skew_exposure(w, s), dot / gross, 1e-12);
    }
}

TEST(RankChangeProfile, IdenticalFieldHasNoRankChanges) {
    Eigen::MatrixXi ranks = Eigen::MatrixXi::Constant(4, 6, 6);
    const Eigen::MatrixXd beta = Eigen::MatrixXd::Constant(4, 6, 0.75);
    const auto rows = rank_change_profile(ranks, beta);
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& r : rows) {
        EXPECT_EQ(r.mean, 0.0);
        EXPECT_EQ(r.n, 6);
        EXPECT_NEAR(r.lo, 0.7, 1e-12);
    }
}

TEST(RankChangeProfile, BinsByLongShare) {
    Eigen::MatrixXi ranks(2, 3);
    ranks << 1, 2, 3, 3, 2, 1;
    Eigen::MatrixXd beta(2, 3);
    beta << 0, 0, 0, 0.05, 0.95, 1.0;
    const auto rows = rank_change_profile(ranks, beta);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].mean, 2.0);  // team 1, beta 0.05
    EXPECT_EQ(rows[1].n, 2);       // beta 0.95 and 1.0 share the top bin
    EXPECT_EQ(rows[1].mean, 1.0);
}

TEST(MedianSplit, StrictBelowAndBalancedGroups) {
    Eigen::MatrixXd beta(1, 6);
    beta << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
    Eigen::MatrixXi ranks(1, 6);
    ranks << 1, 2, 6, 5, 3, 4;
    const auto rows = median_split_table(beta, ranks, {"1-12"}, {1.0}, {1, 5});
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].n_below, 3);
    EXPECT_EQ(rows[0].n_above, 3);
    EXPECT_NEAR(rows[0].p_below[0], 1.0 / 3, 1e-15);
    EXPECT_EQ(rows[0].p_above[0], 0.0);
    EXPECT_NEAR(rows[0].p_below[1], 2.0 / 3, 1e-15);
    EXPECT_EQ(rows[0].p_above[1], 1.0);
}

TEST(MedianSplit, IdenticalBetasGoAboveAndEmptyGroupIsNaN) {
    const Eigen::MatrixXd beta = Eigen::MatrixXd::Constant(1, 4, 0.8);
    Eigen::MatrixXi ranks(1, 4);
    ranks << 1, 2, 3, 4;
    const auto rows = median_split_table(beta, ranks, {"p"}, {}, {2});
    EXPECT_EQ(rows[0].n_below, 0);
    EXPECT_EQ(rows[0].n_above, 4);
    EXPECT_TRUE(std::isnan(rows[0].p_below[0]));
    EXPECT_EQ(rows[0].p_above[0], 0.5);
    EXPECT_TRUE(std::isnan(rows[0].benchmark_ir));
}

TEST(MedianSplit, PropertyGroupSizesDifferByAtMostOne) {
    Engine rng(8);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = 2 + trial % 40;
        Eigen::MatrixXd beta(1, k);
        Eigen::MatrixXi ranks(1, k);
        for (int j = 0; j < k; ++j) {
            beta(0, j) = u(rng);
            ranks(0, j) = j + 1;
        }
        const auto row = median_split_table(beta, ranks, {"p"}, {}, {1})[0];
        EXPECT_LE(std::abs(row.n_below - row.n_above), 1);
        EXPECT_EQ(row.n_below + row.n_above, k);
    }
}

TEST(Exposures, FromSubmissions) {
    SubmissionPanel s(2, 2, 3);
    s.set(0, 0, Eigen::Vector3d(0.5, -0.25, 0.25));
    s.set(1, 1, Eigen::Vector3d(0.0, 0.0, 0.0));
    const TeamExposure e = compute_exposures(s, {});
    EXPECT_DOUBLE_EQ(e.beta_plus(0, 0), 0.75);
    EXPECT_DOUBLE_EQ(e.beta_plus(1, 0), 0.75);  // carried forward
    EXPECT_TRUE(std::isnan(e.beta_plus(0, 1)));
    EXPECT_TRUE(std::isnan(e.beta_plus(1, 1)));  // zero exposure
    const auto means = mean_beta_by_interval(e.beta_plus);
    EXPECT_DOUBLE_EQ(means[1], 0.75);
    const Eigen::MatrixXd pm = TeamExposure::period_means(e.beta_plus, {Window{0, 1}});
    EXPECT_DOUBLE_EQ(pm(0, 0), 0.75);
    EXPECT_TRUE(std::isnan(pm(0, 1)));
}

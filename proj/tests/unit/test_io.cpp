#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "rankarena/io.hpp"

using namespace rankarena;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("rankarena_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string& name, const std::string& body) const {
        const fs::path p = dir_ / name;
        std::ofstream(p) << body;
        return p;
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }

    template <class F>
    static std::string error_of(F&& f) {
        try {
            f();
        } catch (const IngestionError& e) {
            return e.what();
        }
        return {};
    }

    fs::path dir_;
};

using Prices = TempDir;
using Submissions = TempDir;
using Files = TempDir;

} // namespace

TEST_F(Prices, TwoDaysGiveOneReturn) {
    const PricePanel p = ingest_prices(write("p.csv", "date,asset_id,close\n2022-01-03,A,100\n2022-01-04,A,101\n"));
    const ReturnPanel r = p.to_returns();
    ASSERT_EQ(r.n_days(), 1);
    EXPECT_NEAR(r.returns()(0, 0), 0.01, 1e-15);
    EXPECT_THROW(ingest_prices(write("q.csv", "date,asset_id,close\n2022-01-03,A,100\n")).to_returns(), IngestionError);
}

TEST_F(Prices, RowNumberedErrors) {
    EXPECT_NE(error_of([&] { ingest_prices(write("a.csv", "date,asset_id,close\n2022-01-04,A,1\n2022-01-03,A,1\n")); })
                  .find("row 3"),
              std::string::npos);
    EXPECT_NE(error_of([&] { ingest_prices(write("b.csv", "date,asset_id,close\n2022-01-03,A,0\n")); }).find("row 2"),
              std::string::npos);
    EXPECT_NE(error_of([&] { ingest_prices(write("c.csv", "date,asset_id,close\n2022-01-03,A,1\n2022-01-03,A,2\n")); })
                  .find("duplicate"),
              std::string::npos);
    EXPECT_NE(error_of([&] {
                  ingest_prices(write("d.csv", "date,asset_id,close\n2022-01-03,A,1\n2022-01-03,B,1\n2022-01-04,A,1\n"));
              }).find("ragged"),
              std::string::npos);
    EXPECT_NE(error_of([&] { ingest_prices(write("e.csv", "date,asset_id,close\n2022-01-03,A\n")); }).find("row 2"),
              std::string::npos);
    EXPECT_NE(error_of([&] { ingest_prices(write("f.csv", "date,asset_id,close\n2022-01-03,A,abc\n")); }).find("row 2"),
              std::string::npos);
}

TEST_F(Prices, ExportRoundTripIsBitIdentical) {
    PricePanel p;
    p.dates = {"2022-01-03", "2022-01-04", "2022-01-05"};
    p.asset_ids = {"AAA", "BBB"};
    p.close.resize(2, 3);
    p.close << 100.0 / 3.0, 1e-7 + 1.0, 3.14159265358979, 2.0 / 7.0, 12345.678901234567, 0.1 + 0.2;
    write_prices(dir_ / "out.csv", p);
    const PricePanel back = ingest_prices(dir_ / "out.csv");
    EXPECT_EQ(back.dates, p.dates);
    EXPECT_EQ(back.asset_ids, p.asset_ids);
    EXPECT_TRUE(back.close == p.close);
    write_prices(dir_ / "again.csv", back);
    EXPECT_EQ(slurp(dir_ / "out.csv"), slurp(dir_ / "again.csv"));
}

TEST_F(Submissions, SingleSubmissionCarriesForward) {
    const auto s = ingest_submissions(write("s.csv", "team_id,interval,asset_id,weight\nT1,1,A,0.5\nT1,1,B,-0.5\n"),
                                      {"A", "B"});
    EXPECT_TRUE(s.violations.empty());
    const SubmissionPanel filled = s.panel.carried_forward();
    for (int m = 0; m < 12; ++m) {
        ASSERT_TRUE(filled.submitted(0, m));
        EXPECT_EQ(filled.weights(0, m), Eigen::Vector2d(0.5, -0.5));
    }
    EXPECT_EQ(s.panel.team_ids().front(), "T1");
}

TEST_F(Submissions, GrossExposureViolations) {
    const fs::path p = write("s.csv", "team_id,interval,asset_id,weight\nT1,2,A,0.05\nT1,2,B,0.05\nT2,1,A,1\n");
    const auto s = ingest_submissions(p, {"A", "B"});
    ASSERT_EQ(s.violations.size(), 1u);
    EXPECT_EQ(s.violations[0].team_id, "T1");
    EXPECT_EQ(s.violations[0].interval, 2);
    EXPECT_NEAR(s.violations[0].gross, 0.1, 1e-15);
    EXPECT_THROW(ingest_submissions(p, {"A", "B"}, 12, true), IngestionError);
}

TEST_F(Submissions, MalformedRows) {
    EXPECT_NE(error_of([&] { ingest_submissions(write("a.csv", "team_id,interval,asset_id,weight\nT,13,A,1\n"), {"A"}); })
                  .find("row 2"),
              std::string::npos);
    EXPECT_NE(error_of([&] { ingest_submissions(write("b.csv", "team_id,interval,asset_id,weight\nT,1,Z,1\n"), {"A"}); })
                  .find("unknown asset"),
              std::string::npos);
    EXPECT_NE(error_of([&] {
                  ingest_submissions(write("c.csv", "team_id,interval,asset_id,weight\nT,1,A,1\nT,1,A,1\n"), {"A"});
              }).find("row 3"),
              std::string::npos);
}

TEST_F(Submissions, DuplicateDummyTeamsMerge) {
    SubmissionPanel s(16, 12, 4);
    const Eigen::VectorXd ew = Eigen::VectorXd::Constant(4, 0.25);
    for (int k = 0; k < 14; ++k)
        for (int m = 0; m < 12; ++m) s.set(k, m, ew);
    s.set(14, 0, Eigen::Vector4d(0.5, -0.5, 0, 0));
    s.set(15, 0, Eigen::Vector4d(0.25, 0.25, 0.25, 0.2));
    const MergedTeams merged = merge_duplicate_teams(s);
    EXPECT_EQ(merged.n_merged, 13);
    EXPECT_EQ(merged.panel.n_teams(), 3);
}

TEST_F(Submissions, ExportRoundTrip) {
    SubmissionPanel s(2, 3, 2);
    s.set(0, 0, Eigen::Vector2d(1.0 / 3, -1.0 / 7));
    s.set(1, 2, Eigen::Vector2d(0.5, 0.5));
    s.set_team_ids({"alpha", "beta"});
    write_submissions(dir_ / "s.csv", s, {"A", "B"});
    const auto back = ingest_submissions(dir_ / "s.csv", {"A", "B"}, 3);
    EXPECT_TRUE(back.panel.interval(0) == s.interval(0));
    EXPECT_TRUE(back.panel.interval(2) == s.interval(2));
    EXPECT_FALSE(back.panel.submitted(1, 1));
}

TEST_F(Files, ConfigParsing) {
    const auto kv = load_config(write("c.cfg", "# model\nmu_r = 0.0004  # daily\n\nseed=7\n"));
    EXPECT_EQ(kv.size(), 2u);
    EXPECT_EQ(kv.at("mu_r"), "0.0004");
    EXPECT_EQ(kv.at("seed"), "7");
    EXPECT_THROW(load_config(write("d.cfg", "no equals sign\n")), ConfigurationError);
    EXPECT_THROW(load_config(dir_ / "missing.cfg"), ConfigurationError);
}

TEST_F(Files, WriterIsAtomic) {
    const fs::path target = dir_ / "t.csv";
    {
        CsvWriter w(target, {"a"});
        w.row({"1"});
        EXPECT_FALSE(fs::exists(target));
    }
    EXPECT_FALSE(fs::exists(target));
    EXPECT_FALSE(fs::exists(dir_ / "t.csv.tmp"));
    CsvWriter w(target, {"a", "b"});
    w.row({"1", "2"});
    w.commit();
    EXPECT_EQ(slurp(target), "a,b\n1,2\n");
}

TEST_F(Files, LeaderboardReader) {
    const Eigen::MatrixXd b = read_leaderboard(write("l.csv", "team_id,interval,ir\nx,1,0.5\ny,2,-1.25\n"), 3);
    ASSERT_EQ(b.rows(), 3);
    ASSERT_EQ(b.cols(), 2);
    EXPECT_EQ(b(0, 0), 0.5);
    EXPECT_EQ(b(1, 1), -1.25);
    EXPECT_TRUE(std::isnan(b(2, 0)));
}

TEST(Format, SpecialValues) {
    EXPECT_EQ(format_number(std::nan("")), "NaN");
    EXPECT_EQ(format_number(HUGE_VAL), "Inf");
    EXPECT_EQ(format_number(-HUGE_VAL), "-Inf");
    EXPECT_EQ(format_number(0.5), "0.5");
    EXPECT_EQ(std::stod(format_exact(0.1 + 0.2)), 0.1 + 0.2);
}

TEST(Csv, QuotedFields) {
    const auto f = split_csv_line("a, \"b,c\" ,\"d\"\r");
    ASSERT_EQ(f.size(), 3u);
    EXPECT_EQ(f[1], "b,c");
    EXPECT_EQ(f[2], "d");
}

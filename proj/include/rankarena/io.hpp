#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "market.hpp"
#include "portfolio.hpp"
#include "scoring.hpp"

namespace rankarena {

/// Fixed report formatting: 6 significant digits; NaN and infinities spelled out.
inline std::string format_number(double v, int digits = 6) {
    if (std::isnan(v)) return "NaN";
    if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

/// Round-trip formatting for data exporters.
inline std::string format_exact(double v) { return format_number(v, 17); }

/// Splits a CSV line on commas, stripping surrounding whitespace and quotes.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    out.push_back(field);
    for (auto& f : out) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
    }
    return out;
}

/// Rows of a CSV file with a header. Line numbers are 1-based file lines.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> line_numbers;

    std::size_t column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw IngestionError("missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open " + path.string());
    CsvTable t;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size())
            throw IngestionError("row " + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                                 " fields, found " + std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
        t.line_numbers.push_back(line_no);
    }
    if (t.header.empty()) throw IngestionError(path.string() + " is empty");
    return t;
}

inline double parse_double(const std::string& s, int line_no, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IngestionError("row " + std::to_string(line_no) + ": invalid " + what + " '" + s + "'");
    }
}

inline int parse_int(const std::string& s, int line_no, const char* what) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IngestionError("row " + std::to_string(line_no) + ": invalid " + what + " '" + s + "'");
    }
}

/// Writes a CSV atomically: rows go to a temporary sibling file that is
/// renamed into place by commit(). An uncommitted writer removes its file.
class CsvWriter {
public:
    CsvWriter(std::filesystem::path path, const std::vector<std::string>& header)
        : path_(std::move(path)), tmp_(path_.string() + ".tmp") {
        if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
        out_.open(tmp_, std::ios::binary | std::ios::trunc);
        if (!out_) throw ConfigurationError("cannot write " + path_.string());
        row(header);
    }
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;
    ~CsvWriter() {
        if (!committed_) {
            out_.close();
            std::error_code ec;
            std::filesystem::remove(tmp_, ec);
        }
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << fields[i];
        }
        out_ << '\n';
    }

    const std::filesystem::path& path() const { return path_; }

    void commit() {
        out_.close();
        if (!out_) throw ConfigurationError("failed writing " + path_.string());
        std::filesystem::rename(tmp_, path_);
        committed_ = true;
    }

private:
    std::filesystem::path path_;
    std::filesystem::path tmp_;
    std::ofstream out_;
    bool committed_ = false;
};

/// Closing prices, one row per asset, one column per date.
struct PricePanel {
    std::vector<std::string> dates;
    std::vector<std::string> asset_ids;
    Eigen::MatrixXd close;  // I x D

    /// Simple returns S_t / S_{t-1} - 1, I x (D - 1).
    ReturnPanel to_returns(int days_per_interval = 20) const {
        if (close.cols() < 2) throw IngestionError("need at least two dates to form returns");
        const Eigen::Index d = close.cols();
        Eigen::MatrixXd r = close.rightCols(d - 1).array() / close.leftCols(d - 1).array() - 1.0;
        return ReturnPanel(std::move(r), days_per_interval);
    }
};

/// Reads date,asset_id,close. Dates must be non-decreasing and every date must
/// quote the same asset set.
inline PricePanel ingest_prices(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    const std::size_t c_date = t.column("date"), c_asset = t.column("asset_id"), c_close = t.column("close");
    PricePanel p;
    std::map<std::string, std::size_t> asset_index;
    std::vector<std::map<std::string, double>> by_date;
    std::vector<int> first_line;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const int line = t.line_numbers[r];
        const std::string& date = t.rows[r][c_date];
        const std::string& asset = t.rows[r][c_asset];
        const double v = parse_double(t.rows[r][c_close], line, "close");
        if (!(v > 0.0) || !std::isfinite(v)) throw IngestionError("row " + std::to_string(line) + ": nonpositive price");
        if (p.dates.empty() || date != p.dates.back()) {
            if (!p.dates.empty() && date < p.dates.back())
                throw IngestionError("row " + std::to_string(line) + ": dates are not sorted");
            p.dates.push_back(date);
            by_date.emplace_back();
            first_line.push_back(line);
        }
        if (!by_date.back().emplace(asset, v).second)
            throw IngestionError("row " + std::to_string(line) + ": duplicate price for asset " + asset);
        if (!asset_index.count(asset)) {
            asset_index.emplace(asset, p.asset_ids.size());
            p.asset_ids.push_back(asset);
        }
    }
    if (p.dates.empty()) throw IngestionError("no price rows");
    p.close.resize(static_cast<Eigen::Index>(p.asset_ids.size()), static_cast<Eigen::Index>(p.dates.size()));
    for (std::size_t d = 0; d < p.dates.size(); ++d) {
        if (by_date[d].size() != p.asset_ids.size())
            throw IngestionError("row " + std::to_string(first_line[d]) + ": date " + p.dates[d] + " quotes " +
                                 std::to_string(by_date[d].size()) + " of " + std::to_string(p.asset_ids.size()) +
                                 " assets (ragged panel)");
        for (const auto& [asset, v] : by_date[d])
            p.close(static_cast<Eigen::Index>(asset_index.at(asset)), static_cast<Eigen::Index>(d)) = v;
    }
    return p;
}

inline void write_prices(const std::filesystem::path& path, const PricePanel& p) {
    CsvWriter w(path, {"date", "asset_id", "close"});
    for (std::size_t d = 0; d < p.dates.size(); ++d)
        for (std::size_t i = 0; i < p.asset_ids.size(); ++i)
            w.row({p.dates[d], p.asset_ids[i],
                   format_exact(p.close(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)))});
    w.commit();
}

/// Gross-exposure violation of one submission.
struct WeightViolation {
    std::string team_id;
    int interval;  // 1-based
    double gross;
};

struct IngestedSubmissions {
    SubmissionPanel panel;  // as submitted; scoring applies carry-forward
    std::vector<WeightViolation> violations;
};

/// Reads team_id,interval,asset_id,weight (intervals 1-based). Assets absent
/// from a submission get weight zero. Gross exposure outside [0.25, 1] is
/// reported, or raised when strict.
inline IngestedSubmissions ingest_submissions(const std::filesystem::path& path, const std::vector<std::string>& asset_ids,
                                              int n_intervals = 12, bool strict = false) {
    const CsvTable t = read_csv(path);
    const std::size_t c_team = t.column("team_id"), c_m = t.column("interval"), c_asset = t.column("asset_id"),
                      c_w = t.column("weight");
    std::unordered_map<std::string, int> asset_index;
    for (std::size_t i = 0; i < asset_ids.size(); ++i) asset_index.emplace(asset_ids[i], static_cast<int>(i));
    std::vector<std::string> teams;
    std::unordered_map<std::string, int> team_index;
    std::map<std::pair<int, int>, Eigen::VectorXd> subs;
    std::set<std::tuple<int, int, int>> seen;
    const Eigen::Index n_assets = static_cast<Eigen::Index>(asset_ids.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const int line = t.line_numbers[r];
        const auto& row = t.rows[r];
        const int m = parse_int(row[c_m], line, "interval");
        if (m < 1 || m > n_intervals) throw IngestionError("row " + std::to_string(line) + ": interval out of range");
        const auto a = asset_index.find(row[c_asset]);
        if (a == asset_index.end()) throw IngestionError("row " + std::to_string(line) + ": unknown asset " + row[c_asset]);
        const double w = parse_double(row[c_w], line, "weight");
        if (!std::isfinite(w)) throw IngestionError("row " + std::to_string(line) + ": non-finite weight");
        auto [it, added] = team_index.emplace(row[c_team], static_cast<int>(teams.size()));
        if (added) teams.push_back(row[c_team]);
        if (!seen.emplace(it->second, m, a->second).second)
            throw IngestionError("row " + std::to_string(line) + ": duplicate weight for team " + row[c_team]);
        auto& vec = subs.try_emplace({it->second, m - 1}, Eigen::VectorXd::Zero(n_assets)).first->second;
        vec(a->second) = w;
    }
    if (teams.empty()) throw IngestionError("no submission rows");
    IngestedSubmissions out{SubmissionPanel(static_cast<int>(teams.size()), n_intervals, static_cast<int>(n_assets)), {}};
    out.panel.set_team_ids(teams);
    for (const auto& [key, w] : subs) {
        if (!validate_weights(w)) {
            WeightViolation v{teams[static_cast<std::size_t>(key.first)], key.second + 1, gross_exposure(w)};
            if (strict)
                throw IngestionError("team " + v.team_id + " interval " + std::to_string(v.interval) +
                                     ": gross exposure " + format_number(v.gross) + " outside [0.25, 1]");
            out.violations.push_back(v);
        }
        out.panel.set(key.first, key.second, w);
    }
    return out;
}

inline void write_submissions(const std::filesystem::path& path, const SubmissionPanel& s,
                              const std::vector<std::string>& asset_ids) {
    CsvWriter w(path, {"team_id", "interval", "asset_id", "weight"});
    for (int k = 0; k < s.n_teams(); ++k)
        for (int m = 0; m < s.n_intervals(); ++m)
            if (s.submitted(k, m))
                for (int i = 0; i < s.n_assets(); ++i)
                    w.row({s.team_ids()[static_cast<std::size_t>(k)], std::to_string(m + 1),
                           asset_ids.at(static_cast<std::size_t>(i)), format_exact(s.interval(m)(k, i))});
    w.commit();
}

/// Teams whose submissions are bitwise identical to another team's (for
/// example copies of an equal-weight dummy) are merged into one.
struct MergedTeams {
    SubmissionPanel panel;
    int n_merged = 0;
};

inline MergedTeams merge_duplicate_teams(const SubmissionPanel& s) {
    const std::vector<int> keep = s.distinct_teams();
    return {s.select(keep), s.n_teams() - static_cast<int>(keep.size())};
}

/// key = value configuration; '#' starts a comment.
inline std::map<std::string, std::string> load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open config " + path.string());
    std::map<std::string, std::string> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigurationError("config line " + std::to_string(line_no) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

/// Observed per-interval IR leaderboard, M x K, from team_id,interval,ir rows.
inline Eigen::MatrixXd read_leaderboard(const std::filesystem::path& path, int n_intervals = 12) {
    const CsvTable t = read_csv(path);
    const std::size_t c_team = t.column("team_id"), c_m = t.column("interval"), c_ir = t.column("ir");
    std::unordered_map<std::string, int> team_index;
    std::vector<std::tuple<int, int, double>> cells;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const int line = t.line_numbers[r];
        const int m = parse_int(t.rows[r][c_m], line, "interval");
        if (m < 1 || m > n_intervals) throw IngestionError("row " + std::to_string(line) + ": interval out of range");
        const int k = team_index.emplace(t.rows[r][c_team], static_cast<int>(team_index.size())).first->second;
        cells.emplace_back(m - 1, k, parse_double(t.rows[r][c_ir], line, "ir"));
    }
    Eigen::MatrixXd board = Eigen::MatrixXd::Constant(n_intervals, static_cast<Eigen::Index>(team_index.size()),
                                                      std::numeric_limits<double>::quiet_NaN());
    for (const auto& [m, k, v] : cells) board(m, k) = v;
    return board;
}

} // namespace rankarena

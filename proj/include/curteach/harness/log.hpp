#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "curteach/errors.hpp"
#include "curteach/numeric.hpp"

namespace curteach::harness {

inline constexpr int kLogSchemaVersion = 1;
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// One evaluation row. Missing numeric fields are NaN and serialize as empty cells.
struct LogRow {
    std::size_t t = 0;
    /// Cumulative demonstrations given to the learner when the row was taken.
    std::size_t demos = 0;
    /// Chosen candidate (car task index 0..39); -1 when nothing was chosen.
    long long choice = -1;
    /// Car task type "T0".."T7"; empty otherwise.
    std::string task_type;
    double log_psi_e = kMissing;
    double log_psi_l = kMissing;
    double theta_dist = kMissing;
    double value = kMissing;
    std::vector<double> extra;

    bool operator==(const LogRow& o) const {
        auto same = [](double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; };
        if (t != o.t || demos != o.demos || choice != o.choice || task_type != o.task_type) return false;
        if (!same(log_psi_e, o.log_psi_e) || !same(log_psi_l, o.log_psi_l) || !same(theta_dist, o.theta_dist) ||
            !same(value, o.value) || extra.size() != o.extra.size()) {
            return false;
        }
        for (std::size_t i = 0; i < extra.size(); ++i) {
            if (!same(extra[i], o.extra[i])) return false;
        }
        return true;
    }
};

/// Per-run log. CSV layout:
///   # curteach-log v1 <kind> <strategy> seed=<n>
///   t,demos,choice,task_type,log_psi_e,log_psi_l,theta_dist,value[,extra...]
///   <rows>
struct ExperimentLog {
    std::string kind;
    std::string strategy;
    std::uint64_t seed = 0;
    std::vector<std::string> extra_columns;
    std::vector<LogRow> rows;

    static constexpr const char* kCoreColumns[] = {"t", "demos", "choice", "task_type",
                                                   "log_psi_e", "log_psi_l", "theta_dist", "value"};

    void append(LogRow row) {
        if (!rows.empty() && row.t <= rows.back().t) throw ValidationError("log rows must be strictly increasing in t");
        if (row.extra.size() != extra_columns.size()) throw ValidationError("log row has the wrong number of extra columns");
        rows.push_back(std::move(row));
    }

    std::vector<double> column(const std::string& name) const {
        std::vector<double> out;
        out.reserve(rows.size());
        for (std::size_t c = 0; c < extra_columns.size(); ++c) {
            if (extra_columns[c] != name) continue;
            for (const auto& r : rows) out.push_back(r.extra[c]);
            return out;
        }
        for (const auto& r : rows) {
            if (name == "t") out.push_back(static_cast<double>(r.t));
            else if (name == "demos") out.push_back(static_cast<double>(r.demos));
            else if (name == "choice") out.push_back(static_cast<double>(r.choice));
            else if (name == "log_psi_e") out.push_back(r.log_psi_e);
            else if (name == "log_psi_l") out.push_back(r.log_psi_l);
            else if (name == "theta_dist") out.push_back(r.theta_dist);
            else if (name == "value") out.push_back(r.value);
            else throw ValidationError("unknown log column '" + name + "'");
        }
        return out;
    }
};

namespace detail {

inline std::string cell(double x) { return std::isnan(x) ? std::string() : format_double(x); }

inline double parse_cell(const std::string& s) { return s.empty() ? kMissing : parse_double(s); }

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace detail

inline void write_log_csv(std::ostream& out, const ExperimentLog& log) {
    out << "# curteach-log v" << kLogSchemaVersion << ' ' << log.kind << ' ' << log.strategy << " seed=" << log.seed
        << '\n';
    bool first = true;
    for (const char* c : ExperimentLog::kCoreColumns) {
        out << (first ? "" : ",") << c;
        first = false;
    }
    for (const auto& c : log.extra_columns) out << ',' << c;
    out << '\n';
    for (const auto& r : log.rows) {
        out << r.t << ',' << r.demos << ',';
        if (r.choice >= 0) out << r.choice;
        out << ',' << r.task_type << ',' << detail::cell(r.log_psi_e) << ',' << detail::cell(r.log_psi_l) << ','
            << detail::cell(r.theta_dist) << ',' << detail::cell(r.value);
        for (double x : r.extra) out << ',' << detail::cell(x);
        out << '\n';
    }
}

inline ExperimentLog read_log_csv(std::istream& in) {
    ExperimentLog log;
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty log file");
    {
        std::istringstream h(line);
        std::string hash, magic, version, seed;
        h >> hash >> magic >> version >> log.kind >> log.strategy >> seed;
        if (hash != "#" || magic != "curteach-log") throw IoError("not a curteach log");
        if (version != "v" + std::to_string(kLogSchemaVersion)) throw IoError("unsupported log schema " + version);
        if (seed.rfind("seed=", 0) != 0) throw IoError("log header lacks a seed");
        const std::string digits = seed.substr(5);
        const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), log.seed);
        if (ec != std::errc() || end != digits.data() + digits.size()) throw IoError("bad seed in log header");
    }
    if (!std::getline(in, line)) throw IoError("log lacks a column header");
    const auto header = detail::split_csv(line);
    constexpr std::size_t core = std::size(ExperimentLog::kCoreColumns);
    if (header.size() < core) throw IoError("log column header too short");
    for (std::size_t i = 0; i < core; ++i) {
        if (header[i] != ExperimentLog::kCoreColumns[i]) throw IoError("unexpected log column '" + header[i] + "'");
    }
    log.extra_columns.assign(header.begin() + core, header.end());
    try {
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto f = detail::split_csv(line);
            if (f.size() != header.size()) throw IoError("log row has " + std::to_string(f.size()) + " fields");
            LogRow r;
            r.t = static_cast<std::size_t>(parse_int(f[0]));
            r.demos = static_cast<std::size_t>(parse_int(f[1]));
            r.choice = f[2].empty() ? -1 : parse_int(f[2]);
            r.task_type = f[3];
            r.log_psi_e = detail::parse_cell(f[4]);
            r.log_psi_l = detail::parse_cell(f[5]);
            r.theta_dist = detail::parse_cell(f[6]);
            r.value = detail::parse_cell(f[7]);
            for (std::size_t i = core; i < f.size(); ++i) r.extra.push_back(detail::parse_cell(f[i]));
            log.append(std::move(r));
        }
    } catch (const ValidationError& e) {
        throw IoError(std::string("malformed log: ") + e.what());
    }
    return log;
}

inline void save_log(const std::filesystem::path& path, const ExperimentLog& log) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    write_log_csv(out, log);
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline ExperimentLog load_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    return read_log_csv(in);
}

/// Mean and population standard deviation across runs, row by row. Runs must
/// share the same t grid.
struct CurveSummary {
    std::vector<double> x;
    std::vector<double> mean;
    std::vector<double> stddev;
};

inline CurveSummary summarize(const std::vector<ExperimentLog>& runs, const std::string& column = "value",
                              const std::string& x_column = "demos") {
    CurveSummary s;
    if (runs.empty()) return s;
    const std::size_t n = runs.front().rows.size();
    for (const auto& r : runs) {
        if (r.rows.size() != n) throw ValidationError("summarize: runs have different lengths");
    }
    s.x = runs.front().column(x_column);
    s.mean.assign(n, 0.0);
    s.stddev.assign(n, 0.0);
    std::vector<std::vector<double>> cols;
    for (const auto& r : runs) cols.push_back(r.column(column));
    const double k = static_cast<double>(runs.size());
    for (std::size_t i = 0; i < n; ++i) {
        double m = 0.0;
        for (const auto& c : cols) m += c[i];
        m /= k;
        double v = 0.0;
        for (const auto& c : cols) v += (c[i] - m) * (c[i] - m);
        s.mean[i] = m;
        s.stddev[i] = std::sqrt(v / k);
    }
    return s;
}

inline void write_summary_csv(std::ostream& out, const std::vector<std::pair<std::string, CurveSummary>>& curves) {
    out << "# curteach-summary v" << kLogSchemaVersion << '\n' << "strategy,x,mean,stddev\n";
    for (const auto& [name, c] : curves) {
        for (std::size_t i = 0; i < c.x.size(); ++i) {
            out << name << ',' << detail::cell(c.x[i]) << ',' << detail::cell(c.mean[i]) << ','
                << detail::cell(c.stddev[i]) << '\n';
        }
    }
}

}  // namespace curteach::harness

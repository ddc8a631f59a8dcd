#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "curteach/harness/log.hpp"
#include "curteach/harness/runner.hpp"

namespace curteach::harness {

/// Standalone SVG charts. Every data mark carries data-* attributes with the
/// logged values so that a plot can be checked against its source log.
namespace svg {

inline constexpr double kWidth = 640, kHeight = 400, kLeft = 64, kRight = 150, kTop = 36, kBottom = 48;

inline const char* color(std::size_t i) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};
    return palette[i % std::size(palette)];
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string num(double x) {
    std::ostringstream s;
    s.precision(6);
    s << x;
    return s.str();
}

struct Frame {
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

    void include(double x, double y) {
        if (!std::isfinite(x) || !std::isfinite(y)) return;
        if (empty) {
            x0 = x1 = x;
            y0 = y1 = y;
            empty = false;
            return;
        }
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
    }

    void pad() {
        if (x1 <= x0) { x0 -= 0.5; x1 += 0.5; }
        if (y1 <= y0) { y0 -= 0.5; y1 += 0.5; }
        const double dy = 0.05 * (y1 - y0);
        y0 -= dy;
        y1 += dy;
    }

    double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
    double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }

    bool empty = true;
};

inline void open(std::ostringstream& o, const std::string& title, const std::string& xlabel, const std::string& ylabel,
                 const Frame& f) {
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << "</text>\n";
    const double bx = kLeft, by = kTop, bw = kWidth - kLeft - kRight, bh = kHeight - kTop - kBottom;
    o << "<rect x=\"" << bx << "\" y=\"" << by << "\" width=\"" << bw << "\" height=\"" << bh
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0, yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
        o << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">"
          << num(xv) << "</text>\n";
        o << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(f.py(yv) + 4) << "\" text-anchor=\"end\">" << num(yv)
          << "</text>\n";
    }
    o << "<text x=\"" << kLeft + bw / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">" << escape(xlabel)
      << "</text>\n";
    o << "<text x=\"14\" y=\"" << kTop + bh / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << kTop + bh / 2
      << ")\">" << escape(ylabel) << "</text>\n";
}

inline void legend(std::ostringstream& o, std::size_t i, const std::string& name) {
    const double y = kTop + 14 + 18 * static_cast<double>(i);
    o << "<rect x=\"" << kWidth - kRight + 12 << "\" y=\"" << y - 9 << "\" width=\"12\" height=\"12\" fill=\"" << color(i)
      << "\"/><text x=\"" << kWidth - kRight + 30 << "\" y=\"" << y + 1 << "\">" << escape(name) << "</text>\n";
}

}  // namespace svg

/// Seed-mean curves with a mean +/- stddev band per series. A one-point
/// series is drawn as a single marker with no band.
inline std::string curves_svg(const std::vector<std::pair<std::string, CurveSummary>>& curves, const std::string& title,
                              const std::string& xlabel, const std::string& ylabel) {
    svg::Frame f;
    for (const auto& [name, c] : curves) {
        for (std::size_t i = 0; i < c.x.size(); ++i) {
            f.include(c.x[i], c.mean[i] - c.stddev[i]);
            f.include(c.x[i], c.mean[i] + c.stddev[i]);
        }
    }
    f.pad();
    std::ostringstream o;
    svg::open(o, title, xlabel, ylabel, f);
    for (std::size_t k = 0; k < curves.size(); ++k) {
        const auto& [name, c] = curves[k];
        const char* col = svg::color(k);
        svg::legend(o, k, name);
        std::vector<std::size_t> pts;
        for (std::size_t i = 0; i < c.x.size(); ++i) {
            if (std::isfinite(c.x[i]) && std::isfinite(c.mean[i])) pts.push_back(i);
        }
        if (pts.empty()) continue;
        if (pts.size() == 1) {
            const auto i = pts[0];
            o << "<circle class=\"point\" data-series=\"" << svg::escape(name) << "\" data-x=\"" << svg::num(c.x[i])
              << "\" data-mean=\"" << svg::num(c.mean[i]) << "\" cx=\"" << svg::num(f.px(c.x[i])) << "\" cy=\""
              << svg::num(f.py(c.mean[i])) << "\" r=\"4\" fill=\"" << col << "\"/>\n";
            continue;
        }
        double width = 0.0;
        for (auto i : pts) width = std::max(width, 2.0 * c.stddev[i]);
        o << "<polygon class=\"band\" data-series=\"" << svg::escape(name) << "\" data-max-width=\"" << svg::num(width)
          << "\" fill=\"" << col << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
        for (auto i : pts) o << svg::num(f.px(c.x[i])) << ',' << svg::num(f.py(c.mean[i] + c.stddev[i])) << ' ';
        for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
            o << svg::num(f.px(c.x[*it])) << ',' << svg::num(f.py(c.mean[*it] - c.stddev[*it])) << ' ';
        }
        o << "\"/>\n";
        o << "<polyline class=\"mean\" data-series=\"" << svg::escape(name) << "\" fill=\"none\" stroke=\"" << col
          << "\" stroke-width=\"1.5\" points=\"";
        for (auto i : pts) o << svg::num(f.px(c.x[i])) << ',' << svg::num(f.py(c.mean[i])) << ' ';
        o << "\"/>\n";
    }
    o << "</svg>\n";
    return o.str();
}

/// Curriculum plot of a car run: one marker per teaching step at (t, task type).
inline std::string task_type_scatter_svg(const ExperimentLog& log, const std::string& title) {
    svg::Frame f;
    f.include(0, 0);
    f.include(static_cast<double>(log.rows.empty() ? 1 : log.rows.back().t), 7);
    f.pad();
    std::ostringstream o;
    svg::open(o, title, "t", "task type", f);
    for (const auto& r : log.rows) {
        if (r.task_type.size() < 2 || r.task_type[0] != 'T') continue;
        const int k = std::stoi(r.task_type.substr(1));
        o << "<circle class=\"pick\" data-t=\"" << r.t << "\" data-type=\"" << svg::escape(r.task_type) << "\" data-choice=\""
          << r.choice << "\" cx=\"" << svg::num(f.px(static_cast<double>(r.t))) << "\" cy=\"" << svg::num(f.py(k))
          << "\" r=\"2.5\" fill=\"" << svg::color(static_cast<std::size_t>(k)) << "\"/>\n";
    }
    o << "</svg>\n";
    return o.str();
}

/// Curriculum plot of a grid run: the normalized moving-average task features.
inline std::string feature_lines_svg(const ExperimentLog& log, const std::string& title) {
    std::vector<std::pair<std::string, CurveSummary>> series;
    const auto x = log.column("demos");
    for (const auto& name : log.extra_columns) {
        if (name.rfind("ma_", 0) != 0) continue;
        CurveSummary c;
        const auto y = log.column(name);
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (!std::isfinite(y[i])) continue;
            c.x.push_back(x[i]);
            c.mean.push_back(y[i]);
            c.stddev.push_back(0.0);
        }
        series.emplace_back(name.substr(3), std::move(c));
    }
    return curves_svg(series, title, "demonstrations", "normalized feature (moving average)");
}

/// Writes reward.svg over all strategies, plus one curriculum plot per strategy
/// (seed 0): task-type scatter for car runs, feature lines for grid runs.
inline std::vector<std::filesystem::path> emit_plots(const std::vector<StrategyRuns>& runs,
                                                     const std::filesystem::path& out) {
    std::vector<std::filesystem::path> written;
    std::vector<std::pair<std::string, CurveSummary>> curves;
    for (const auto& r : runs) {
        if (r.logs.empty()) continue;
        if (r.logs.front().rows.empty()) throw ValidationError("cannot plot an empty log");
        curves.emplace_back(strategy_name(r.strategy), summarize(r.logs));
    }
    if (curves.empty()) throw ValidationError("nothing to plot");
    std::filesystem::create_directories(out);
    write_text(out / "reward.svg", curves_svg(curves, "reward", "demonstrations", "reward"));
    written.push_back(out / "reward.svg");
    for (const auto& r : runs) {
        if (r.logs.empty()) continue;
        const auto& log = r.logs.front();
        const std::string name = strategy_name(r.strategy);
        const auto path = out / ("curriculum_" + name + ".svg");
        if (log.kind == mode_name(Mode::TeacherCentric)) {
            write_text(path, task_type_scatter_svg(log, "curriculum " + name));
        } else {
            write_text(path, feature_lines_svg(log, "curriculum " + name));
        }
        written.push_back(path);
    }
    return written;
}

/// Loads <dir>/<strategy>/seed_<i>.csv for every strategy directory present.
inline std::vector<StrategyRuns> load_runs(const std::filesystem::path& dir) {
    std::vector<StrategyRuns> runs;
    for (Strategy s : {Strategy::Cur, Strategy::CurT, Strategy::CurL, Strategy::Agn, Strategy::Omn, Strategy::Bbox,
                       Strategy::Scot}) {
        const auto sub = dir / strategy_name(s);
        if (!std::filesystem::is_directory(sub)) continue;
        StrategyRuns r{s, {}};
        for (std::size_t i = 0; std::filesystem::exists(log_path(dir, s, i)); ++i) r.logs.push_back(load_log(log_path(dir, s, i)));
        if (!r.logs.empty()) runs.push_back(std::move(r));
    }
    if (runs.empty()) throw IoError("no run logs under '" + dir.string() + "'");
    return runs;
}

}  // namespace curteach::harness

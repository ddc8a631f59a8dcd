#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "curteach/harness/config.hpp"
#include "curteach/harness/learner_centric.hpp"
#include "curteach/harness/log.hpp"
#include "curteach/harness/teacher_centric.hpp"
#include "curteach/parallel.hpp"

namespace curteach::harness {

/// Seed of run i: derive_seed(master, "run", i). All per-run streams
/// (layout, demos, init, probe, teacher choices) derive from it by label.
inline std::uint64_t run_seed(const ExperimentConfig& cfg, std::size_t index) { return derive_seed(cfg.seed, "run", index); }

struct StrategyRuns {
    Strategy strategy;
    /// One log per seed, in seed order.
    std::vector<ExperimentLog> logs;
};

struct ExperimentResult {
    std::vector<StrategyRuns> runs;
    /// V^E per seed (teacher-centric only).
    std::vector<double> teacher_values;
    /// Wall seconds per (strategy, seed) job, strategy-major.
    std::vector<double> wall_seconds;

    const StrategyRuns& of(Strategy s) const {
        for (const auto& r : runs) {
            if (r.strategy == s) return r;
        }
        throw ValidationError(std::string("no runs for strategy ") + strategy_name(s));
    }
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Writes the resolved config (with its hash) and the version stamp.
inline void write_run_header(const std::filesystem::path& out, const ExperimentConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) throw IoError("cannot create '" + out.string() + "': " + ec.message());
    write_text(out / "config.ini", "; config_hash " + config_hash(cfg) + "\n" + to_ini(cfg));
    write_text(out / "VERSION", std::string(kVersion) + "\n");
}

inline std::filesystem::path log_path(const std::filesystem::path& out, Strategy s, std::size_t seed_index) {
    return out / strategy_name(s) / ("seed_" + std::to_string(seed_index) + ".csv");
}

/// Runs every (strategy, seed) pair of the config, seeds in parallel worker
/// slots. With an output directory, each log is written as soon as its run
/// ends, including the partial log of a failed run; the first failure is
/// rethrown after all workers stop.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& out = {},
                                       const grid::Dataset* dataset = nullptr) {
    cfg.validate();
    if (out) {
        write_run_header(*out, cfg);
        for (auto s : cfg.strategies) std::filesystem::create_directories(*out / strategy_name(s));
    }
    ExperimentResult res;
    const std::size_t ns = cfg.strategies.size(), nseeds = cfg.seeds;
    for (auto s : cfg.strategies) res.runs.push_back({s, std::vector<ExperimentLog>(nseeds)});
    res.wall_seconds.assign(ns * nseeds, 0.0);
    std::mutex io;

    auto finish = [&](std::size_t job, const ExperimentLog& log, double secs) {
        res.wall_seconds[job] = secs;
        if (!out) return;
        std::lock_guard lock(io);
        save_log(log_path(*out, cfg.strategies[job / nseeds], job % nseeds), log);
    };

    auto timed = [&](std::size_t job, auto&& body) {
        const auto t0 = std::chrono::steady_clock::now();
        auto& log = res.runs[job / nseeds].logs[job % nseeds];
        try {
            body(log);
        } catch (...) {
            finish(job, log, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            throw;
        }
        finish(job, log, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    };

    if (cfg.mode == Mode::TeacherCentric) {
        std::vector<CarTeachingSetup> setups(nseeds);
        parallel_for(nseeds, [&](std::size_t i) { setups[i] = build_car_setup(cfg, run_seed(cfg, i)); }, cfg.threads);
        for (const auto& s : setups) res.teacher_values.push_back(s.teacher_value);
        parallel_for(ns * nseeds, [&](std::size_t job) {
            const std::size_t i = job % nseeds;
            timed(job, [&](ExperimentLog& log) {
                run_teacher_centric(setups[i], cfg, cfg.strategies[job / nseeds], run_seed(cfg, i), log);
            });
        }, cfg.threads);
    } else {
        std::optional<grid::Dataset> owned;
        if (!dataset) {
            owned = load_or_generate_dataset(cfg);
            dataset = &*owned;
        }
        const auto setup = build_grid_setup(cfg, *dataset);
        parallel_for(ns * nseeds, [&](std::size_t job) {
            const std::size_t i = job % nseeds;
            timed(job, [&](ExperimentLog& log) {
                run_learner_centric(setup, cfg, cfg.strategies[job / nseeds], run_seed(cfg, i), log);
            });
        }, cfg.threads);
    }

    if (out) {
        std::vector<std::pair<std::string, CurveSummary>> curves;
        for (const auto& r : res.runs) curves.emplace_back(strategy_name(r.strategy), summarize(r.logs));
        std::ostringstream summary;
        write_summary_csv(summary, curves);
        write_text(*out / "summary.csv", summary.str());
        if (!res.teacher_values.empty()) {
            std::ostringstream ref;
            ref << "# curteach-reference v" << kLogSchemaVersion << "\nseed,teacher_value\n";
            for (std::size_t i = 0; i < res.teacher_values.size(); ++i) {
                ref << i << ',' << format_double(res.teacher_values[i]) << '\n';
            }
            write_text(*out / "reference.csv", ref.str());
        }
        std::ostringstream meta;
        meta << "[run]\nfinished_utc = " << utc_timestamp() << "\n\n[timing]\n";
        for (std::size_t job = 0; job < res.wall_seconds.size(); ++job) {
            meta << strategy_name(cfg.strategies[job / nseeds]) << ".seed_" << job % nseeds << " = "
                 << format_double(res.wall_seconds[job]) << '\n';
        }
        write_text(*out / "meta.ini", meta.str());
    }
    return res;
}

/// Mean over seeds of steps_to_fraction, times the demonstrations per step.
inline double mean_demos_to_fraction(const ExperimentResult& res, Strategy s, std::size_t demos_per_step,
                                     double fraction = 0.95) {
    const auto& logs = res.of(s).logs;
    if (logs.size() != res.teacher_values.size()) throw ValidationError("teacher values do not match the runs");
    double total = 0.0;
    for (std::size_t i = 0; i < logs.size(); ++i) {
        total += static_cast<double>(steps_to_fraction(logs[i], res.teacher_values[i], fraction));
    }
    return total / static_cast<double>(logs.size()) * static_cast<double>(demos_per_step);
}

}  // namespace curteach::harness

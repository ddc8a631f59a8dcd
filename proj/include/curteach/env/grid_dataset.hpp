#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "curteach/env/grid.hpp"
#include "curteach/errors.hpp"
#include "curteach/mdp_io.hpp"
#include "curteach/parallel.hpp"
#include "curteach/random.hpp"

namespace curteach::grid {

inline constexpr std::array<const char*, 3> kSplits = {"train", "val", "test"};

struct DatasetConfig {
    Kind kind = Kind::ShortestPath;
    std::uint64_t seed = 0;
    /// Tasks per (mud, bomb) combination (shortest path) or per goal count (TSP), by split.
    std::array<std::size_t, 3> per_group = {100, 10, 30};
    int max_muds = 12;
    int max_bombs = 12;
    int min_goals = 1;
    int max_goals = 2;
    std::size_t max_demos_per_task = 32;
    std::uint64_t path_count_cap = 1000000;
    std::size_t max_retries = 1000;
    std::size_t threads = 0;

    static DatasetConfig shortest_path_defaults(std::uint64_t seed = 0) {
        DatasetConfig c;
        c.seed = seed;
        return c;
    }

    static DatasetConfig tsp_defaults(std::uint64_t seed = 0) {
        DatasetConfig c;
        c.kind = Kind::Tsp;
        c.seed = seed;
        c.per_group = {2000, 100, 500};
        c.max_muds = 0;
        c.max_bombs = 0;
        c.min_goals = 2;
        c.max_goals = 4;
        return c;
    }

    std::size_t groups() const {
        if (kind == Kind::ShortestPath) return static_cast<std::size_t>((max_muds + 1) * (max_bombs + 1));
        return static_cast<std::size_t>(max_goals - min_goals + 1);
    }

    std::size_t split_size(std::size_t split) const { return groups() * per_group[split]; }

    void validate() const {
        if (min_goals < 1 || max_goals < min_goals) throw ConfigError("dataset: invalid goal range");
        if (max_muds < 0 || max_bombs < 0) throw ConfigError("dataset: negative mud or bomb count");
        if (1 + max_goals + max_muds + max_bombs > kCells) throw ConfigError("dataset: too many objects for the grid");
        if (kind == Kind::Tsp && (max_muds != 0 || max_bombs != 0)) throw ConfigError("dataset: tsp tasks have no muds or bombs");
        if (kind == Kind::ShortestPath && max_goals - min_goals != 1 && max_goals != min_goals) {
            throw ConfigError("dataset: shortest-path goal counts alternate between two values at most");
        }
    }
};

struct SolvedTask {
    GridTask task;
    double optimal_reward = 0.0;
    /// Reward of the nearest-goal tour (TSP only).
    std::optional<double> greedy_reward;
    std::uint64_t optimal_paths = 0;
    /// All optimal demonstrations up to the configured cap (train split only).
    std::vector<Demonstration> demos;
    /// Teacher difficulty; set on the train split after calibration.
    double psi_e = std::numeric_limits<double>::quiet_NaN();

    double greedy_gap() const { return greedy_reward ? optimal_reward - *greedy_reward : 0.0; }
};

struct Dataset {
    DatasetConfig config;
    std::array<std::vector<SolvedTask>, 3> splits;
    /// Shift added to the raw difficulty denominator so that the smallest train value is 1.
    double denominator_shift = 0.0;

    const std::vector<SolvedTask>& train() const { return splits[0]; }
};

/// True if some goal is reachable from `start` moving through non-bomb cells.
inline bool goal_reachable(const GridTask& t) {
    std::vector<char> blocked(kCells, 0), seen(kCells, 0), goal(kCells, 0);
    for (int c : t.bombs) blocked[static_cast<std::size_t>(c)] = 1;
    for (int c : t.goals) goal[static_cast<std::size_t>(c)] = 1;
    std::vector<int> stack = {t.start.cell};
    seen[static_cast<std::size_t>(t.start.cell)] = 1;
    while (!stack.empty()) {
        const int c = stack.back();
        stack.pop_back();
        if (goal[static_cast<std::size_t>(c)]) return true;
        for (int d = 0; d < 4; ++d) {
            const int n = step_forward(c, d);
            if (n == c || seen[static_cast<std::size_t>(n)] || blocked[static_cast<std::size_t>(n)]) continue;
            seen[static_cast<std::size_t>(n)] = 1;
            stack.push_back(n);
        }
    }
    return false;
}

/// Places start, goals, muds, and bombs on distinct cells, retrying until a
/// goal is reachable without crossing a bomb.
inline GridTask sample_task(Kind kind, int goals, int muds, int bombs, std::uint64_t seed, std::size_t max_retries) {
    Rng rng(seed);
    for (std::size_t attempt = 0; attempt < max_retries; ++attempt) {
        std::vector<int> cells(kCells);
        for (int i = 0; i < kCells; ++i) cells[static_cast<std::size_t>(i)] = i;
        shuffle(std::span<int>(cells), rng);
        GridTask t;
        t.kind = kind;
        std::size_t k = 0;
        t.start = {cells[k++], static_cast<int>(uniform_index(rng, 4))};
        for (int i = 0; i < goals; ++i) t.goals.push_back(cells[k++]);
        for (int i = 0; i < muds; ++i) t.muds.push_back(cells[k++]);
        for (int i = 0; i < bombs; ++i) t.bombs.push_back(cells[k++]);
        if (goal_reachable(t)) return t;
    }
    throw GenerationError("could not place a feasible task after " + std::to_string(max_retries) + " attempts");
}

/// Raw (uncalibrated) difficulty denominator: optimal reward (shortest path)
/// or optimal reward minus greedy gap (TSP).
inline double raw_denominator(const SolvedTask& t) {
    if (!std::isfinite(t.optimal_reward)) throw ValidationError("difficulty of an unsolved task");
    return t.task.kind == Kind::ShortestPath ? t.optimal_reward : t.optimal_reward - t.greedy_gap();
}

/// goals * optimal_paths / (optimal_reward + shift).
inline double teacher_difficulty_shortest_path(const SolvedTask& t, double shift) {
    const double den = raw_denominator(t) + shift;
    if (!(den > 0.0)) throw ValidationError("difficulty denominator must be positive after calibration");
    return static_cast<double>(t.task.goals.size()) * static_cast<double>(t.optimal_paths) / den;
}

/// goals / (optimal_reward - greedy_gap + shift).
inline double teacher_difficulty_tsp(const SolvedTask& t, double shift) {
    const double den = raw_denominator(t) + shift;
    if (!(den > 0.0)) throw ValidationError("difficulty denominator must be positive after calibration");
    return static_cast<double>(t.task.goals.size()) / den;
}

inline double teacher_difficulty(const SolvedTask& t, double shift) {
    return t.task.kind == Kind::ShortestPath ? teacher_difficulty_shortest_path(t, shift) : teacher_difficulty_tsp(t, shift);
}

/// Shift making every train denominator at least 1: 1 - min denominator.
inline double calibrate_shift(const std::vector<SolvedTask>& train) {
    if (train.empty()) throw ValidationError("calibration needs a non-empty train split");
    double lo = kInf;
    for (const auto& t : train) lo = std::min(lo, raw_denominator(t));
    return 1.0 - lo;
}

inline SolvedTask solve(const GridTask& task, const DatasetConfig& cfg, bool with_demos) {
    const TaskMdp tm(task);
    const auto sol = solve_task(tm, with_demos ? cfg.max_demos_per_task : 0, cfg.path_count_cap);
    SolvedTask out;
    out.task = task;
    out.optimal_reward = sol.optimal_reward;
    out.optimal_paths = sol.optimal_paths;
    out.demos = sol.demos;
    if (task.kind == Kind::Tsp) out.greedy_reward = greedy_tour_reward(tm);
    if (with_demos && out.demos.empty()) throw GenerationError("train task without an optimal demonstration");
    return out;
}

/// Deterministic per seed: task i of a split is sampled from its own sub-seed,
/// so generation parallelizes without changing results.
inline Dataset generate_dataset(const DatasetConfig& cfg) {
    cfg.validate();
    Dataset ds;
    ds.config = cfg;
    for (std::size_t split = 0; split < 3; ++split) {
        const std::size_t per = cfg.per_group[split];
        const std::size_t n = cfg.split_size(split);
        auto& tasks = ds.splits[split];
        tasks.resize(n);
        const std::string label = std::string(kind_name(cfg.kind)) + "/" + kSplits[split];
        parallel_for(
            n,
            [&](std::size_t i) {
                const std::size_t group = i / per, within = i % per;
                int goals, muds = 0, bombs = 0;
                if (cfg.kind == Kind::ShortestPath) {
                    muds = static_cast<int>(group / static_cast<std::size_t>(cfg.max_bombs + 1));
                    bombs = static_cast<int>(group % static_cast<std::size_t>(cfg.max_bombs + 1));
                    goals = within < (per + 1) / 2 ? cfg.min_goals : cfg.max_goals;
                } else {
                    goals = cfg.min_goals + static_cast<int>(group);
                }
                GridTask task = sample_task(cfg.kind, goals, muds, bombs, derive_seed(cfg.seed, label, i), cfg.max_retries);
                task.id = i;
                tasks[i] = solve(task, cfg, split == 0);
            },
            cfg.threads);
    }
    ds.denominator_shift = calibrate_shift(ds.splits[0]);
    for (auto& t : ds.splits[0]) t.psi_e = teacher_difficulty(t, ds.denominator_shift);
    return ds;
}

// curteach-task 1
// id <n> kind <shortest-path|tsp>
// start <cell> <dir>
// goals <k> <cells...>   muds <k> <cells...>   bombs <k> <cells...>
// optimal_reward <x> greedy_reward <x|-> optimal_paths <n> psi_e <x|->
// end

inline void write_task(std::ostream& out, const SolvedTask& t) {
    auto list = [&](const char* name, const std::vector<int>& v) {
        out << name << ' ' << v.size();
        for (int c : v) out << ' ' << c;
        out << '\n';
    };
    out << "curteach-task 1\n";
    out << "id " << t.task.id << " kind " << kind_name(t.task.kind) << '\n';
    out << "start " << t.task.start.cell << ' ' << t.task.start.dir << '\n';
    list("goals", t.task.goals);
    list("muds", t.task.muds);
    list("bombs", t.task.bombs);
    out << "optimal_reward " << format_double(t.optimal_reward) << '\n';
    out << "greedy_reward " << (t.greedy_reward ? format_double(*t.greedy_reward) : "-") << '\n';
    out << "optimal_paths " << t.optimal_paths << '\n';
    out << "psi_e " << (std::isnan(t.psi_e) ? "-" : format_double(t.psi_e)) << '\n';
    out << "end\n";
}

inline SolvedTask read_task(std::istream& in) {
    io_detail::TokenReader r(in);
    io_detail::expect_version(r, "curteach-task");
    SolvedTask t;
    r.expect("id");
    t.task.id = r.count();
    r.expect("kind");
    t.task.kind = parse_kind(r.next());
    r.expect("start");
    t.task.start.cell = static_cast<int>(r.count());
    t.task.start.dir = static_cast<int>(r.count());
    auto list = [&](const char* name) {
        r.expect(name);
        std::vector<int> v(r.count());
        for (auto& c : v) c = static_cast<int>(r.count());
        return v;
    };
    t.task.goals = list("goals");
    t.task.muds = list("muds");
    t.task.bombs = list("bombs");
    r.expect("optimal_reward");
    t.optimal_reward = r.number();
    r.expect("greedy_reward");
    if (const auto tok = r.next(); tok != "-") t.greedy_reward = parse_double(tok);
    r.expect("optimal_paths");
    t.optimal_paths = r.count();
    r.expect("psi_e");
    if (const auto tok = r.next(); tok != "-") t.psi_e = parse_double(tok);
    r.expect("end");
    t.task.validate();
    return t;
}

inline std::string task_file_stem(std::uint64_t id) {
    std::string s = std::to_string(id);
    return std::string(s.size() < 6 ? 6 - s.size() : 0, '0') + s;
}

/// <dir>/<split>/<id>.task (+ <id>.demos on the train split) and <dir>/manifest.ini.
inline void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    for (std::size_t split = 0; split < 3; ++split) {
        const fs::path sub = dir / kSplits[split];
        fs::create_directories(sub, ec);
        if (ec) throw IoError("cannot create '" + sub.string() + "': " + ec.message());
        for (const auto& t : ds.splits[split]) {
            const std::string stem = task_file_stem(t.task.id);
            save_to_file((sub / (stem + ".task")).string(), t, write_task);
            if (split == 0) save_to_file((sub / (stem + ".demos")).string(), t.demos, write_demonstrations);
        }
    }
    boost::property_tree::ptree m;
    const auto& c = ds.config;
    m.put("dataset.kind", kind_name(c.kind));
    m.put("dataset.seed", c.seed);
    m.put("dataset.format", 1);
    for (std::size_t split = 0; split < 3; ++split) {
        m.put(std::string("counts.") + kSplits[split], ds.splits[split].size());
        m.put(std::string("per_group.") + kSplits[split], c.per_group[split]);
    }
    m.put("generation.max_muds", c.max_muds);
    m.put("generation.max_bombs", c.max_bombs);
    m.put("generation.min_goals", c.min_goals);
    m.put("generation.max_goals", c.max_goals);
    m.put("generation.max_demos_per_task", c.max_demos_per_task);
    m.put("generation.path_count_cap", c.path_count_cap);
    m.put("generation.max_retries", c.max_retries);
    m.put("calibration.denominator_shift", format_double(ds.denominator_shift));
    try {
        boost::property_tree::write_ini((dir / "manifest.ini").string(), m);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw IoError(e.what());
    }
}

inline Dataset read_dataset(const std::filesystem::path& dir) {
    namespace pt = boost::property_tree;
    pt::ptree m;
    try {
        pt::read_ini((dir / "manifest.ini").string(), m);
    } catch (const pt::ini_parser_error& e) {
        throw IoError(std::string("dataset manifest: ") + e.what());
    }
    Dataset ds;
    try {
        auto& c = ds.config;
        c.kind = parse_kind(m.get<std::string>("dataset.kind"));
        c.seed = m.get<std::uint64_t>("dataset.seed");
        for (std::size_t split = 0; split < 3; ++split) c.per_group[split] = m.get<std::size_t>(std::string("per_group.") + kSplits[split]);
        c.max_muds = m.get<int>("generation.max_muds");
        c.max_bombs = m.get<int>("generation.max_bombs");
        c.min_goals = m.get<int>("generation.min_goals");
        c.max_goals = m.get<int>("generation.max_goals");
        c.max_demos_per_task = m.get<std::size_t>("generation.max_demos_per_task");
        c.path_count_cap = m.get<std::uint64_t>("generation.path_count_cap");
        c.max_retries = m.get<std::size_t>("generation.max_retries");
        ds.denominator_shift = parse_double(m.get<std::string>("calibration.denominator_shift"));
        for (std::size_t split = 0; split < 3; ++split) {
            const std::size_t n = m.get<std::size_t>(std::string("counts.") + kSplits[split]);
            auto& tasks = ds.splits[split];
            tasks.resize(n);
            const auto sub = dir / kSplits[split];
            for (std::size_t i = 0; i < n; ++i) {
                const std::string stem = task_file_stem(i);
                auto in = open_for_reading((sub / (stem + ".task")).string());
                tasks[i] = read_task(in);
                if (split == 0) {
                    auto din = open_for_reading((sub / (stem + ".demos")).string());
                    tasks[i].demos = read_demonstrations(din);
                }
            }
        }
    } catch (const pt::ptree_error& e) {
        throw ValidationError(std::string("dataset manifest: ") + e.what());
    }
    return ds;
}

}  // namespace curteach::grid

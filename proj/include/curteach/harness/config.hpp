#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "curteach/curricula/schedule.hpp"
#include "curteach/curricula/selection.hpp"
#include "curteach/env/grid.hpp"
#include "curteach/errors.hpp"
#include "curteach/learners/learner.hpp"
#include "curteach/numeric.hpp"
#include "curteach/probing.hpp"
#include "curteach/random.hpp"

namespace curteach::harness {

inline constexpr const char* kVersion = "curteach 1.0.0";

enum class Mode { TeacherCentric, LearnerCentric };

inline const char* mode_name(Mode m) { return m == Mode::TeacherCentric ? "teacher-centric" : "learner-centric"; }

inline Mode parse_mode(const std::string& s) {
    if (s == "teacher-centric") return Mode::TeacherCentric;
    if (s == "learner-centric") return Mode::LearnerCentric;
    throw ConfigError("unknown mode '" + s + "'");
}

/// Starting point of the learner in the car environment: theta = 0, or
/// pretrained on the tasks of type T0 or T0..T3.
enum class InitialKnowledge { None, T0, T0toT3 };

inline const char* knowledge_name(InitialKnowledge k) {
    switch (k) {
        case InitialKnowledge::None: return "none";
        case InitialKnowledge::T0: return "T0";
        case InitialKnowledge::T0toT3: return "T0-T3";
    }
    return "?";
}

inline InitialKnowledge parse_knowledge(const std::string& s) {
    if (s == "none") return InitialKnowledge::None;
    if (s == "T0") return InitialKnowledge::T0;
    if (s == "T0-T3") return InitialKnowledge::T0toT3;
    throw ConfigError("unknown initial knowledge '" + s + "'");
}

struct ExperimentConfig {
    Mode mode = Mode::TeacherCentric;
    /// car | shortest-path | tsp
    std::string environment = "car";
    std::uint64_t seed = 0;
    std::size_t seeds = 10;
    std::size_t threads = 0;
    std::vector<Strategy> strategies = {Strategy::Cur, Strategy::CurT, Strategy::CurL, Strategy::Agn};

    // teacher-centric
    std::size_t steps = 150;
    std::size_t demos_per_state = 10;
    /// How CUR-T and CUR-L turn difficulty into a pick; CUR always takes the argmax.
    SelectionMode selection = SelectionMode::Softmax;
    double selection_temperature = 1.0;
    ProbeConfig probe;
    double car_gamma = 0.99;
    double teacher_temperature = 1.0;
    /// Car layouts come from this seed when set, otherwise from each run seed.
    std::optional<std::uint64_t> layout_seed;
    InitialKnowledge initial_knowledge = InitialKnowledge::None;
    std::size_t pretrain_steps = 200;

    // learner
    LearnerModel model = LearnerModel::MaxEnt;
    Parameterization parameterization = Parameterization::Linear;
    /// raw | smoothed (car only)
    std::string features = "raw";
    LearningRateSchedule learning_rate{.initial = 0.1};
    std::size_t hidden = 64;
    /// Std of the seeded Gaussian start of the quadratic block; theta = 0 is a
    /// stationary point of that block.
    double init_scale = 0.1;
    double solver_tol = 1e-8;

    // learner-centric
    SchedulerParams schedule;
    std::size_t batch_size = 32;
    std::size_t eval_every = 100;
    std::size_t moving_average = 100;
    /// Test tasks used per evaluation; 0 means the whole split.
    std::size_t eval_tasks = 500;
    std::string dataset_dir;
    std::array<std::size_t, 3> dataset_per_group = {0, 0, 0};

    std::string output_dir = "out";

    void validate() const {
        if (environment != "car" && environment != "shortest-path" && environment != "tsp") {
            throw ConfigError("unknown environment '" + environment + "'");
        }
        if (mode == Mode::TeacherCentric && environment != "car") {
            throw ConfigError("teacher-centric runs use the car environment");
        }
        if (mode == Mode::LearnerCentric && environment == "car") {
            throw ConfigError("learner-centric runs use a grid environment");
        }
        if (seeds == 0) throw ConfigError("seeds must be positive");
        if (strategies.empty()) throw ConfigError("no strategies");
        if (demos_per_state == 0) throw ConfigError("demos_per_state must be positive");
        if (!(selection_temperature > 0.0)) throw ConfigError("selection temperature must be positive");
        if (!(learning_rate.initial > 0.0)) throw ConfigError("learning rate must be positive");
        if (!(learning_rate.decay > 0.0)) throw ConfigError("learning rate decay must be positive");
        if (features != "raw" && features != "smoothed") throw ConfigError("features must be raw or smoothed");
        if (!(car_gamma > 0.0 && car_gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
        if (batch_size == 0) throw ConfigError("batch_size must be positive");
        if (eval_every == 0) throw ConfigError("eval_every must be positive");
        if (moving_average == 0) throw ConfigError("moving_average must be positive");
        if (hidden == 0) throw ConfigError("hidden width must be positive");
        if (!(init_scale >= 0.0)) throw ConfigError("init_scale must be non-negative");
        try {
            probe.validate();
            SchedulerParams sp = schedule;
            if (sp.epochs == 0) sp.epochs = 1;
            sp.validate();
        } catch (const ValidationError& e) {
            throw ConfigError(e.what());
        }
        if (mode == Mode::LearnerCentric) {
            if (model != LearnerModel::CrossEnt || parameterization != Parameterization::Mlp) {
                throw ConfigError("learner-centric runs train a CrossEnt MLP");
            }
            for (auto s : strategies) {
                if (s != Strategy::Cur && s != Strategy::CurT && s != Strategy::CurL && s != Strategy::Agn) {
                    throw ConfigError(std::string("strategy ") + strategy_name(s) + " needs a teacher");
                }
            }
        }
        if (mode == Mode::TeacherCentric && model == LearnerModel::CrossEnt) {
            for (auto s : strategies) {
                if (s == Strategy::Omn) throw ConfigError("omn needs the MaxEnt gradient and target parameter");
            }
        }
    }
};

/// Learner-centric defaults: batch 32, learning rate 0.01 halved every 500
/// batches, CrossEnt MLP.
inline ExperimentConfig learner_centric_defaults() {
    ExperimentConfig c;
    c.mode = Mode::LearnerCentric;
    c.environment = "shortest-path";
    c.seeds = 5;
    c.model = LearnerModel::CrossEnt;
    c.parameterization = Parameterization::Mlp;
    c.learning_rate = {.initial = 0.01, .decay = 0.5, .decay_every = 500};
    return c;
}

namespace detail {

inline std::string join_strategies(const std::vector<Strategy>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::string(strategy_name(v[i]));
    return out;
}

inline std::vector<Strategy> split_strategies(const std::string& s) {
    std::vector<Strategy> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
        if (b == std::string::npos) continue;
        try {
            out.push_back(parse_strategy(item.substr(b, e - b + 1)));
        } catch (const ValidationError& err) {
            throw ConfigError(err.what());
        }
    }
    return out;
}

/// Strict typed lookup: a present key must parse completely as T.
template <class T>
T get(const boost::property_tree::ptree& t, const std::string& path, T fallback) {
    const auto raw = t.get_optional<std::string>(path);
    if (!raw) return fallback;
    if constexpr (std::is_same_v<T, std::string>) {
        return *raw;
    } else {
        const auto b = raw->find_first_not_of(" \t"), e = raw->find_last_not_of(" \t");
        const std::string v = b == std::string::npos ? std::string() : raw->substr(b, e - b + 1);
        T out{};
        const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (v.empty() || ec != std::errc() || end != v.data() + v.size()) {
            throw ConfigError("bad value for " + path + ": '" + *raw + "'");
        }
        return out;
    }
}

}  // namespace detail

/// Canonical key tree. Every key is always written, so the resolved file
/// documents the full parameter set.
inline boost::property_tree::ptree to_ptree(const ExperimentConfig& c) {
    boost::property_tree::ptree t;
    t.put("experiment.mode", mode_name(c.mode));
    t.put("experiment.environment", c.environment);
    t.put("experiment.seed", c.seed);
    t.put("experiment.seeds", c.seeds);
    t.put("experiment.threads", c.threads);
    t.put("experiment.strategies", detail::join_strategies(c.strategies));
    t.put("experiment.output_dir", c.output_dir);

    t.put("teacher.steps", c.steps);
    t.put("teacher.demos_per_state", c.demos_per_state);
    t.put("teacher.selection", c.selection == SelectionMode::Argmax ? "argmax" : "softmax");
    t.put("teacher.selection_temperature", format_double(c.selection_temperature));
    t.put("teacher.initial_knowledge", knowledge_name(c.initial_knowledge));
    t.put("teacher.pretrain_steps", c.pretrain_steps);

    t.put("car.gamma", format_double(c.car_gamma));
    t.put("car.teacher_temperature", format_double(c.teacher_temperature));
    t.put("car.layout_seed", c.layout_seed ? std::to_string(*c.layout_seed) : std::string("run"));

    t.put("probe.interval", c.probe.interval);
    t.put("probe.queries", c.probe.queries ? std::to_string(*c.probe.queries) : std::string("exact"));

    t.put("learner.model", learner_model_name(c.model));
    t.put("learner.parameterization", parameterization_name(c.parameterization));
    t.put("learner.features", c.features);
    t.put("learner.learning_rate", format_double(c.learning_rate.initial));
    t.put("learner.lr_decay", format_double(c.learning_rate.decay));
    t.put("learner.lr_decay_every", c.learning_rate.decay_every);
    t.put("learner.hidden", c.hidden);
    t.put("learner.init_scale", format_double(c.init_scale));
    t.put("learner.solver_tol", format_double(c.solver_tol));

    t.put("schedule.a", format_double(c.schedule.a));
    t.put("schedule.b", format_double(c.schedule.b));
    t.put("schedule.epochs", c.schedule.epochs);
    t.put("schedule.batch_size", c.batch_size);
    t.put("schedule.eval_every", c.eval_every);
    t.put("schedule.moving_average", c.moving_average);
    t.put("schedule.eval_tasks", c.eval_tasks);

    t.put("dataset.dir", c.dataset_dir);
    t.put("dataset.per_group_train", c.dataset_per_group[0]);
    t.put("dataset.per_group_val", c.dataset_per_group[1]);
    t.put("dataset.per_group_test", c.dataset_per_group[2]);
    return t;
}

inline std::string to_ini(const ExperimentConfig& c) {
    std::ostringstream out;
    boost::property_tree::write_ini(out, to_ptree(c));
    return out.str();
}

/// 64-bit FNV-1a of the canonical INI text, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
    const auto h = fnv1a(to_ini(c));
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << h;
    return out.str();
}

inline ExperimentConfig from_ptree(const boost::property_tree::ptree& t) {
    static const std::vector<std::string> known = {
        "experiment.mode", "experiment.environment", "experiment.seed", "experiment.seeds", "experiment.threads",
        "experiment.strategies", "experiment.output_dir", "teacher.steps", "teacher.demos_per_state",
        "teacher.selection", "teacher.selection_temperature", "teacher.initial_knowledge", "teacher.pretrain_steps",
        "car.gamma", "car.teacher_temperature", "car.layout_seed", "probe.interval", "probe.queries",
        "learner.model", "learner.parameterization", "learner.features", "learner.learning_rate", "learner.lr_decay",
        "learner.lr_decay_every", "learner.hidden", "learner.init_scale", "learner.solver_tol", "schedule.a", "schedule.b",
        "schedule.epochs", "schedule.batch_size", "schedule.eval_every", "schedule.moving_average",
        "schedule.eval_tasks", "dataset.dir", "dataset.per_group_train", "dataset.per_group_val",
        "dataset.per_group_test"};
    for (const auto& [section, body] : t) {
        if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside a section");
        for (const auto& [key, _] : body) {
            const std::string full = section + "." + key;
            if (std::find(known.begin(), known.end(), full) == known.end()) throw ConfigError("unknown key '" + full + "'");
        }
    }

    const std::string mode = t.get<std::string>("experiment.mode", "teacher-centric");
    ExperimentConfig c = parse_mode(mode) == Mode::LearnerCentric ? learner_centric_defaults() : ExperimentConfig{};
    try {
        c.environment = detail::get(t, "experiment.environment", c.environment);
        c.seed = detail::get(t, "experiment.seed", c.seed);
        c.seeds = detail::get(t, "experiment.seeds", c.seeds);
        c.threads = detail::get(t, "experiment.threads", c.threads);
        if (auto s = t.get_optional<std::string>("experiment.strategies")) c.strategies = detail::split_strategies(*s);
        c.output_dir = detail::get(t, "experiment.output_dir", c.output_dir);

        c.steps = detail::get(t, "teacher.steps", c.steps);
        c.demos_per_state = detail::get(t, "teacher.demos_per_state", c.demos_per_state);
        const std::string sel = t.get<std::string>("teacher.selection", "softmax");
        if (sel != "argmax" && sel != "softmax") throw ConfigError("teacher.selection must be argmax or softmax");
        c.selection = sel == "argmax" ? SelectionMode::Argmax : SelectionMode::Softmax;
        c.selection_temperature = detail::get(t, "teacher.selection_temperature", c.selection_temperature);
        c.initial_knowledge = parse_knowledge(t.get<std::string>("teacher.initial_knowledge", "none"));
        c.pretrain_steps = detail::get(t, "teacher.pretrain_steps", c.pretrain_steps);

        c.car_gamma = detail::get(t, "car.gamma", c.car_gamma);
        c.teacher_temperature = detail::get(t, "car.teacher_temperature", c.teacher_temperature);
        if (t.get<std::string>("car.layout_seed", "run") != "run") {
            c.layout_seed = detail::get<std::uint64_t>(t, "car.layout_seed", 0);
        }

        c.probe.interval = detail::get(t, "probe.interval", c.probe.interval);
        const std::string q = t.get<std::string>("probe.queries", "exact");
        if (q == "exact") {
            c.probe.queries.reset();
        } else {
            const long long k = parse_int(q);
            if (k < 1) throw ConfigError("probe.queries must be positive or 'exact'");
            c.probe.queries = static_cast<std::size_t>(k);
        }

        if (auto m = t.get_optional<std::string>("learner.model")) c.model = parse_learner_model(*m);
        if (auto p = t.get_optional<std::string>("learner.parameterization")) c.parameterization = parse_parameterization(*p);
        c.features = detail::get(t, "learner.features", c.features);
        if (c.mode == Mode::TeacherCentric && c.parameterization == Parameterization::Quadratic) c.learning_rate.initial = 0.05;
        c.learning_rate.initial = detail::get(t, "learner.learning_rate", c.learning_rate.initial);
        c.learning_rate.decay = detail::get(t, "learner.lr_decay", c.learning_rate.decay);
        c.learning_rate.decay_every = detail::get(t, "learner.lr_decay_every", c.learning_rate.decay_every);
        c.hidden = detail::get(t, "learner.hidden", c.hidden);
        c.init_scale = detail::get(t, "learner.init_scale", c.init_scale);
        c.solver_tol = detail::get(t, "learner.solver_tol", c.solver_tol);

        c.schedule.a = detail::get(t, "schedule.a", c.schedule.a);
        c.schedule.b = detail::get(t, "schedule.b", c.schedule.b);
        c.schedule.epochs = detail::get(t, "schedule.epochs", c.schedule.epochs);
        c.batch_size = detail::get(t, "schedule.batch_size", c.batch_size);
        c.eval_every = detail::get(t, "schedule.eval_every", c.eval_every);
        c.moving_average = detail::get(t, "schedule.moving_average", c.moving_average);
        c.eval_tasks = detail::get(t, "schedule.eval_tasks", c.eval_tasks);

        c.dataset_dir = detail::get(t, "dataset.dir", c.dataset_dir);
        c.dataset_per_group[0] = detail::get(t, "dataset.per_group_train", c.dataset_per_group[0]);
        c.dataset_per_group[1] = detail::get(t, "dataset.per_group_val", c.dataset_per_group[1]);
        c.dataset_per_group[2] = detail::get(t, "dataset.per_group_test", c.dataset_per_group[2]);
    } catch (const boost::property_tree::ptree_bad_data& e) {
        throw ConfigError(std::string("bad value: ") + e.what());
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
    c.validate();
    return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
    boost::property_tree::ptree t;
    std::istringstream in(text);
    try {
        boost::property_tree::read_ini(in, t);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    return from_ptree(t);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("config not found: " + path.string());
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

}  // namespace curteach::harness

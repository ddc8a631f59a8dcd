#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "curteach/curricula/schedule.hpp"
#include "curteach/curricula/selection.hpp"
#include "curteach/env/grid_dataset.hpp"
#include "curteach/harness/config.hpp"
#include "curteach/harness/log.hpp"
#include "curteach/learners/learner.hpp"

namespace curteach::harness {

inline grid::Kind grid_kind(const ExperimentConfig& cfg) { return grid::parse_kind(cfg.environment); }

/// Dataset generation parameters for a learner-centric config: the kind's
/// defaults seeded by cfg.seed, with non-zero per-group overrides applied.
inline grid::DatasetConfig dataset_config(const ExperimentConfig& cfg) {
    const auto kind = grid_kind(cfg);
    auto dc = kind == grid::Kind::Tsp ? grid::DatasetConfig::tsp_defaults(cfg.seed)
                                      : grid::DatasetConfig::shortest_path_defaults(cfg.seed);
    for (std::size_t i = 0; i < 3; ++i) {
        if (cfg.dataset_per_group[i] > 0) dc.per_group[i] = cfg.dataset_per_group[i];
    }
    dc.threads = cfg.threads;
    return dc;
}

inline grid::Dataset load_or_generate_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset_dir.empty()) return grid::generate_dataset(dataset_config(cfg));
    grid::Dataset ds = grid::read_dataset(cfg.dataset_dir);
    if (ds.config.kind != grid_kind(cfg)) {
        throw ConfigError("dataset in '" + cfg.dataset_dir + "' is " + grid::kind_name(ds.config.kind) +
                          ", config asks for " + cfg.environment);
    }
    return ds;
}

/// Names of the task features tracked in the curriculum plots.
inline std::vector<std::string> task_feature_names(grid::Kind kind) {
    if (kind == grid::Kind::ShortestPath) return {"goals", "muds", "bombs", "optimal_paths", "psi_e"};
    return {"goals", "greedy_gap", "psi_e"};
}

inline std::vector<double> task_features(const grid::SolvedTask& t) {
    const double goals = static_cast<double>(t.task.goals.size());
    if (t.task.kind == grid::Kind::ShortestPath) {
        return {goals, static_cast<double>(t.task.muds.size()), static_cast<double>(t.task.bombs.size()),
                static_cast<double>(t.optimal_paths), t.psi_e};
    }
    return {goals, t.greedy_gap(), t.psi_e};
}

/// Strategy-independent state shared by all runs on one dataset.
struct GridTeachingSetup {
    grid::Kind kind = grid::Kind::ShortestPath;
    const grid::Dataset* dataset = nullptr;
    std::vector<double> log_psi_e;
    /// Per train task, min-max normalized task features.
    std::vector<std::vector<double>> features;
    std::vector<grid::TaskMdp> eval_mdps;
    std::vector<double> eval_optimal;
    ScoringModel scoring;
    std::size_t horizon = 0;
};

inline GridTeachingSetup build_grid_setup(const ExperimentConfig& cfg, const grid::Dataset& ds) {
    GridTeachingSetup s;
    s.kind = ds.config.kind;
    s.dataset = &ds;
    const auto& train = ds.train();
    if (train.empty()) throw ConfigError("dataset has no train tasks");
    for (const auto& t : train) {
        if (t.demos.empty()) throw ValidationError("train task " + std::to_string(t.task.id) + " has no demonstrations");
        if (!(t.psi_e > 0.0)) throw ValidationError("train task " + std::to_string(t.task.id) + " lacks psi_e");
        s.log_psi_e.push_back(std::log(t.psi_e));
    }
    const std::size_t nf = task_feature_names(s.kind).size();
    std::vector<double> lo(nf, kInf), hi(nf, -kInf);
    for (const auto& t : train) {
        const auto f = task_features(t);
        for (std::size_t j = 0; j < nf; ++j) {
            lo[j] = std::min(lo[j], f[j]);
            hi[j] = std::max(hi[j], f[j]);
        }
    }
    for (const auto& t : train) {
        auto f = task_features(t);
        for (std::size_t j = 0; j < nf; ++j) f[j] = hi[j] > lo[j] ? (f[j] - lo[j]) / (hi[j] - lo[j]) : 0.0;
        s.features.push_back(std::move(f));
    }
    const auto& test = ds.splits[2];
    const std::size_t n_eval = std::min(cfg.eval_tasks, test.size());
    for (std::size_t i = 0; i < n_eval; ++i) {
        s.eval_mdps.emplace_back(test[i].task);
        s.eval_optimal.push_back(test[i].optimal_reward);
    }
    s.scoring = ScoringModel(cfg.parameterization, grid::kCells * grid::channels(s.kind), grid::kActions, cfg.hidden);
    s.horizon = grid::default_horizon(s.kind);
    return s;
}

inline Eigen::MatrixXd grid_input_block(const GridTeachingSetup&, const grid::GridTask& task, StateId state) {
    return grid::task_input(task, grid::decode_state(task, state)).transpose();
}

/// log Psi^L of a demonstration: sum over steps of -log pi_theta(a | s).
inline double grid_log_psi_l(const GridTeachingSetup& s, const Eigen::VectorXd& theta, const grid::GridTask& task,
                             const Demonstration& demo) {
    double out = 0.0;
    for (const auto& st : demo.steps) {
        const Eigen::VectorXd h = s.scoring.scores(theta, grid_input_block(s, task, st.state));
        out += log_sum_exp(h) - h[static_cast<Eigen::Index>(st.action)];
    }
    return out;
}

/// Greedy rollout from the start state, capped at the task horizon. Ties go to
/// the lowest action index.
inline double grid_rollout_reward(const GridTeachingSetup& s, const Eigen::VectorXd& theta, const grid::TaskMdp& tm) {
    const auto& mdp = tm.mdp();
    StateId state = tm.start();
    double total = 0.0;
    for (std::size_t step = 0; step < s.horizon && !mdp.is_terminal(state); ++step) {
        const Eigen::VectorXd h = s.scoring.scores(theta, grid_input_block(s, tm.task(), state));
        Eigen::Index a = 0;
        h.maxCoeff(&a);
        total += mdp.reward(state, static_cast<ActionId>(a));
        state = mdp.successors(state, static_cast<ActionId>(a))[0].next;
    }
    return total;
}

struct GridEvaluation {
    double mean_reward = 0.0;
    /// Share of evaluation tasks where the greedy rollout attains the optimal return.
    double optimal_fraction = 0.0;
};

inline GridEvaluation evaluate_grid(const GridTeachingSetup& s, const Eigen::VectorXd& theta) {
    GridEvaluation e;
    if (s.eval_mdps.empty()) return {kMissing, kMissing};
    for (std::size_t i = 0; i < s.eval_mdps.size(); ++i) {
        const double r = grid_rollout_reward(s, theta, s.eval_mdps[i]);
        e.mean_reward += r;
        if (r >= s.eval_optimal[i] - 1e-9) e.optimal_fraction += 1.0;
    }
    const double n = static_cast<double>(s.eval_mdps.size());
    e.mean_reward /= n;
    e.optimal_fraction /= n;
    return e;
}

/// Per epoch: one demonstration per train task, preference ranking by the
/// strategy, the top-X of the schedule, shuffled into batches, one SGD step per
/// batch. Row 0 is the untrained policy; further rows every eval_every batches
/// and after the last batch. log_psi_e, log_psi_l and the ma_* feature columns
/// are moving averages over the last `moving_average` batches.
inline void run_learner_centric(const GridTeachingSetup& s, const ExperimentConfig& cfg, Strategy strategy,
                                std::uint64_t run_seed, ExperimentLog& log) {
    const auto& train = s.dataset->train();
    const std::size_t n = train.size();
    const auto fnames = task_feature_names(s.kind);
    log.kind = mode_name(Mode::LearnerCentric);
    log.strategy = strategy_name(strategy);
    log.seed = run_seed;
    log.extra_columns = {"epoch", "lr", "optimal_fraction"};
    for (const auto& f : fnames) log.extra_columns.push_back("ma_" + f);
    log.rows.clear();
    if (strategy != Strategy::Cur && strategy != Strategy::CurT && strategy != Strategy::CurL && strategy != Strategy::Agn) {
        throw ConfigError(std::string("strategy ") + strategy_name(strategy) + " is not available learner-centric");
    }

    Eigen::VectorXd theta = s.scoring.initial_params(derive_seed(run_seed, "init"));
    Rng rng(derive_seed(run_seed, std::string("learner-") + strategy_name(strategy)));
    std::size_t batches = 0, demos = 0;
    std::size_t last_row_batch = 0;

    // One entry per batch: mean log psi^E, mean log psi^L, mean task features.
    std::deque<std::vector<double>> window;
    auto window_mean = [&](std::size_t j) {
        if (window.empty()) return kMissing;
        double m = 0.0;
        for (const auto& w : window) m += w[j];
        return m / static_cast<double>(window.size());
    };

    auto emit = [&](std::size_t epoch) {
        const auto ev = evaluate_grid(s, theta);
        LogRow row{.t = batches, .demos = demos, .log_psi_e = window_mean(0), .log_psi_l = window_mean(1),
                   .value = ev.mean_reward};
        row.extra = {static_cast<double>(epoch), batches ? cfg.learning_rate.at(batches - 1) : kMissing,
                     ev.optimal_fraction};
        for (std::size_t j = 0; j < fnames.size(); ++j) row.extra.push_back(window_mean(2 + j));
        log.append(std::move(row));
        last_row_batch = batches;
    };
    emit(0);

    for (std::size_t epoch = 1; epoch <= cfg.schedule.epochs; ++epoch) {
        Rng pick_rng(derive_seed(run_seed, "epoch-demo", epoch));
        std::vector<const Demonstration*> chosen(n);
        for (std::size_t i = 0; i < n; ++i) chosen[i] = &train[i].demos[uniform_index(pick_rng, train[i].demos.size())];

        std::vector<double> lpl(n, kMissing);
        if (strategy == Strategy::Cur || strategy == Strategy::CurL) {
            for (std::size_t i = 0; i < n; ++i) lpl[i] = grid_log_psi_l(s, theta, train[i].task, *chosen[i]);
        }
        std::vector<std::size_t> ranking;
        switch (strategy) {
            case Strategy::Cur: ranking = rank_descending(cur_scores(lpl, s.log_psi_e)); break;
            case Strategy::CurL: ranking = rank_descending(lpl); break;
            case Strategy::CurT: {
                std::vector<double> easy(n);
                for (std::size_t i = 0; i < n; ++i) easy[i] = -s.log_psi_e[i];
                ranking = rank_descending(easy);
                break;
            }
            default: {
                ranking.resize(n);
                for (std::size_t i = 0; i < n; ++i) ranking[i] = i;
                shuffle(std::span<std::size_t>(ranking), rng);
            }
        }
        std::vector<std::size_t> subset = schedule(ranking, epoch, cfg.schedule);
        shuffle(std::span<std::size_t>(subset), rng);

        for (std::size_t start = 0; start < subset.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(subset.size(), start + cfg.batch_size);
            Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.size());
            std::vector<double> stats(2 + fnames.size(), 0.0);
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t i = subset[k];
                const Demonstration& d = *chosen[i];
                double nll = 0.0;
                for (const auto& st : d.steps) {
                    nll += crossent_accumulate(s.scoring, theta, grid_input_block(s, train[i].task, st.state), st.action, g);
                }
                stats[0] += s.log_psi_e[i];
                stats[1] += nll;
                for (std::size_t j = 0; j < fnames.size(); ++j) stats[2 + j] += s.features[i][j];
            }
            const double m = static_cast<double>(end - start);
            for (auto& x : stats) x /= m;
            theta = apply_update(theta, g / m, cfg.learning_rate.at(batches));
            if (!theta.allFinite()) {
                throw Error(ErrorCategory::Numerical, "learner parameter diverged at batch " + std::to_string(batches + 1));
            }
            ++batches;
            demos += end - start;
            window.push_back(std::move(stats));
            if (window.size() > cfg.moving_average) window.pop_front();
            if (batches % cfg.eval_every == 0) emit(epoch);
        }
        if (epoch == cfg.schedule.epochs && last_row_batch != batches) emit(epoch);
    }
}

inline ExperimentLog run_learner_centric(const ExperimentConfig& cfg, const grid::Dataset& ds, Strategy strategy,
                                         std::uint64_t run_seed) {
    const auto setup = build_grid_setup(cfg, ds);
    ExperimentLog log;
    run_learner_centric(setup, cfg, strategy, run_seed, log);
    return log;
}

}  // namespace curteach::harness

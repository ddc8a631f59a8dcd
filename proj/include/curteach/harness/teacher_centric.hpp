#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "curteach/curricula/difficulty.hpp"
#include "curteach/curricula/scot.hpp"
#include "curteach/curricula/selection.hpp"
#include "curteach/env/car.hpp"
#include "curteach/harness/config.hpp"
#include "curteach/harness/log.hpp"
#include "curteach/learners/learner.hpp"
#include "curteach/occupancy.hpp"
#include "curteach/probing.hpp"
#include "curteach/trajectory.hpp"

namespace curteach::harness {

/// Everything a teacher-centric run needs that does not depend on the strategy.
struct CarTeachingSetup {
    car::CarEnvironment env;
    /// One candidate per task: the teacher's demonstrations from its start state.
    CandidatePool pool;
    std::vector<double> log_psi_e;
    /// The learner's feature map (raw phi^E or transition-smoothed).
    FeatureMap features;
    LearnerSpec spec;
    std::optional<Eigen::VectorXd> theta_star;
    Eigen::VectorXd theta_init;
    double teacher_value = 0.0;
    std::vector<std::size_t> scot_batch;
};

inline std::string car_task_type(std::size_t task) { return "T" + std::to_string(car::task_type_of_start(task)); }

inline Eigen::VectorXd car_gradient(const CarTeachingSetup& s, const Eigen::VectorXd& theta, const Policy& learner,
                                    std::size_t candidate) {
    const auto& demos = s.pool.sets[candidate];
    if (s.spec.model == LearnerModel::MaxEnt) {
        return maxent_gradient(s.spec.scoring, theta, s.env.mdp, s.features, learner, demos,
                               s.env.start_states[candidate]);
    }
    return crossent_gradient(s.spec.scoring, theta, s.features, demos);
}

inline double car_value(const CarTeachingSetup& s, const Policy& learner) { return policy_value(s.env.mdp, learner); }

/// Builds the environment, samples `demos_per_state` teacher demonstrations per
/// start state, and computes the learner's initial parameter. Pretraining feeds
/// pretrain_steps uniformly drawn candidates of the allowed task types.
inline CarTeachingSetup build_car_setup(const ExperimentConfig& cfg, std::uint64_t run_seed) {
    CarTeachingSetup s;
    s.env = car::build_car_environment({.layout_seed = cfg.layout_seed.value_or(derive_seed(run_seed, "layout")),
                                        .gamma = cfg.car_gamma,
                                        .teacher_temperature = cfg.teacher_temperature});
    const auto& mdp = s.env.mdp;
    std::vector<std::vector<Demonstration>> sets;
    std::vector<long long> labels;
    for (std::size_t task = 0; task < s.env.start_states.size(); ++task) {
        std::vector<Demonstration> set;
        for (std::size_t j = 0; j < cfg.demos_per_state; ++j) {
            set.push_back(sample_trajectory(mdp, s.env.teacher, s.env.start_states[task], car::kRows,
                                            derive_seed(run_seed, "car-demo", task * 100000 + j)));
        }
        sets.push_back(std::move(set));
        labels.push_back(static_cast<long long>(task));
    }
    s.features = cfg.features == "smoothed" ? s.env.smoothed_features : s.env.raw_features;
    s.pool = CandidatePool::build(std::move(sets), std::move(labels), mdp, s.features);
    s.log_psi_e = s.pool.log_difficulties(s.env.teacher);

    s.spec.model = cfg.model;
    s.spec.scoring = ScoringModel(cfg.parameterization, s.features.dim(), car::kActions, cfg.hidden);
    s.spec.learning_rate = cfg.learning_rate;
    s.spec.solver.tol = cfg.solver_tol;
    if (cfg.model == LearnerModel::MaxEnt && cfg.features == "raw") {
        if (cfg.parameterization == Parameterization::Linear) s.theta_star = car::linear_target();
        if (cfg.parameterization == Parameterization::Quadratic) s.theta_star = car::quadratic_target();
        if (s.theta_star) {
            // The squared block scales with the square of its weights.
            const auto d = static_cast<Eigen::Index>(car::kFeatures);
            s.theta_star->head(d) /= cfg.teacher_temperature;
            if (s.theta_star->size() > d) s.theta_star->tail(d) /= std::sqrt(cfg.teacher_temperature);
        }
    }
    s.teacher_value = policy_value(mdp, s.env.teacher);

    s.theta_init = s.spec.scoring.initial_params(derive_seed(run_seed, "init"));
    if (cfg.parameterization == Parameterization::Quadratic && cfg.init_scale > 0.0) {
        Rng rng(derive_seed(run_seed, "init-quadratic"));
        const auto d = static_cast<Eigen::Index>(s.features.dim());
        for (Eigen::Index i = 0; i < d; ++i) s.theta_init[d + i] = cfg.init_scale * normal01(rng);
    }
    if (cfg.initial_knowledge != InitialKnowledge::None) {
        const std::size_t max_type = cfg.initial_knowledge == InitialKnowledge::T0 ? 0 : 3;
        std::vector<std::size_t> allowed;
        for (std::size_t task = 0; task < s.pool.size(); ++task) {
            if (car::task_type_of_start(task) <= max_type) allowed.push_back(task);
        }
        Rng rng(derive_seed(run_seed, "pretrain"));
        std::optional<Eigen::VectorXd> warm;
        for (std::size_t i = 0; i < cfg.pretrain_steps; ++i) {
            auto pol = learner_policy(s.spec, s.theta_init, mdp, s.features, warm);
            warm = pol.values.size() ? std::optional<Eigen::VectorXd>(pol.values) : std::nullopt;
            const auto c = allowed[uniform_index(rng, allowed.size())];
            s.theta_init = apply_update(s.theta_init, car_gradient(s, s.theta_init, pol.policy, c),
                                        s.spec.learning_rate.at(i), s.spec.projection);
        }
    }

    const bool wants_scot = std::find(cfg.strategies.begin(), cfg.strategies.end(), Strategy::Scot) != cfg.strategies.end();
    if (wants_scot) {
        const Eigen::MatrixXd mu = state_feature_expectations(mdp, s.env.teacher, s.env.raw_features);
        std::vector<std::vector<Eigen::VectorXd>> constraints;
        for (const auto& set : s.pool.sets) constraints.push_back(scot_constraints(mdp, s.env.raw_features, mu, set));
        s.scot_batch = scot_greedy_cover(constraints).batch;
    }
    return s;
}

/// Observe, select, update for cfg.steps steps. Row 0 is the initial
/// evaluation; row t holds the pick of step t and the evaluation after it.
/// Rows are appended to `log` as they are produced, so a failure leaves the
/// partial log in place.
inline void run_teacher_centric(const CarTeachingSetup& s, const ExperimentConfig& cfg, Strategy strategy,
                                std::uint64_t run_seed, ExperimentLog& log) {
    const auto& mdp = s.env.mdp;
    log.kind = mode_name(Mode::TeacherCentric);
    log.strategy = strategy_name(strategy);
    log.seed = run_seed;
    log.extra_columns = {"eta", "probe_tv"};
    log.rows.clear();
    if (strategy == Strategy::Omn && !s.theta_star) throw ConfigError("omn needs a known target parameter");

    auto dist = [&](const Eigen::VectorXd& th) { return s.theta_star ? (*s.theta_star - th).norm() : kMissing; };
    Eigen::VectorXd theta = s.theta_init;
    LearnerPolicy pol = learner_policy(s.spec, theta, mdp, s.features);
    log.append({.t = 0, .demos = 0, .theta_dist = dist(theta), .value = car_value(s, pol.policy),
                .extra = {kMissing, kMissing}});

    StalePolicyView view(cfg.probe, derive_seed(run_seed, "probe"));
    Rng rng(derive_seed(run_seed, std::string("teacher-") + strategy_name(strategy)));
    std::size_t scot_pos = 0, demos = 0;
    const std::size_t n = s.pool.size();

    for (std::size_t t = 1; t <= cfg.steps; ++t) {
        const double eta = s.spec.learning_rate.at(t - 1);
        const Policy& seen = view.view(t, mdp, pol.policy);
        const std::vector<double> lpl = s.pool.log_difficulties(seen);
        Selection pick;
        switch (strategy) {
            case Strategy::Cur: pick = cur_select(lpl, s.log_psi_e); break;
            case Strategy::CurT: pick = cur_t_select(s.log_psi_e, cfg.selection, &rng, cfg.selection_temperature); break;
            case Strategy::CurL: pick = cur_l_select(lpl, cfg.selection, &rng, cfg.selection_temperature); break;
            case Strategy::Agn: pick = agn_select(n, rng); break;
            case Strategy::Omn: {
                std::vector<Eigen::VectorXd> grads;
                grads.reserve(n);
                for (std::size_t i = 0; i < n; ++i) grads.push_back(car_gradient(s, theta, pol.policy, i));
                pick = omn_select(grads, *s.theta_star, theta, eta);
                break;
            }
            case Strategy::Bbox: {
                std::vector<Eigen::MatrixXd> vis;
                vis.reserve(n);
                for (std::size_t i = 0; i < n; ++i) {
                    vis.push_back(visitation_frequencies(mdp, seen, {.start = s.env.start_states[i]}));
                }
                pick = bbox_select(vis, s.pool.mean_visitation, mdp.reward());
                break;
            }
            case Strategy::Scot:
                pick = scot_pos < s.scot_batch.size() ? Selection{s.scot_batch[scot_pos++], 0.0} : agn_select(n, rng);
                break;
        }
        const std::size_t c = pick.index;
        theta = apply_update(theta, car_gradient(s, theta, pol.policy, c), eta, s.spec.projection);
        if (!theta.allFinite()) throw Error(ErrorCategory::Numerical, "learner parameter diverged at step " + std::to_string(t));
        pol = learner_policy(s.spec, theta, mdp, s.features, pol.values.size() ? std::optional(pol.values) : std::nullopt);
        demos += s.pool.sets[c].size();
        log.append({.t = t,
                    .demos = demos,
                    .choice = static_cast<long long>(c),
                    .task_type = car_task_type(c),
                    .log_psi_e = s.log_psi_e[c],
                    .log_psi_l = lpl[c],
                    .theta_dist = dist(theta),
                    .value = car_value(s, pol.policy),
                    .extra = {eta, view.last_tv()}});
    }
}

inline ExperimentLog run_teacher_centric(const ExperimentConfig& cfg, Strategy strategy, std::uint64_t run_seed) {
    const auto setup = build_car_setup(cfg, run_seed);
    ExperimentLog log;
    run_teacher_centric(setup, cfg, strategy, run_seed, log);
    return log;
}

/// First t whose value closes `fraction` of the initial gap to the teacher,
/// (V_t - V_0) >= fraction (V^E - V_0); rows.size() when never reached.
/// A run that starts at or above the teacher returns 0.
inline std::size_t steps_to_fraction(const ExperimentLog& log, double teacher_value, double fraction = 0.95) {
    if (log.rows.empty()) throw ValidationError("steps_to_fraction: empty log");
    const double v0 = log.rows.front().value;
    const double gap = teacher_value - v0;
    if (gap <= 0.0) return 0;
    for (const auto& r : log.rows) {
        if (r.value - v0 >= fraction * gap) return r.t;
    }
    return log.rows.size();
}

}  // namespace curteach::harness

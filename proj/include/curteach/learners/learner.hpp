#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "curteach/dynamic_programming.hpp"
#include "curteach/errors.hpp"
#include "curteach/learners/scoring.hpp"
#include "curteach/mdp.hpp"
#include "curteach/numeric.hpp"
#include "curteach/occupancy.hpp"

namespace curteach {

enum class LearnerModel { MaxEnt, CrossEnt };

inline const char* learner_model_name(LearnerModel m) {
    return m == LearnerModel::MaxEnt ? "maxent" : "crossent";
}

inline LearnerModel parse_learner_model(const std::string& s) {
    if (s == "maxent") return LearnerModel::MaxEnt;
    if (s == "crossent") return LearnerModel::CrossEnt;
    throw ValidationError("unknown learner model '" + s + "'");
}

/// eta_t = initial * decay^floor(t / decay_every); decay_every = 0 keeps it constant.
struct LearningRateSchedule {
    double initial = 0.1;
    double decay = 1.0;
    std::size_t decay_every = 0;

    double at(std::size_t step) const {
        if (decay_every == 0) return initial;
        return initial * std::pow(decay, static_cast<double>(step / decay_every));
    }
};

/// Theta = R^D when unbounded, otherwise the box [lower, upper]^D.
struct Projection {
    std::optional<double> lower;
    std::optional<double> upper;

    Eigen::VectorXd apply(Eigen::VectorXd theta) const {
        if (lower) theta = theta.cwiseMax(*lower);
        if (upper) theta = theta.cwiseMin(*upper);
        return theta;
    }
};

struct LearnerSpec {
    LearnerModel model = LearnerModel::MaxEnt;
    ScoringModel scoring;
    LearningRateSchedule learning_rate;
    Projection projection;
    SolverOptions solver{.tol = 1e-8};
};

/// H_theta(s, .) or R_theta(s, .) for every state; terminal rows are zero.
inline Eigen::MatrixXd learner_scores(const ScoringModel& scoring, const Eigen::VectorXd& theta,
                                      const TabularMdp& mdp, const FeatureMap& features) {
    const auto n_states = static_cast<Eigen::Index>(mdp.n_states());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_states, static_cast<Eigen::Index>(mdp.n_actions()));
    for (Eigen::Index s = 0; s < n_states; ++s) {
        if (mdp.is_terminal(static_cast<StateId>(s))) continue;
        out.row(s) = scoring.scores(theta, features.state_block(static_cast<StateId>(s))).transpose();
    }
    return out;
}

struct LearnerPolicy {
    Policy policy;
    /// Soft values for MaxEnt learners, usable as a warm start for the next solve.
    Eigen::VectorXd values;
};

inline LearnerPolicy learner_policy(const LearnerSpec& spec, const Eigen::VectorXd& theta, const TabularMdp& mdp,
                                    const FeatureMap& features,
                                    const std::optional<Eigen::VectorXd>& warm_start = std::nullopt) {
    const Eigen::MatrixXd scores = learner_scores(spec.scoring, theta, mdp, features);
    LearnerPolicy out;
    if (spec.model == LearnerModel::MaxEnt) {
        SolverOptions opts = spec.solver;
        if (warm_start) opts.initial_values = warm_start;
        auto soft = soft_value_iteration(mdp, scores, opts);
        out.policy = std::move(soft.policy);
        out.values = std::move(soft.values);
        return out;
    }
    out.policy.probs.resize(scores.rows(), scores.cols());
    for (Eigen::Index s = 0; s < scores.rows(); ++s) {
        out.policy.probs.row(s) = softmax(scores.row(s).transpose()).transpose();
    }
    return out;
}

/// Mean discounted visitation of a demonstration set.
inline Eigen::MatrixXd mean_demonstration_visitation(std::span<const Demonstration> demos, std::size_t n_states,
                                                     std::size_t n_actions, double gamma) {
    if (demos.empty()) throw ValidationError("empty demonstration set");
    Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_states), static_cast<Eigen::Index>(n_actions));
    for (const auto& d : demos) rho += demonstration_visitation(d, n_states, n_actions, gamma);
    return rho / static_cast<double>(demos.size());
}

/// g = sum_s vjp(theta, x_s, rho^{pi_theta, start}(s,.) - rho^Xi(s,.)).
/// For the linear model this is mu^{pi_theta, start} - mean_xi mu^xi. With no
/// start the learner's occupancy is taken from p0.
inline Eigen::VectorXd maxent_gradient(const ScoringModel& scoring, const Eigen::VectorXd& theta,
                                       const TabularMdp& mdp, const FeatureMap& features, const Policy& learner,
                                       std::span<const Demonstration> demos,
                                       std::optional<StateId> start = std::nullopt) {
    OccupancyOptions occ;
    occ.start = start;
    Eigen::MatrixXd diff = visitation_frequencies(mdp, learner, occ);
    diff -= mean_demonstration_visitation(demos, mdp.n_states(), mdp.n_actions(), mdp.gamma());
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(scoring.param_dim()));
    if (scoring.kind() == Parameterization::Linear) {
        for (Eigen::Index s = 0; s < diff.rows(); ++s) {
            if (diff.row(s).cwiseAbs().maxCoeff() == 0.0) continue;
            g += features.state_block(static_cast<StateId>(s)).transpose() * diff.row(s).transpose();
        }
        return g;
    }
    for (Eigen::Index s = 0; s < diff.rows(); ++s) {
        if (diff.row(s).cwiseAbs().maxCoeff() == 0.0) continue;
        g += scoring.vjp(theta, features.state_block(static_cast<StateId>(s)), diff.row(s).transpose());
    }
    return g;
}

/// -sum_tau log pi(a_tau | s_tau): the policy part of -log P(xi | theta).
inline double policy_negative_log_likelihood(const Policy& policy, const Demonstration& demo) {
    double out = 0.0;
    for (const auto& st : demo.steps) out -= std::log(policy(st.state, st.action));
    return out;
}

/// Cross-entropy loss of one state visit and its gradient contribution:
/// adds vjp(theta, x, softmax(H) - e_a) into `grad` and returns -log softmax(H)_a.
inline double crossent_accumulate(const ScoringModel& scoring, const Eigen::VectorXd& theta,
                                  const Eigen::Ref<const Eigen::MatrixXd>& x, ActionId action,
                                  Eigen::VectorXd& grad) {
    const Eigen::VectorXd h = scoring.scores(theta, x);
    const double lse = log_sum_exp(h);
    Eigen::VectorXd v = (h.array() - lse).exp().matrix();
    v[static_cast<Eigen::Index>(action)] -= 1.0;
    grad += scoring.vjp(theta, x, v);
    return lse - h[static_cast<Eigen::Index>(action)];
}

/// Mean over demos of sum_tau vjp(theta, x_{s_tau}, pi_theta(.|s_tau) - e_{a_tau}).
inline Eigen::VectorXd crossent_gradient(const ScoringModel& scoring, const Eigen::VectorXd& theta,
                                         const FeatureMap& features, std::span<const Demonstration> demos) {
    if (demos.empty()) throw ValidationError("empty demonstration set");
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(scoring.param_dim()));
    for (const auto& d : demos) {
        for (const auto& st : d.steps) crossent_accumulate(scoring, theta, features.state_block(st.state), st.action, g);
    }
    return g / static_cast<double>(demos.size());
}

inline double crossent_loss(const ScoringModel& scoring, const Eigen::VectorXd& theta, const FeatureMap& features,
                            std::span<const Demonstration> demos) {
    double loss = 0.0;
    for (const auto& d : demos) {
        for (const auto& st : d.steps) {
            const Eigen::VectorXd h = scoring.scores(theta, features.state_block(st.state));
            loss += log_sum_exp(h) - h[static_cast<Eigen::Index>(st.action)];
        }
    }
    return loss / static_cast<double>(demos.size());
}

/// theta_{t+1} = Proj[theta_t - eta g_t].
inline Eigen::VectorXd apply_update(const Eigen::VectorXd& theta, const Eigen::VectorXd& g, double eta,
                                    const Projection& projection = {}) {
    if (theta.size() != g.size()) throw ValidationError("apply_update: dimension mismatch");
    return projection.apply(theta - eta * g);
}

}  // namespace curteach

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "curteach/errors.hpp"
#include "curteach/mdp.hpp"
#include "curteach/numeric.hpp"

namespace curteach {

struct SolverOptions {
    double tol = 1e-10;
    std::size_t max_iters = 100000;
    /// Q values within this distance of the maximum count as tied; ties go to
    /// the lowest action index.
    double tie_tol = 1e-9;
    /// Optional initial value table (warm start).
    std::optional<Eigen::VectorXd> initial_values;
};

struct ValueIterationResult {
    Eigen::VectorXd values;
    Eigen::MatrixXd q_values;
    Policy policy;
    std::size_t iterations = 0;
    double residual = 0.0;
};

namespace detail {

inline double expected_next_value(const TabularMdp& mdp, StateId s, ActionId a,
                                  const Eigen::VectorXd& values) {
    double v = 0.0;
    for (const auto& t : mdp.successors(s, a)) v += t.prob * values[static_cast<Eigen::Index>(t.next)];
    return v;
}

/// Sup-norm residual below which the fixed point is within `tol`.
inline double stopping_residual(double gamma, double tol) {
    if (gamma >= 1.0) return tol;
    if (gamma <= 0.0) return kInf;
    return tol * (1.0 - gamma) / gamma;
}

}  // namespace detail

/// Optimal values and the greedy deterministic policy for the MDP's own reward.
/// The greedy action is the lowest-index action whose Q value lies within
/// `tie_tol` of the state's maximum.
inline ValueIterationResult value_iteration(const TabularMdp& mdp, const SolverOptions& options = {}) {
    const auto n_states = static_cast<Eigen::Index>(mdp.n_states());
    const auto n_actions = static_cast<Eigen::Index>(mdp.n_actions());
    if (!(options.tol > 0.0)) throw ValidationError("value_iteration: tol must be positive");

    ValueIterationResult out;
    out.values = options.initial_values.value_or(Eigen::VectorXd::Zero(n_states));
    out.q_values = Eigen::MatrixXd::Zero(n_states, n_actions);
    const double target = detail::stopping_residual(mdp.gamma(), options.tol);

    Eigen::VectorXd next(n_states);
    for (std::size_t it = 1;; ++it) {
        for (Eigen::Index s = 0; s < n_states; ++s) {
            if (mdp.is_terminal(static_cast<StateId>(s))) {
                out.q_values.row(s).setZero();
                next[s] = 0.0;
                continue;
            }
            for (Eigen::Index a = 0; a < n_actions; ++a) {
                out.q_values(s, a) = mdp.reward(static_cast<StateId>(s), static_cast<ActionId>(a)) +
                                     mdp.gamma() * detail::expected_next_value(mdp, static_cast<StateId>(s),
                                                                               static_cast<ActionId>(a),
                                                                               out.values);
            }
            next[s] = out.q_values.row(s).maxCoeff();
        }
        out.residual = (next - out.values).cwiseAbs().maxCoeff();
        out.values.swap(next);
        out.iterations = it;
        if (out.residual <= target) break;
        if (it >= options.max_iters) {
            throw IterationLimitError("value_iteration did not converge", out.residual);
        }
    }
    // One more backup so Q is consistent with the returned values.
    for (Eigen::Index s = 0; s < n_states; ++s) {
        if (mdp.is_terminal(static_cast<StateId>(s))) continue;
        for (Eigen::Index a = 0; a < n_actions; ++a) {
            out.q_values(s, a) = mdp.reward(static_cast<StateId>(s), static_cast<ActionId>(a)) +
                                 mdp.gamma() * detail::expected_next_value(mdp, static_cast<StateId>(s),
                                                                           static_cast<ActionId>(a), out.values);
        }
    }
    out.policy.probs = Eigen::MatrixXd::Zero(n_states, n_actions);
    for (Eigen::Index s = 0; s < n_states; ++s) {
        const double best = out.q_values.row(s).maxCoeff();
        Eigen::Index choice = 0;
        for (Eigen::Index a = 0; a < n_actions; ++a) {
            if (out.q_values(s, a) >= best - options.tie_tol) {
                choice = a;
                break;
            }
        }
        out.policy.probs(s, choice) = 1.0;
    }
    return out;
}

struct SoftValueResult {
    Eigen::VectorXd values;
    Eigen::MatrixXd q_values;
    Policy policy;
    std::size_t iterations = 0;
    double residual = 0.0;
    /// Sup-norm change per sweep; non-increasing for gamma < 1.
    std::vector<double> residual_history;
};

/// Soft-Bellman iteration:
///   Q(s,a) = R(s,a) + gamma * sum_s' T(s'|s,a) V(s'),  V(s) = log sum_a exp Q(s,a),
///   pi(a|s) = exp(Q(s,a) - V(s)).
/// Terminal states end the episode: V = 0 there and their policy row is uniform.
inline SoftValueResult soft_value_iteration(const TabularMdp& mdp, const Eigen::MatrixXd& reward,
                                            const SolverOptions& options = {}) {
    const auto n_states = static_cast<Eigen::Index>(mdp.n_states());
    const auto n_actions = static_cast<Eigen::Index>(mdp.n_actions());
    if (reward.rows() != n_states || reward.cols() != n_actions) {
        throw ValidationError("soft_value_iteration: reward shape mismatch");
    }
    if (!(options.tol > 0.0)) throw ValidationError("soft_value_iteration: tol must be positive");

    SoftValueResult out;
    out.values = options.initial_values.value_or(Eigen::VectorXd::Zero(n_states));
    for (Eigen::Index s = 0; s < n_states; ++s) {
        if (mdp.is_terminal(static_cast<StateId>(s))) out.values[s] = 0.0;
    }
    out.q_values = Eigen::MatrixXd::Zero(n_states, n_actions);
    const double target = detail::stopping_residual(mdp.gamma(), options.tol);

    auto backup = [&](const Eigen::VectorXd& values, Eigen::VectorXd& next) {
        for (Eigen::Index s = 0; s < n_states; ++s) {
            if (mdp.is_terminal(static_cast<StateId>(s))) {
                out.q_values.row(s).setZero();
                next[s] = 0.0;
                continue;
            }
            for (Eigen::Index a = 0; a < n_actions; ++a) {
                out.q_values(s, a) = reward(s, a) + mdp.gamma() * detail::expected_next_value(
                                                                      mdp, static_cast<StateId>(s),
                                                                      static_cast<ActionId>(a), values);
            }
            next[s] = log_sum_exp(out.q_values.row(s).transpose());
        }
    };

    Eigen::VectorXd next(n_states);
    for (std::size_t it = 1;; ++it) {
        backup(out.values, next);
        out.residual = (next - out.values).cwiseAbs().maxCoeff();
        out.residual_history.push_back(out.residual);
        out.values.swap(next);
        out.iterations = it;
        if (!std::isfinite(out.residual)) {
            throw IterationLimitError("soft_value_iteration diverged", out.residual);
        }
        if (out.residual <= target) break;
        if (it >= options.max_iters) {
            throw IterationLimitError("soft_value_iteration did not converge", out.residual);
        }
    }
    backup(out.values, next);

    out.policy.probs.resize(n_states, n_actions);
    for (Eigen::Index s = 0; s < n_states; ++s) {
        if (mdp.is_terminal(static_cast<StateId>(s))) {
            out.policy.probs.row(s).setConstant(1.0 / static_cast<double>(n_actions));
            continue;
        }
        out.policy.probs.row(s) = softmax(out.q_values.row(s).transpose()).transpose();
    }
    return out;
}

}  // namespace curteach

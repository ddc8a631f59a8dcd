#pragma once

#include <cmath>
#include <optional>

#include <Eigen/Dense>

#include "curteach/errors.hpp"
#include "curteach/mdp.hpp"

namespace curteach {

struct OccupancyOptions {
    /// Overrides p0 with a point mass (teaching-over-states variant).
    std::optional<StateId> start;
    /// Maximum number of decision steps; unset means run until the tail is below tol.
    std::optional<std::size_t> horizon;
    double tol = 1e-10;
    std::size_t max_steps = 1000000;
};

/// Discounted state-action occupancy
///   rho(s,a) = sum_tau gamma^tau P(S_tau = s) pi(a|s),
/// with mass entering a terminal state removed. Propagation stops once the
/// remaining discounted mass is provably below `tol` or the horizon is reached.
inline Eigen::MatrixXd visitation_frequencies(const TabularMdp& mdp, const Policy& policy,
                                              const OccupancyOptions& options = {}) {
    const auto n_states = static_cast<Eigen::Index>(mdp.n_states());
    const auto n_actions = static_cast<Eigen::Index>(mdp.n_actions());
    if (policy.probs.rows() != n_states || policy.probs.cols() != n_actions) {
        throw ValidationError("visitation_frequencies: policy shape mismatch");
    }
    Eigen::VectorXd dist;
    if (options.start) {
        if (*options.start >= mdp.n_states()) throw ValidationError("start state out of range");
        dist = Eigen::VectorXd::Zero(n_states);
        dist[static_cast<Eigen::Index>(*options.start)] = 1.0;
    } else {
        dist = mdp.p0();
    }
    const double gamma = mdp.gamma();
    Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(n_states, n_actions);
    Eigen::VectorXd next(n_states);
    double discount = 1.0;
    for (std::size_t tau = 0;; ++tau) {
        if (options.horizon && tau >= *options.horizon) break;
        if (tau >= options.max_steps) {
            throw IterationLimitError("visitation_frequencies: occupancy did not vanish", dist.sum());
        }
        for (Eigen::Index s = 0; s < n_states; ++s) {
            if (mdp.is_terminal(static_cast<StateId>(s))) dist[s] = 0.0;
        }
        const double mass = dist.sum();
        if (mass <= 0.0) break;
        if (!options.horizon) {
            const double tail = gamma < 1.0 ? discount * mass / (1.0 - gamma) : mass;
            if (tail < options.tol) break;
        }
        next.setZero();
        for (Eigen::Index s = 0; s < n_states; ++s) {
            const double ds = dist[s];
            if (ds == 0.0) continue;
            for (Eigen::Index a = 0; a < n_actions; ++a) {
                const double w = ds * policy.probs(s, a);
                if (w == 0.0) continue;
                rho(s, a) += discount * w;
                for (const auto& t : mdp.successors(static_cast<StateId>(s), static_cast<ActionId>(a))) {
                    next[static_cast<Eigen::Index>(t.next)] += w * t.prob;
                }
            }
        }
        dist.swap(next);
        discount *= gamma;
    }
    return rho;
}

/// mu = sum_{s,a} rho(s,a) phi(s,a) for a precomputed occupancy.
inline Eigen::VectorXd features_from_occupancy(const Eigen::MatrixXd& rho, const FeatureMap& features) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(features.dim()));
    for (Eigen::Index s = 0; s < rho.rows(); ++s) {
        for (Eigen::Index a = 0; a < rho.cols(); ++a) {
            if (rho(s, a) != 0.0) {
                mu += rho(s, a) * features.row(static_cast<StateId>(s), static_cast<ActionId>(a)).transpose();
            }
        }
    }
    return mu;
}

/// Feature expectation mu^pi (or mu^{pi,s} when options.start is set).
inline Eigen::VectorXd feature_expectation(const TabularMdp& mdp, const Policy& policy,
                                           const FeatureMap& features, const OccupancyOptions& options = {}) {
    return features_from_occupancy(visitation_frequencies(mdp, policy, options), features);
}

/// Row s holds mu^{pi,s}, the feature expectation when starting in s; terminal rows are zero.
inline Eigen::MatrixXd state_feature_expectations(const TabularMdp& mdp, const Policy& policy,
                                                  const FeatureMap& features, double tol = 1e-10,
                                                  std::size_t max_iters = 100000) {
    const auto n_states = static_cast<Eigen::Index>(mdp.n_states());
    const auto dim = static_cast<Eigen::Index>(features.dim());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_states, dim);
    Eigen::MatrixXd next(n_states, dim);
    for (std::size_t it = 0;; ++it) {
        next.setZero();
        for (Eigen::Index s = 0; s < n_states; ++s) {
            if (mdp.is_terminal(static_cast<StateId>(s))) continue;
            for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(mdp.n_actions()); ++a) {
                const double p = policy.probs(s, a);
                if (p == 0.0) continue;
                Eigen::VectorXd row = features.row(static_cast<StateId>(s), static_cast<ActionId>(a)).transpose();
                for (const auto& t : mdp.successors(static_cast<StateId>(s), static_cast<ActionId>(a))) {
                    row += mdp.gamma() * t.prob * m.row(static_cast<Eigen::Index>(t.next)).transpose();
                }
                next.row(s) += p * row.transpose();
            }
        }
        const double residual = (next - m).cwiseAbs().maxCoeff();
        m.swap(next);
        if (residual <= tol) break;
        if (it >= max_iters) throw IterationLimitError("state_feature_expectations did not converge", residual);
    }
    return m;
}

/// mu^{pi}_{(s,a)}: features of taking a in s and following pi afterwards.
inline Eigen::VectorXd action_feature_expectation(const TabularMdp& mdp, const FeatureMap& features,
                                                  const Eigen::MatrixXd& state_mu, StateId s, ActionId a) {
    Eigen::VectorXd out = features.row(s, a).transpose();
    for (const auto& t : mdp.successors(s, a)) {
        out += mdp.gamma() * t.prob * state_mu.row(static_cast<Eigen::Index>(t.next)).transpose();
    }
    return out;
}

/// V^pi = sum_{s,a} rho(s,a) R^E(s,a).
inline double policy_value(const TabularMdp& mdp, const Policy& policy, const OccupancyOptions& options = {}) {
    return visitation_frequencies(mdp, policy, options).cwiseProduct(mdp.reward()).sum();
}

}  // namespace curteach

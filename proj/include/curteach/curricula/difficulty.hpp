#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "curteach/errors.hpp"
#include "curteach/mdp.hpp"
#include "curteach/numeric.hpp"

namespace curteach {

/// log Psi(xi) = -sum_tau log pi(a_tau | s_tau). Always >= 0, +inf when the
/// policy never takes one of the demonstrated actions.
inline double log_difficulty(const Policy& policy, const Demonstration& demo) {
    double out = 0.0;
    for (const auto& st : demo.steps) {
        const double p = policy(st.state, st.action);
        if (p <= 0.0) return kInf;
        out -= std::log(p);
    }
    return out;
}

/// log of the arithmetic mean of Psi over a demonstration set.
inline double log_mean_difficulty(const Policy& policy, std::span<const Demonstration> demos) {
    if (demos.empty()) throw ValidationError("log_mean_difficulty: empty set");
    std::vector<double> logs;
    logs.reserve(demos.size());
    for (const auto& d : demos) logs.push_back(log_difficulty(policy, d));
    return log_sum_exp(logs) - std::log(static_cast<double>(demos.size()));
}

/// Candidate demonstration sets with cached statistics. A single demonstration
/// is a set of size one; teaching over states uses one set per start state.
struct CandidatePool {
    std::vector<std::vector<Demonstration>> sets;
    /// Opaque label per entry (start state, task id, ...), carried into logs.
    std::vector<long long> labels;
    std::vector<Eigen::VectorXd> mean_features;
    std::vector<Eigen::MatrixXd> mean_visitation;

    std::size_t size() const noexcept { return sets.size(); }

    static CandidatePool build(std::vector<std::vector<Demonstration>> sets, std::vector<long long> labels,
                               const TabularMdp& mdp, const FeatureMap& features) {
        if (sets.empty()) throw ValidationError("CandidatePool: no candidates");
        if (labels.size() != sets.size()) throw ValidationError("CandidatePool: label count mismatch");
        CandidatePool pool;
        pool.sets = std::move(sets);
        pool.labels = std::move(labels);
        const auto S = static_cast<Eigen::Index>(mdp.n_states());
        const auto A = static_cast<Eigen::Index>(mdp.n_actions());
        for (const auto& set : pool.sets) {
            if (set.empty()) throw ValidationError("CandidatePool: empty demonstration set");
            Eigen::VectorXd mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(features.dim()));
            Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(S, A);
            for (const auto& d : set) {
                validate_demonstration(mdp, d);
                mu += demonstration_features(d, features, mdp.gamma());
                rho += demonstration_visitation(d, mdp.n_states(), mdp.n_actions(), mdp.gamma());
            }
            pool.mean_features.push_back(mu / static_cast<double>(set.size()));
            pool.mean_visitation.push_back(rho / static_cast<double>(set.size()));
        }
        return pool;
    }

    /// log mean Psi of every entry under `policy`.
    std::vector<double> log_difficulties(const Policy& policy) const {
        std::vector<double> out;
        out.reserve(sets.size());
        for (const auto& set : sets) out.push_back(log_mean_difficulty(policy, set));
        return out;
    }
};

}  // namespace curteach

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "curteach/errors.hpp"
#include "curteach/mdp.hpp"
#include "curteach/numeric.hpp"
#include "curteach/random.hpp"

namespace curteach {

/// Roll out `policy` from `start` for at most `horizon` steps, stopping early
/// when a terminal state is entered. The same seed yields the same trajectory.
inline Demonstration sample_trajectory(const TabularMdp& mdp, const Policy& policy, StateId start,
                                       std::size_t horizon, std::uint64_t seed,
                                       bool allow_any_start = false) {
    if (horizon < 1) throw ValidationError("sample_trajectory: horizon must be >= 1");
    if (start >= mdp.n_states()) throw ValidationError("sample_trajectory: start out of range");
    if (!allow_any_start && mdp.p0()[static_cast<Eigen::Index>(start)] <= 0.0) {
        throw ValidationError("sample_trajectory: start state has zero initial probability");
    }
    Rng rng(seed);
    Demonstration demo;
    demo.start = start;
    StateId s = start;
    std::vector<double> weights;
    for (std::size_t tau = 0; tau < horizon && !mdp.is_terminal(s); ++tau) {
        const auto row = policy.probs.row(static_cast<Eigen::Index>(s));
        weights.resize(static_cast<std::size_t>(row.size()));
        for (Eigen::Index a = 0; a < row.size(); ++a) weights[static_cast<std::size_t>(a)] = row[a];
        const ActionId a = sample_categorical(rng, weights);
        demo.steps.push_back({s, a});
        const auto succ = mdp.successors(s, a);
        weights.resize(succ.size());
        for (std::size_t k = 0; k < succ.size(); ++k) weights[k] = succ[k].prob;
        s = succ[sample_categorical(rng, weights)].next;
    }
    demo.end = s;
    return demo;
}

/// log P(xi | pi) = log P0(s0) + sum_tau [log pi(a|s) + log T(s'|s,a)].
/// Zero policy or initial probability yields -inf; a zero-probability
/// transition means the trajectory is inconsistent with the dynamics.
inline double trajectory_log_likelihood(const TabularMdp& mdp, const Policy& policy, const Demonstration& demo,
                                        bool include_initial = true) {
    validate_demonstration(mdp, demo);
    double ll = 0.0;
    if (include_initial) {
        const double p = mdp.p0()[static_cast<Eigen::Index>(demo.start)];
        ll += p > 0.0 ? std::log(p) : -kInf;
    }
    for (std::size_t i = 0; i < demo.steps.size(); ++i) {
        const auto& st = demo.steps[i];
        const double pa = policy(st.state, st.action);
        ll += pa > 0.0 ? std::log(pa) : -kInf;
        std::optional<StateId> next = i + 1 < demo.steps.size() ? std::optional(demo.steps[i + 1].state) : demo.end;
        if (next) ll += std::log(mdp.transition_prob(st.state, st.action, *next));
    }
    return ll;
}

/// Every trajectory from `start` with positive transition probability, branching
/// over all actions, truncated at terminal states or after `horizon` steps.
inline std::vector<Demonstration> enumerate_trajectories(const TabularMdp& mdp, StateId start,
                                                         std::size_t horizon,
                                                         std::size_t max_count = 1000000) {
    std::vector<Demonstration> out;
    Demonstration current;
    current.start = start;
    std::function<void(StateId)> visit = [&](StateId s) {
        if (mdp.is_terminal(s) || current.steps.size() >= horizon) {
            if (out.size() >= max_count) throw ValidationError("enumerate_trajectories: too many trajectories");
            Demonstration done = current;
            done.end = s;
            out.push_back(std::move(done));
            return;
        }
        for (ActionId a = 0; a < mdp.n_actions(); ++a) {
            for (const auto& t : mdp.successors(s, a)) {
                if (t.prob <= 0.0) continue;
                current.steps.push_back({s, a});
                visit(t.next);
                current.steps.pop_back();
            }
        }
    };
    visit(start);
    return out;
}

}  // namespace curteach

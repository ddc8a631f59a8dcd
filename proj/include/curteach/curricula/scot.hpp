#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "curteach/mdp.hpp"
#include "curteach/occupancy.hpp"

namespace curteach {

struct ScotResult {
    /// Candidate indices in the order the greedy cover picked them.
    std::vector<std::size_t> batch;
    std::size_t n_constraints = 0;
    /// Constraint vectors dropped because their norm was below tolerance.
    std::size_t n_degenerate = 0;
};

/// Halfspace normals mu^E_{(s,a)} - mu^E_{(s,b)} for every demonstrated (s, a)
/// and every alternative action b, using the teacher's per-state feature
/// expectations `teacher_state_mu`.
inline std::vector<Eigen::VectorXd> scot_constraints(const TabularMdp& mdp, const FeatureMap& features,
                                                     const Eigen::MatrixXd& teacher_state_mu,
                                                     std::span<const Demonstration> demos) {
    std::vector<Eigen::VectorXd> out;
    for (const auto& d : demos) {
        for (const auto& st : d.steps) {
            const Eigen::VectorXd taken = action_feature_expectation(mdp, features, teacher_state_mu, st.state, st.action);
            for (ActionId b = 0; b < mdp.n_actions(); ++b) {
                if (b == st.action) continue;
                out.push_back(taken - action_feature_expectation(mdp, features, teacher_state_mu, st.state, b));
            }
        }
    }
    return out;
}

/// Greedy set cover. Constraints are normalized and merged when their
/// directions agree within `tol` (sup norm); each candidate covers the merged
/// constraints it produces. Candidates are added by largest marginal coverage,
/// lowest index on ties, until every constraint is covered.
inline ScotResult scot_greedy_cover(const std::vector<std::vector<Eigen::VectorXd>>& candidate_constraints,
                                    double tol = 1e-8) {
    ScotResult out;
    std::vector<Eigen::VectorXd> universe;
    std::vector<std::vector<std::size_t>> covers(candidate_constraints.size());
    for (std::size_t c = 0; c < candidate_constraints.size(); ++c) {
        for (const auto& v : candidate_constraints[c]) {
            const double n = v.norm();
            if (n < tol) {
                ++out.n_degenerate;
                continue;
            }
            const Eigen::VectorXd u = v / n;
            std::size_t id = universe.size();
            for (std::size_t k = 0; k < universe.size(); ++k) {
                if ((universe[k] - u).cwiseAbs().maxCoeff() < tol) {
                    id = k;
                    break;
                }
            }
            if (id == universe.size()) universe.push_back(u);
            covers[c].push_back(id);
        }
    }
    for (auto& cv : covers) {
        std::sort(cv.begin(), cv.end());
        cv.erase(std::unique(cv.begin(), cv.end()), cv.end());
    }
    out.n_constraints = universe.size();
    std::vector<bool> covered(universe.size(), false);
    std::vector<bool> used(covers.size(), false);
    std::size_t remaining = universe.size();
    while (remaining > 0) {
        std::size_t best = covers.size(), best_gain = 0;
        for (std::size_t c = 0; c < covers.size(); ++c) {
            if (used[c]) continue;
            std::size_t gain = 0;
            for (auto id : covers[c]) gain += covered[id] ? 0 : 1;
            if (gain > best_gain) {
                best = c;
                best_gain = gain;
            }
        }
        if (best == covers.size()) break;
        used[best] = true;
        out.batch.push_back(best);
        for (auto id : covers[best]) {
            if (!covered[id]) {
                covered[id] = true;
                --remaining;
            }
        }
    }
    if (out.batch.empty() && !covers.empty()) out.batch.push_back(0);
    return out;
}

}  // namespace curteach

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "curteach/errors.hpp"

namespace curteach {

using StateId = std::size_t;
using ActionId = std::size_t;

struct Transition {
    StateId next = 0;
    double prob = 0.0;

    friend bool operator==(const Transition&, const Transition&) = default;
};

/// Finite MDP with sparse transitions stored row-major over (state, action).
///
/// Terminal states are absorbing with zero reward. Every algorithm in this
/// library treats entering a terminal state as the end of an episode: no
/// occupancy mass, feature mass, or soft value accrues there.
class TabularMdp {
public:
    TabularMdp() = default;

    /// `rows[s * n_actions + a]` lists the successors of (s, a).
    TabularMdp(std::size_t n_states, std::size_t n_actions,
               const std::vector<std::vector<Transition>>& rows, double gamma,
               Eigen::VectorXd p0, Eigen::MatrixXd reward, std::vector<bool> terminal)
        : n_states_(n_states),
          n_actions_(n_actions),
          gamma_(gamma),
          p0_(std::move(p0)),
          reward_(std::move(reward)),
          terminal_(std::move(terminal)) {
        if (rows.size() != n_states * n_actions) {
            throw ValidationError("transition rows must number n_states * n_actions");
        }
        offsets_.reserve(rows.size() + 1);
        offsets_.push_back(0);
        for (const auto& row : rows) {
            successors_.insert(successors_.end(), row.begin(), row.end());
            offsets_.push_back(successors_.size());
        }
        validate();
    }

    std::size_t n_states() const noexcept { return n_states_; }
    std::size_t n_actions() const noexcept { return n_actions_; }
    double gamma() const noexcept { return gamma_; }
    const Eigen::VectorXd& p0() const noexcept { return p0_; }
    const Eigen::MatrixXd& reward() const noexcept { return reward_; }
    double reward(StateId s, ActionId a) const { return reward_(s, a); }
    bool is_terminal(StateId s) const { return terminal_[s]; }
    const std::vector<bool>& terminal_mask() const noexcept { return terminal_; }

    std::span<const Transition> successors(StateId s, ActionId a) const {
        const std::size_t row = s * n_actions_ + a;
        return {successors_.data() + offsets_[row], offsets_[row + 1] - offsets_[row]};
    }

    double transition_prob(StateId s, ActionId a, StateId next) const {
        double p = 0.0;
        for (const auto& t : successors(s, a)) {
            if (t.next == next) p += t.prob;
        }
        return p;
    }

    bool is_deterministic() const {
        for (std::size_t row = 0; row + 1 < offsets_.size(); ++row) {
            std::size_t positive = 0;
            for (std::size_t k = offsets_[row]; k < offsets_[row + 1]; ++k) {
                if (successors_[k].prob > 0.0) ++positive;
            }
            if (positive != 1) return false;
        }
        return true;
    }

    /// Copy with a different reward table (same dynamics).
    TabularMdp with_reward(Eigen::MatrixXd reward) const {
        TabularMdp copy = *this;
        copy.reward_ = std::move(reward);
        copy.validate();
        return copy;
    }

    TabularMdp with_gamma(double gamma) const {
        TabularMdp copy = *this;
        copy.gamma_ = gamma;
        copy.validate();
        return copy;
    }

    TabularMdp with_initial_distribution(Eigen::VectorXd p0) const {
        TabularMdp copy = *this;
        copy.p0_ = std::move(p0);
        copy.validate();
        return copy;
    }

    friend bool operator==(const TabularMdp& a, const TabularMdp& b) {
        return a.n_states_ == b.n_states_ && a.n_actions_ == b.n_actions_ && a.gamma_ == b.gamma_ &&
               a.p0_ == b.p0_ && a.reward_ == b.reward_ && a.terminal_ == b.terminal_ &&
               a.offsets_ == b.offsets_ && a.successors_ == b.successors_;
    }

private:
    void validate() const {
        constexpr double kTol = 1e-12;
        if (n_states_ == 0 || n_actions_ == 0) throw ValidationError("MDP needs states and actions");
        // gamma == 1 is admitted for episodic tasks; callers bound the horizon.
        if (!(gamma_ >= 0.0 && gamma_ <= 1.0)) throw ValidationError("gamma must lie in [0, 1]");
        if (static_cast<std::size_t>(p0_.size()) != n_states_) throw ValidationError("p0 size mismatch");
        if (reward_.rows() != static_cast<Eigen::Index>(n_states_) ||
            reward_.cols() != static_cast<Eigen::Index>(n_actions_)) {
            throw ValidationError("reward table shape mismatch");
        }
        if (terminal_.size() != n_states_) throw ValidationError("terminal mask size mismatch");
        if ((p0_.array() < 0.0).any() || std::abs(p0_.sum() - 1.0) > kTol) {
            throw ValidationError("p0 must be a probability distribution");
        }
        if (!reward_.allFinite()) throw ValidationError("reward table must be finite");
        for (StateId s = 0; s < n_states_; ++s) {
            for (ActionId a = 0; a < n_actions_; ++a) {
                double total = 0.0;
                for (const auto& t : successors(s, a)) {
                    if (t.next >= n_states_) throw ValidationError("successor index out of range");
                    if (!(t.prob >= 0.0)) throw ValidationError("negative transition probability");
                    total += t.prob;
                }
                if (std::abs(total - 1.0) > kTol) {
                    throw ValidationError("transition row (" + std::to_string(s) + ", " +
                                          std::to_string(a) + ") does not sum to 1");
                }
                if (terminal_[s]) {
                    if (transition_prob(s, a, s) < 1.0 - kTol) {
                        throw ValidationError("terminal state " + std::to_string(s) + " is not absorbing");
                    }
                    if (reward_(s, a) != 0.0) {
                        throw ValidationError("terminal state " + std::to_string(s) + " has nonzero reward");
                    }
                }
            }
        }
    }

    std::size_t n_states_ = 0;
    std::size_t n_actions_ = 0;
    double gamma_ = 0.0;
    Eigen::VectorXd p0_;
    Eigen::MatrixXd reward_;
    std::vector<bool> terminal_;
    std::vector<std::size_t> offsets_;
    std::vector<Transition> successors_;
};

/// Stochastic policy table pi(a|s), one row per state.
struct Policy {
    Eigen::MatrixXd probs;

    std::size_t n_states() const { return static_cast<std::size_t>(probs.rows()); }
    std::size_t n_actions() const { return static_cast<std::size_t>(probs.cols()); }
    double operator()(StateId s, ActionId a) const { return probs(s, a); }

    static Policy uniform(std::size_t n_states, std::size_t n_actions) {
        return {Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n_states),
                                          static_cast<Eigen::Index>(n_actions),
                                          1.0 / static_cast<double>(n_actions))};
    }

    static Policy deterministic(std::span<const ActionId> actions, std::size_t n_actions) {
        Policy p{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(actions.size()),
                                       static_cast<Eigen::Index>(n_actions))};
        for (std::size_t s = 0; s < actions.size(); ++s) p.probs(s, actions[s]) = 1.0;
        return p;
    }

    void validate(double tol = 1e-10) const {
        if ((probs.array() < 0.0).any()) throw ValidationError("policy has negative entries");
        for (Eigen::Index s = 0; s < probs.rows(); ++s) {
            if (std::abs(probs.row(s).sum() - 1.0) > tol) {
                throw ValidationError("policy row " + std::to_string(s) + " does not sum to 1");
            }
        }
    }
};

/// Feature table phi(s, a) in R^dim, stored as rows indexed s * n_actions + a.
class FeatureMap {
public:
    FeatureMap() = default;

    FeatureMap(std::size_t n_states, std::size_t n_actions, Eigen::MatrixXd table)
        : n_states_(n_states), n_actions_(n_actions), table_(std::move(table)) {
        if (table_.rows() != static_cast<Eigen::Index>(n_states * n_actions)) {
            throw ValidationError("feature table must have n_states * n_actions rows");
        }
        if (!table_.allFinite()) throw ValidationError("feature table must be finite");
    }

    /// phi(s, a) = state_features.row(s) for every action.
    static FeatureMap action_independent(const Eigen::MatrixXd& state_features, std::size_t n_actions) {
        const auto n_states = static_cast<std::size_t>(state_features.rows());
        Eigen::MatrixXd table(static_cast<Eigen::Index>(n_states * n_actions), state_features.cols());
        for (std::size_t s = 0; s < n_states; ++s) {
            for (std::size_t a = 0; a < n_actions; ++a) {
                table.row(static_cast<Eigen::Index>(s * n_actions + a)) = state_features.row(s);
            }
        }
        return FeatureMap(n_states, n_actions, std::move(table));
    }

    /// phi(s, a) = E_{s' ~ T(.|s,a)} [state_features(s')].
    static FeatureMap transition_smoothed(const TabularMdp& mdp, const Eigen::MatrixXd& state_features) {
        const std::size_t n_states = mdp.n_states();
        const std::size_t n_actions = mdp.n_actions();
        Eigen::MatrixXd table = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_states * n_actions),
                                                      state_features.cols());
        for (StateId s = 0; s < n_states; ++s) {
            for (ActionId a = 0; a < n_actions; ++a) {
                auto row = table.row(static_cast<Eigen::Index>(s * n_actions + a));
                for (const auto& t : mdp.successors(s, a)) row += t.prob * state_features.row(t.next);
            }
        }
        return FeatureMap(n_states, n_actions, std::move(table));
    }

    std::size_t n_states() const noexcept { return n_states_; }
    std::size_t n_actions() const noexcept { return n_actions_; }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(table_.cols()); }
    const Eigen::MatrixXd& table() const noexcept { return table_; }

    auto row(StateId s, ActionId a) const {
        return table_.row(static_cast<Eigen::Index>(s * n_actions_ + a));
    }

    /// The n_actions x dim block of features available at state s.
    auto state_block(StateId s) const {
        return table_.middleRows(static_cast<Eigen::Index>(s * n_actions_),
                                 static_cast<Eigen::Index>(n_actions_));
    }

private:
    std::size_t n_states_ = 0;
    std::size_t n_actions_ = 0;
    Eigen::MatrixXd table_;
};

struct StateAction {
    StateId state = 0;
    ActionId action = 0;

    friend bool operator==(const StateAction&, const StateAction&) = default;
};

/// A state-action trajectory. `end` is the state reached after the last step
/// (a terminal state, or wherever the horizon cut the rollout) when known.
struct Demonstration {
    StateId start = 0;
    std::vector<StateAction> steps;
    std::optional<StateId> end;

    std::size_t length() const noexcept { return steps.size(); }

    friend bool operator==(const Demonstration&, const Demonstration&) = default;
};

/// Checks structural consistency against the dynamics.
inline void validate_demonstration(const TabularMdp& mdp, const Demonstration& demo,
                                   std::optional<std::size_t> horizon = std::nullopt) {
    if (demo.start >= mdp.n_states()) throw ValidationError("demonstration start out of range");
    if (!demo.steps.empty() && demo.steps.front().state != demo.start) {
        throw ValidationError("demonstration start does not match its first step");
    }
    if (horizon && demo.steps.size() > *horizon) throw ValidationError("demonstration exceeds horizon");
    for (std::size_t i = 0; i < demo.steps.size(); ++i) {
        const auto& st = demo.steps[i];
        if (st.state >= mdp.n_states() || st.action >= mdp.n_actions()) {
            throw ValidationError("demonstration step out of range");
        }
        std::optional<StateId> next;
        if (i + 1 < demo.steps.size()) {
            next = demo.steps[i + 1].state;
        } else {
            next = demo.end;
        }
        if (next && mdp.transition_prob(st.state, st.action, *next) <= 0.0) {
            throw ValidationError("demonstration step " + std::to_string(i) +
                                  " follows a zero-probability transition");
        }
    }
}

/// Discounted feature sum mu^xi = sum_tau gamma^tau phi(s_tau, a_tau).
inline Eigen::VectorXd demonstration_features(const Demonstration& demo, const FeatureMap& features,
                                              double gamma) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(features.dim()));
    double discount = 1.0;
    for (const auto& st : demo.steps) {
        mu += discount * features.row(st.state, st.action).transpose();
        discount *= gamma;
    }
    return mu;
}

/// Discounted empirical visitation of a demonstration as a dense S x A table.
inline Eigen::MatrixXd demonstration_visitation(const Demonstration& demo, std::size_t n_states,
                                                std::size_t n_actions, double gamma) {
    Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_states),
                                                static_cast<Eigen::Index>(n_actions));
    double discount = 1.0;
    for (const auto& st : demo.steps) {
        rho(st.state, st.action) += discount;
        discount *= gamma;
    }
    return rho;
}

}  // namespace curteach

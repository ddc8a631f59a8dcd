#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "curteach/errors.hpp"
#include "curteach/mdp.hpp"
#include "curteach/random.hpp"

namespace curteach::theory {

struct LayeredSpec {
    /// Total states including the single terminal sink.
    std::size_t n_states = 8;
    std::size_t n_actions = 3;
    /// Decision steps per episode; every trajectory has exactly this length.
    std::size_t depth = 4;
    std::size_t feature_dim = 4;
    std::uint64_t seed = 0;
    double gamma = 1.0;
};

/// Deterministic episodic MDP with a single start state.
struct LayeredInstance {
    TabularMdp mdp;
    FeatureMap features;
    StateId start = 0;
    std::size_t depth = 0;
};

/// Random layered DAG: the start state forms layer 0, the remaining
/// non-terminal states are spread over layers 1..depth-1, each (s, a) moves
/// deterministically to a random state of the next layer, and the last layer
/// exits into the terminal sink. Features are i.i.d. uniform in [0, 1).
inline LayeredInstance random_layered_mdp(const LayeredSpec& spec) {
    const std::size_t non_terminal = spec.n_states - 1;
    if (spec.n_states < 2 || spec.depth < 1 || non_terminal < spec.depth) {
        throw ValidationError("random_layered_mdp: need at least one state per layer plus the sink");
    }
    Rng rng(spec.seed);
    std::vector<std::vector<StateId>> layers(spec.depth);
    layers[0].push_back(0);
    StateId next_id = 1;
    for (std::size_t k = 1; k < spec.depth; ++k) layers[k].push_back(next_id++);
    while (next_id < non_terminal) {
        const std::size_t k = spec.depth > 1 ? 1 + uniform_index(rng, spec.depth - 1) : 0;
        layers[k].push_back(next_id++);
    }
    const StateId sink = non_terminal;
    const std::size_t A = spec.n_actions;
    std::vector<std::vector<Transition>> rows(spec.n_states * A);
    for (std::size_t k = 0; k < spec.depth; ++k) {
        for (StateId s : layers[k]) {
            for (ActionId a = 0; a < A; ++a) {
                StateId target = sink;
                if (k + 1 < spec.depth) target = layers[k + 1][uniform_index(rng, layers[k + 1].size())];
                rows[s * A + a] = {{target, 1.0}};
            }
        }
    }
    for (ActionId a = 0; a < A; ++a) rows[sink * A + a] = {{sink, 1.0}};

    const auto S = static_cast<Eigen::Index>(spec.n_states);
    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(S);
    p0[0] = 1.0;
    std::vector<bool> terminal(spec.n_states, false);
    terminal[sink] = true;
    Eigen::MatrixXd table(S * static_cast<Eigen::Index>(A), static_cast<Eigen::Index>(spec.feature_dim));
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
        for (Eigen::Index c = 0; c < table.cols(); ++c) table(r, c) = uniform01(rng);
    }
    // The sink carries no features.
    table.bottomRows(static_cast<Eigen::Index>(A)).setZero();

    LayeredInstance inst;
    inst.mdp = TabularMdp(spec.n_states, A, rows, spec.gamma, std::move(p0),
                          Eigen::MatrixXd::Zero(S, static_cast<Eigen::Index>(A)), std::move(terminal));
    inst.features = FeatureMap(spec.n_states, A, std::move(table));
    inst.start = 0;
    inst.depth = spec.depth;
    return inst;
}

/// Vector with i.i.d. N(0, scale^2) entries via Box-Muller on the portable stream.
inline Eigen::VectorXd random_normal_vector(std::size_t dim, double scale, Rng& rng) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = scale * normal01(rng);
    return v;
}

}  // namespace curteach::theory

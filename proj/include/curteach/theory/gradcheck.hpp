#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "curteach/learners/learner.hpp"
#include "curteach/random.hpp"
#include "curteach/theory/instances.hpp"
#include "curteach/trajectory.hpp"

namespace curteach::theory {

/// Central differences of f around theta with step h.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& theta, double h = 1e-5) {
    Eigen::VectorXd g(theta.size());
    Eigen::VectorXd probe = theta;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        probe[i] = theta[i] + h;
        const double up = f(probe);
        probe[i] = theta[i] - h;
        const double down = f(probe);
        probe[i] = theta[i];
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

/// ||a - b|| / max(||a||, ||b||), or the absolute gap when both are below `floor`.
inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor = 1e-8) {
    const double scale = std::max({a.norm(), b.norm(), floor});
    return (a - b).norm() / scale;
}

/// -log P(xi | theta) for a MaxEnt learner on deterministic dynamics, which
/// reduces to the negative log-likelihood of the actions under the soft policy.
inline double maxent_demo_loss(const LearnerSpec& spec, const Eigen::VectorXd& theta, const TabularMdp& mdp,
                               const FeatureMap& features, const Demonstration& xi) {
    return policy_negative_log_likelihood(learner_policy(spec, theta, mdp, features).policy, xi);
}

struct GradientCheckResult {
    std::string family;
    std::size_t cases = 0;
    double max_relative_error = 0.0;
};

/// Analytic vs finite-difference gradients on random small instances for one
/// learner family (model x parameterization).
inline GradientCheckResult gradient_check_family(LearnerModel model, Parameterization kind, std::size_t cases,
                                                 std::uint64_t seed) {
    GradientCheckResult out;
    out.family = std::string(learner_model_name(model)) + "-" + parameterization_name(kind);
    out.cases = cases;
    for (std::size_t c = 0; c < cases; ++c) {
        const std::uint64_t case_seed = derive_seed(seed, out.family, c);
        Rng rng(case_seed);
        const std::size_t dim = 3 + uniform_index(rng, 3);
        const auto inst = random_layered_mdp({.n_states = 5 + uniform_index(rng, 4),
                                              .n_actions = 2 + uniform_index(rng, 2),
                                              .depth = 2 + uniform_index(rng, 3),
                                              .feature_dim = dim,
                                              .seed = derive_seed(case_seed, "instance")});
        const ScoringModel scoring(kind, dim, inst.mdp.n_actions(), 8);
        LearnerSpec spec{.model = model, .scoring = scoring, .solver = {.tol = 1e-14}};
        const double scale = kind == Parameterization::Quadratic ? 0.5 : 1.0;
        Eigen::VectorXd theta = kind == Parameterization::Mlp ? scoring.initial_params(derive_seed(case_seed, "init"))
                                                              : random_normal_vector(scoring.param_dim(), scale, rng);
        const Policy behaviour = Policy::uniform(inst.mdp.n_states(), inst.mdp.n_actions());
        const auto xi = sample_trajectory(inst.mdp, behaviour, inst.start, inst.depth, derive_seed(case_seed, "demo"));
        const std::vector<Demonstration> demos = {xi};

        Eigen::VectorXd analytic;
        std::function<double(const Eigen::VectorXd&)> loss;
        if (model == LearnerModel::MaxEnt) {
            const Policy pi = learner_policy(spec, theta, inst.mdp, inst.features).policy;
            analytic = maxent_gradient(scoring, theta, inst.mdp, inst.features, pi, demos, inst.start);
            loss = [&](const Eigen::VectorXd& th) { return maxent_demo_loss(spec, th, inst.mdp, inst.features, xi); };
        } else {
            analytic = crossent_gradient(scoring, theta, inst.features, demos);
            loss = [&](const Eigen::VectorXd& th) { return crossent_loss(scoring, th, inst.features, demos); };
        }
        const Eigen::VectorXd numeric = central_difference(loss, theta);
        out.max_relative_error = std::max(out.max_relative_error, relative_error(analytic, numeric));
    }
    return out;
}

/// The five families: MaxEnt linear/quadratic and CrossEnt linear/quadratic/MLP.
inline std::vector<GradientCheckResult> gradient_check_suite(std::size_t cases, std::uint64_t seed) {
    return {
        gradient_check_family(LearnerModel::MaxEnt, Parameterization::Linear, cases, seed),
        gradient_check_family(LearnerModel::MaxEnt, Parameterization::Quadratic, cases, seed),
        gradient_check_family(LearnerModel::CrossEnt, Parameterization::Linear, cases, seed),
        gradient_check_family(LearnerModel::CrossEnt, Parameterization::Quadratic, cases, seed),
        gradient_check_family(LearnerModel::CrossEnt, Parameterization::Mlp, cases, seed),
    };
}

}  // namespace curteach::theory

#include <cmath>

#include <gtest/gtest.h>

#include "curteach/theory/suite.hpp"

namespace curteach::theory {
namespace {

TEST(Instances, LayeredShape) {
    const auto inst = random_layered_mdp({.n_states = 8, .n_actions = 3, .depth = 4, .feature_dim = 2, .seed = 1});
    EXPECT_TRUE(inst.mdp.is_deterministic());
    EXPECT_TRUE(inst.mdp.is_terminal(7));
    const auto trajs = enumerate_trajectories(inst.mdp, inst.start, 5);
    EXPECT_EQ(trajs.size(), 81u);
    for (const auto& xi : trajs) EXPECT_EQ(xi.length(), 4u);
    EXPECT_THROW(random_layered_mdp({.n_states = 4, .depth = 4}), ValidationError);
}

TEST(Gibbs, SoftPolicyMatchesTrajectoryDistribution) {
    const auto inst = random_layered_mdp({.n_states = 8, .n_actions = 3, .depth = 5, .feature_dim = 3, .seed = 4});
    Rng rng(2);
    const auto rep = check_gibbs_consistency(inst, random_normal_vector(3, 1.5, rng));
    EXPECT_EQ(rep.trajectories, 243u);
    EXPECT_LT(rep.max_relative_error, 1e-8);
    EXPECT_NEAR(rep.total_probability, 1.0, 1e-12);
    EXPECT_TRUE(rep.pass);
}

TEST(Identity, PairResidualAndFullFormWithConstant) {
    const auto inst = random_layered_mdp({.n_states = 8, .n_actions = 3, .depth = 4, .feature_dim = 4, .seed = 7});
    Rng rng(3);
    const Eigen::VectorXd ts = random_normal_vector(4, 2.0, rng), tt = random_normal_vector(4, 1.0, rng);
    const auto all = enumerate_trajectories(inst.mdp, inst.start, 5);
    std::vector<DemoPair> pairs;
    for (std::size_t i = 0; i + 1 < all.size(); i += 7) pairs.push_back({all[i], all[i + 1]});
    const auto rep = check_maxent_identity(inst, ts, tt, pairs, true);
    EXPECT_EQ(rep.full_residuals.size(), 2 * pairs.size());
    EXPECT_LT(rep.max_abs, 1e-8);
    EXPECT_TRUE(rep.pass);
}

TEST(Identity, FailsForMismatchedTheta) {
    // The identity with pi_theta* replaced by a policy from another parameter
    // must not hold, so the check is not vacuous.
    const auto inst = random_layered_mdp({.n_states = 8, .n_actions = 3, .depth = 4, .feature_dim = 4, .seed = 8});
    Rng rng(5);
    const Eigen::VectorXd ts = random_normal_vector(4, 2.0, rng), tt = random_normal_vector(4, 1.0, rng);
    const auto all = enumerate_trajectories(inst.mdp, inst.start, 5);
    const Policy wrong = linear_soft_policy(inst.mdp, inst.features, ts + Eigen::VectorXd::Ones(4));
    const Policy pt = linear_soft_policy(inst.mdp, inst.features, tt);
    const Eigen::VectorXd mu_t = feature_expectation(inst.mdp, pt, inst.features, {.start = inst.start});
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < all.size(); ++i) {
        auto side = [&](const Demonstration& xi) {
            const double lhs = (ts - tt).dot(demonstration_features(xi, inst.features, 1.0) - mu_t);
            return lhs - (log_difficulty(pt, xi) - log_difficulty(wrong, xi));
        };
        worst = std::max(worst, std::abs(side(all[i]) - side(all[i + 1])));
    }
    EXPECT_GT(worst, 1e-3);
}

TEST(FirstOrder, RemainderIsQuadratic) {
    const auto inst = random_layered_mdp({.n_states = 8, .n_actions = 3, .depth = 4, .feature_dim = 4, .seed = 1});
    Rng rng(9);
    const Eigen::VectorXd tt = random_normal_vector(4, 1.0, rng);
    const Eigen::VectorXd u = random_normal_vector(4, 1.0, rng).normalized();
    const auto xi = sample_trajectory(inst.mdp, Policy::uniform(8, 3), inst.start, 4, 2);
    const std::vector<double> eps = {1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
    const auto rep = check_crossent_firstorder(inst.features, tt, u, xi, eps);
    EXPECT_NEAR(rep.fit.slope, 2.0, 0.05);
    for (std::size_t i = 1; i < rep.residuals.size(); ++i) EXPECT_GT(rep.residuals[i], rep.residuals[i - 1]);
}

TEST(StepSize, ConditionDefinition) {
    Eigen::VectorXd g(2), ts(2), th(2);
    g << 1.0, 0.0;
    ts << 1.0, 0.0;
    th << 0.0, 0.0;
    // eta^2 |g|^2 = eta^2 ; 2 c eta |<u, g>| = 0.2 eta -> holds iff eta <= 0.2.
    EXPECT_TRUE(step_size_condition(0.2, g, ts, th));
    EXPECT_FALSE(step_size_condition(0.21, g, ts, th));
    const std::vector<TraceStep> trace = {{0.1, g, th}, {0.5, g, th}};
    EXPECT_EQ(check_step_size_condition(trace, ts), (std::vector<bool>{true, false}));
}

TEST(Convergence, RichnessDecompositionInvariants) {
    const auto inst = random_layered_mdp({.n_states = 8, .n_actions = 3, .depth = 6, .feature_dim = 4, .seed = 3});
    Rng rng(1);
    const Eigen::VectorXd ts = random_normal_vector(4, 2.0, rng);
    const auto pool = enumerate_trajectories(inst.mdp, inst.start, 7);
    const auto rep = convergence_experiment(inst, ts, Eigen::VectorXd::Zero(4), pool, {.steps = 60});
    ASSERT_EQ(rep.distances.size(), 61u);
    for (double o : rep.orthogonality) EXPECT_LT(o, 1e-10);
    for (std::size_t t = 0; t < rep.selected.size(); ++t) EXPECT_EQ(rep.selected[t], rep.inner_product_argmax[t]);
    EXPECT_GE(rep.Delta, *std::max_element(rep.delta_norms.begin(), rep.delta_norms.end()));
    EXPECT_DOUBLE_EQ(rep.z_max, *std::max_element(rep.distances.begin(), rep.distances.end() - 1));
    EXPECT_DOUBLE_EQ(rep.eta_max, 0.05);
}

TEST(Convergence, DistanceMostlyNonIncreasingUnderStepCondition) {
    std::size_t steps = 0, decreasing = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto inst = random_layered_mdp({.n_states = 8, .n_actions = 3, .depth = 6, .feature_dim = 4, .seed = seed});
        Rng rng(seed + 50);
        const Eigen::VectorXd ts = random_normal_vector(4, 2.0, rng);
        const auto pool = enumerate_trajectories(inst.mdp, inst.start, 7);
        const auto rep = convergence_experiment(inst, ts, Eigen::VectorXd::Zero(4), pool, {.steps = 200});
        for (std::size_t t = 0; t < rep.step_condition.size(); ++t) {
            if (!rep.step_condition[t]) continue;
            ++steps;
            decreasing += rep.distances[t + 1] <= rep.distances[t];
        }
    }
    ASSERT_GT(steps, 0u);
    EXPECT_GE(static_cast<double>(decreasing) / static_cast<double>(steps), 0.95);
}

TEST(Monotonicity, ReportBookkeeping) {
    const auto inst = random_layered_mdp({.n_states = 10, .n_actions = 3, .depth = 6, .feature_dim = 4, .seed = 0});
    Rng rng(0);
    const Eigen::VectorXd ts = random_normal_vector(4, 2.0, rng), tt = random_normal_vector(4, 1.0, rng);
    const auto pool = enumerate_trajectories(inst.mdp, inst.start, 7);
    const auto rep = monotonicity_experiment(inst, ts, tt, pool, 0.01, 4, 5);
    EXPECT_EQ(rep.cell_counts.sum(), static_cast<int>(pool.size()));
    EXPECT_GT(rep.pairs_teacher + rep.pairs_learner, 0u);
    EXPECT_THROW(monotonicity_experiment(inst, ts, tt, pool, 0.01, 0), ValidationError);
}

TEST(Suites, AllChecksPassAtDefaultSeed) {
    for (const auto& r : {gibbs_suite(0), identity_suite(0), firstorder_suite(0), gradient_suite(0),
                          monotonicity_suite(0), convergence_suite(0)}) {
        EXPECT_TRUE(r.pass) << r.name << ": " << r.detail;
    }
}

}  // namespace
}  // namespace curteach::theory

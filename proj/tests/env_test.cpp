#include <algorithm>
#include <cmath>
#include <filesystem>
#include <queue>
#include <sstream>

#include <gtest/gtest.h>

#include "curteach/env/car.hpp"
#include "curteach/env/grid.hpp"
#include "curteach/env/grid_dataset.hpp"
#include "curteach/learners/scoring.hpp"

namespace curteach {
namespace {

// ---------------------------------------------------------------- car

Eigen::VectorXd phi_of(std::initializer_list<car::Feature> on) {
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(car::kFeatures);
    for (auto f : on) phi[f] = 1.0;
    return phi;
}

TEST(Car, RewardExamples) {
    EXPECT_EQ(car::reward_of(phi_of({})), 0.0);
    EXPECT_EQ(car::reward_of(phi_of({car::Car})), -5.0);
    EXPECT_EQ(car::reward_of(phi_of({car::Ped})), -10.0);
    EXPECT_EQ(car::reward_of(phi_of({car::Stone, car::Grass})), -1.5);
    EXPECT_EQ(car::reward_of(phi_of({car::Hov})), 1.0);
    EXPECT_EQ(car::reward_of(phi_of({car::Hov, car::Police})), -5.0);
    EXPECT_EQ(car::reward_of(phi_of({car::Police})), 0.0);
}

TEST(Car, QuadraticTargetReproducesRewardOnEveryFeatureCombination) {
    const Eigen::VectorXd theta = car::quadratic_target();
    const ScoringModel q(Parameterization::Quadratic, car::kFeatures, 1);
    for (unsigned mask = 0; mask < (1u << car::kFeatures); ++mask) {
        Eigen::VectorXd phi(car::kFeatures);
        for (std::size_t f = 0; f < car::kFeatures; ++f) phi[static_cast<Eigen::Index>(f)] = (mask >> f) & 1u;
        EXPECT_NEAR(q.scores(theta, phi.transpose())[0], car::reward_of(phi), 1e-12) << mask;
    }
}

TEST(Car, LinearTargetDiffersOnlyOnHovWithPolice) {
    const Eigen::VectorXd w = car::linear_target();
    EXPECT_EQ(w.dot(phi_of({car::Car, car::CarFront})), car::reward_of(phi_of({car::Car, car::CarFront})));
    EXPECT_NE(w.dot(phi_of({car::Hov, car::Police})), car::reward_of(phi_of({car::Hov, car::Police})));
}

class CarEnv : public ::testing::Test {
protected:
    static void SetUpTestSuite() { env_ = new car::CarEnvironment(car::build_car_environment()); }
    static void TearDownTestSuite() { delete env_; }
    static car::CarEnvironment* env_;
};
car::CarEnvironment* CarEnv::env_ = nullptr;

TEST_F(CarEnv, Dimensions) {
    const auto& mdp = env_->mdp;
    EXPECT_EQ(mdp.n_states(), 800u);
    EXPECT_EQ(mdp.n_actions(), 3u);
    EXPECT_EQ(env_->start_states.size(), 40u);
    EXPECT_EQ(env_->state_features.cols(), 8);
    EXPECT_NEAR(mdp.p0().sum(), 1.0, 1e-12);
    for (auto s : env_->start_states) EXPECT_NEAR(mdp.p0()[static_cast<Eigen::Index>(s)], 1.0 / 40.0, 1e-15);
    EXPECT_EQ(env_->state_features.cwiseProduct(env_->state_features.cwiseProduct(env_->state_features)),
              env_->state_features);
}

TEST_F(CarEnv, DynamicsAdvanceOneRow) {
    const auto& mdp = env_->mdp;
    for (std::size_t type = 0; type < car::kTypes; ++type) {
        for (std::size_t inst = 0; inst < car::kInstances; ++inst) {
            for (std::size_t row = 0; row + 1 < car::kRows; ++row) {
                for (std::size_t lane = 0; lane < car::kLanes; ++lane) {
                    const StateId s = car::state_index(type, inst, row, lane);
                    const StateId l0 = car::state_index(type, inst, row + 1, 0);
                    const StateId l1 = car::state_index(type, inst, row + 1, 1);
                    EXPECT_EQ(mdp.transition_prob(s, car::Straight, lane == 0 ? l0 : l1), 1.0);
                    if (lane == 0) {
                        EXPECT_EQ(mdp.transition_prob(s, car::Left, l0), 0.5);
                        EXPECT_EQ(mdp.transition_prob(s, car::Left, l1), 0.5);
                        EXPECT_EQ(mdp.transition_prob(s, car::Right, l1), 1.0);
                    } else {
                        EXPECT_EQ(mdp.transition_prob(s, car::Right, l0), 0.5);
                        EXPECT_EQ(mdp.transition_prob(s, car::Right, l1), 0.5);
                        EXPECT_EQ(mdp.transition_prob(s, car::Left, l0), 1.0);
                    }
                    for (ActionId a = 0; a < 3; ++a) {
                        double total = 0.0;
                        for (const auto& t : mdp.successors(s, a)) total += t.prob;
                        EXPECT_DOUBLE_EQ(total, 1.0);
                    }
                }
            }
            EXPECT_TRUE(mdp.is_terminal(car::state_index(type, inst, car::kRows - 1, 0)));
        }
    }
}

TEST_F(CarEnv, RewardsFollowFeatures) {
    for (StateId s = 0; s < car::kStates; ++s) {
        if (env_->mdp.is_terminal(s)) continue;
        const Eigen::VectorXd phi = env_->state_features.row(static_cast<Eigen::Index>(s)).transpose();
        for (ActionId a = 0; a < 3; ++a) EXPECT_EQ(env_->mdp.reward(s, a), car::reward_of(phi));
    }
}

TEST_F(CarEnv, TypesHaveTheirObjects) {
    auto total = [&](std::size_t type, car::Feature f) {
        double sum = 0.0;
        for (StateId s = 0; s < car::kStates; ++s) {
            if (env_->state_type[s] == type) sum += env_->state_features(static_cast<Eigen::Index>(s), f);
        }
        return sum;
    };
    EXPECT_EQ(env_->state_features.topRows(car::kInstances * car::kRows * car::kLanes).sum(), 0.0);
    EXPECT_GT(total(1, car::Car), 0.0);
    EXPECT_GT(total(2, car::Stone), 0.0);
    EXPECT_GT(total(4, car::Grass), 0.0);
    EXPECT_GT(total(6, car::Ped), 0.0);
    EXPECT_GT(total(7, car::Hov), 0.0);
    EXPECT_GT(total(7, car::Police), 0.0);
    EXPECT_EQ(total(0, car::Police) + total(3, car::Hov), 0.0);
}

TEST_F(CarEnv, TeacherPrefersSafeLane) {
    EXPECT_NO_THROW(env_->teacher.validate());
    // In a task with a car directly ahead in one lane only, the teacher puts
    // more mass on avoiding it.
    bool checked = false;
    for (std::size_t task = 5; task < 10 && !checked; ++task) {
        const auto& L = env_->layouts[task];
        for (std::size_t row = 0; row + 1 < car::kRows - 1 && !checked; ++row) {
            if (L[row + 1][0].car && !L[row + 1][1].car && !L[row][0].car) {
                const StateId s = car::state_index(1, task - 5, row, 0);
                EXPECT_GT(env_->teacher(s, car::Right), env_->teacher(s, car::Straight));
                checked = true;
            }
        }
    }
    EXPECT_TRUE(checked);
}

TEST_F(CarEnv, SmoothedFeaturesAreTransitionAverages) {
    const StateId s = car::state_index(3, 2, 4, 0);
    const Eigen::RowVectorXd expected = 0.5 * env_->state_features.row(car::state_index(3, 2, 5, 0)) +
                                        0.5 * env_->state_features.row(car::state_index(3, 2, 5, 1));
    EXPECT_LT((env_->smoothed_features.row(s, car::Left) - expected).norm(), 1e-15);
    EXPECT_EQ(env_->raw_features.row(s, car::Left), env_->state_features.row(s));
}

TEST(Car, LayoutSeedChangesLayouts) {
    const auto a = car::build_car_environment({.layout_seed = 1});
    const auto b = car::build_car_environment({.layout_seed = 1});
    const auto c = car::build_car_environment({.layout_seed = 2});
    EXPECT_EQ(a.state_features, b.state_features);
    EXPECT_NE(a.state_features, c.state_features);
    EXPECT_THROW(car::build_car_environment({.teacher_temperature = 0.0}), ValidationError);
}

// ---------------------------------------------------------------- grid

using grid::GridTask;
using grid::Kind;
using grid::Pose;

int cell(int r, int c) { return r * grid::kSide + c; }

double replay(const TabularMdp& mdp, const Demonstration& d) {
    double total = 0.0;
    StateId s = d.start;
    for (const auto& st : d.steps) {
        EXPECT_EQ(st.state, s);
        total += mdp.reward(st.state, st.action);
        s = mdp.successors(st.state, st.action)[0].next;
    }
    EXPECT_TRUE(mdp.is_terminal(s));
    return total;
}

// Dijkstra over poses with action costs; goal and bomb cells end the episode.
double dijkstra_optimal(const GridTask& t) {
    std::vector<char> goal(grid::kCells, 0), bomb(grid::kCells, 0), mud(grid::kCells, 0);
    for (int c : t.goals) goal[static_cast<std::size_t>(c)] = 1;
    for (int c : t.bombs) bomb[static_cast<std::size_t>(c)] = 1;
    for (int c : t.muds) mud[static_cast<std::size_t>(c)] = 1;
    std::vector<double> dist(grid::kCells * 4, kInf);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[static_cast<std::size_t>(grid::pose_id(t.start))] = 0.0;
    pq.push({0.0, grid::pose_id(t.start)});
    double best = -kInf;
    while (!pq.empty()) {
        const auto [d, id] = pq.top();
        pq.pop();
        if (d > dist[static_cast<std::size_t>(id)]) continue;
        const Pose p{id / 4, id % 4};
        for (ActionId a = 0; a < 3; ++a) {
            const Pose np = grid::apply_action(p, a);
            const bool moved = np.cell != p.cell;
            if (moved && goal[static_cast<std::size_t>(np.cell)]) {
                best = std::max(best, -(d + 1.0) + 10.0);
                continue;
            }
            if (moved && bomb[static_cast<std::size_t>(np.cell)]) {
                best = std::max(best, -(d + 1.0) - 5.0);
                continue;
            }
            const double nd = d + 1.0 + (moved && mud[static_cast<std::size_t>(np.cell)] ? 1.0 : 0.0);
            if (nd < dist[static_cast<std::size_t>(grid::pose_id(np))]) {
                dist[static_cast<std::size_t>(grid::pose_id(np))] = nd;
                pq.push({nd, grid::pose_id(np)});
            }
        }
    }
    return best;
}

// Best tour by brute force over goal orders, with BFS legs between arrival poses.
double permutation_optimal(const GridTask& t) {
    std::vector<int> order(t.goals.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    double best = -kInf;
    do {
        // Cost-to-reach for each pose at the current leg's end.
        std::vector<std::pair<Pose, int>> frontier = {{t.start, 0}};
        std::vector<int> targets;
        for (int g : order) targets.push_back(t.goals[static_cast<std::size_t>(g)]);
        targets.push_back(t.start.cell);
        for (int target : targets) {
            std::array<int, 4> arrive;
            arrive.fill(std::numeric_limits<int>::max());
            for (const auto& [pose, cost] : frontier) {
                const auto pd = grid::pose_bfs(pose);
                for (int d = 0; d < 4; ++d) {
                    const int v = pd.dist[static_cast<std::size_t>(target * 4 + d)];
                    if (v > 0) arrive[static_cast<std::size_t>(d)] = std::min(arrive[static_cast<std::size_t>(d)], cost + v);
                }
            }
            frontier.clear();
            for (int d = 0; d < 4; ++d) {
                if (arrive[static_cast<std::size_t>(d)] < std::numeric_limits<int>::max()) frontier.push_back({{target, d}, arrive[static_cast<std::size_t>(d)]});
            }
        }
        for (const auto& [pose, cost] : frontier) best = std::max(best, 10.0 - cost);
    } while (std::next_permutation(order.begin(), order.end()));
    return best;
}

TEST(Grid, TurnsAndWalls) {
    EXPECT_EQ(grid::turn_left(grid::North), grid::West);
    EXPECT_EQ(grid::turn_right(grid::North), grid::East);
    EXPECT_EQ(grid::turn_left(grid::turn_right(grid::South)), grid::South);
    EXPECT_EQ(grid::step_forward(cell(0, 3), grid::North), cell(0, 3));
    EXPECT_EQ(grid::step_forward(cell(2, 3), grid::North), cell(1, 3));
    EXPECT_EQ(grid::step_forward(cell(2, 5), grid::East), cell(2, 5));
    EXPECT_EQ(grid::step_forward(cell(2, 3), grid::West), cell(2, 2));
    EXPECT_EQ(grid::step_forward(cell(5, 0), grid::South), cell(5, 0));
}

TEST(Grid, TaskValidation) {
    GridTask t{.start = {0, grid::North}, .goals = {0}};
    EXPECT_THROW(t.validate(), ValidationError);
    t.goals = {};
    EXPECT_THROW(t.validate(), ValidationError);
    t.goals = {36};
    EXPECT_THROW(t.validate(), ValidationError);
    GridTask tsp{.kind = Kind::Tsp, .start = {0, 0}, .goals = {1, 2}, .muds = {3}};
    EXPECT_THROW(tsp.validate(), ValidationError);
}

TEST(Grid, InputTensorShape) {
    const GridTask sp{.start = {cell(1, 1), grid::East}, .goals = {cell(4, 4)}, .muds = {cell(2, 2)}, .bombs = {cell(3, 3)}};
    const grid::TaskMdp tm(sp);
    const Eigen::VectorXd x = tm.state_input(tm.start());
    EXPECT_EQ(x.size(), 36 * 7);
    EXPECT_EQ(x.sum(), 4.0);
    EXPECT_EQ(x[cell(1, 1) * 7 + grid::East], 1.0);
    EXPECT_EQ(x[cell(2, 2) * 7 + 4], 1.0);
    EXPECT_EQ(x[cell(3, 3) * 7 + 5], 1.0);
    EXPECT_EQ(x[cell(4, 4) * 7 + 6], 1.0);

    const GridTask tsp{.kind = Kind::Tsp, .start = {cell(0, 0), grid::South}, .goals = {cell(0, 2), cell(3, 0)}};
    const grid::TaskMdp tt(tsp);
    EXPECT_EQ(tt.mdp().n_states(), 4u * 36 * 4 + 1);
    const StateId after_first = tt.encode({{cell(0, 2), grid::East}, 1u, false});
    const Eigen::VectorXd y = tt.state_input(after_first);
    EXPECT_EQ(y.size(), 36 * 6);
    EXPECT_EQ(y[cell(0, 2) * 6 + 5], 0.0);
    EXPECT_EQ(y[cell(3, 0) * 6 + 5], 1.0);
    EXPECT_EQ(y[cell(0, 0) * 6 + 4], 1.0);
}

TEST(Grid, EncodeDecodeRoundTrip) {
    const GridTask tsp{.kind = Kind::Tsp, .start = {cell(0, 0), grid::South}, .goals = {1, 2, 3}};
    const grid::TaskMdp tm(tsp);
    for (StateId s = 0; s < tm.mdp().n_states(); ++s) EXPECT_EQ(tm.encode(tm.decode(s)), s);
}

TEST(ShortestPath, AdjacentGoalFacingIt) {
    const GridTask t{.start = {cell(2, 2), grid::East}, .goals = {cell(2, 3)}};
    const auto sol = grid::solve_task(grid::TaskMdp(t), 10, 1000000);
    EXPECT_DOUBLE_EQ(sol.optimal_reward, 10.0 - 1.0);
    EXPECT_EQ(sol.optimal_paths, 1u);
    ASSERT_EQ(sol.demos.size(), 1u);
    EXPECT_EQ(sol.demos[0].steps.size(), 1u);
}

TEST(ShortestPath, GoalBehindNeedsTwoTurns) {
    const GridTask t{.start = {cell(2, 2), grid::East}, .goals = {cell(2, 1)}};
    const auto sol = grid::solve_task(grid::TaskMdp(t), 10, 1000000);
    EXPECT_DOUBLE_EQ(sol.optimal_reward, 10.0 - 3.0);
    // left-left-move or right-right-move
    EXPECT_EQ(sol.optimal_paths, 2u);
    EXPECT_EQ(sol.demos.size(), 2u);
}

TEST(ShortestPath, MatchesDijkstraOnRandomTasks) {
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
        Rng rng(seed);
        const auto t = grid::sample_task(Kind::ShortestPath, 1 + static_cast<int>(seed % 2), static_cast<int>(uniform_index(rng, 13)),
                                         static_cast<int>(uniform_index(rng, 13)), seed, 1000);
        const grid::TaskMdp tm(t);
        const auto sol = grid::solve_task(tm, 32, 1000000);
        EXPECT_NEAR(sol.optimal_reward, dijkstra_optimal(t), 1e-9) << seed;
        ASSERT_FALSE(sol.demos.empty());
        EXPECT_LE(sol.demos.size(), std::min<std::uint64_t>(32, sol.optimal_paths));
        for (const auto& d : sol.demos) EXPECT_NEAR(replay(tm.mdp(), d), sol.optimal_reward, 1e-9);
    }
}

TEST(ShortestPath, PathCountMatchesEnumeration) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto t = grid::sample_task(Kind::ShortestPath, 1, 3, 2, seed, 1000);
        const auto sol = grid::solve_task(grid::TaskMdp(t), 100000, 1000000);
        EXPECT_EQ(sol.demos.size(), sol.optimal_paths);
    }
}

TEST(Tsp, MatchesPermutationBruteForce) {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const int goals = 2 + static_cast<int>(seed % 3);
        const auto t = grid::sample_task(Kind::Tsp, goals, 0, 0, seed, 1000);
        const grid::TaskMdp tm(t);
        const auto sol = grid::solve_task(tm, 8, 1000000);
        EXPECT_NEAR(sol.optimal_reward, permutation_optimal(t), 1e-9) << seed;
        for (const auto& d : sol.demos) EXPECT_NEAR(replay(tm.mdp(), d), sol.optimal_reward, 1e-9);
        EXPECT_LE(grid::greedy_tour_reward(tm), sol.optimal_reward + 1e-9);
    }
}

TEST(Tsp, SymmetricGoalsGiveEqualOrders) {
    // Start in the middle of row 2 facing north; goals mirror each other.
    const GridTask t{.kind = Kind::Tsp, .start = {cell(2, 2), grid::North}, .goals = {cell(0, 2), cell(4, 2)}};
    GridTask swapped = t;
    std::swap(swapped.goals[0], swapped.goals[1]);
    const double a = grid::solve_task(grid::TaskMdp(t), 0, 1000000).optimal_reward;
    const double b = grid::solve_task(grid::TaskMdp(swapped), 0, 1000000).optimal_reward;
    EXPECT_EQ(a, b);
    // north 2, turn twice, south 4, turn twice, north 2 -> 12 actions.
    EXPECT_DOUBLE_EQ(a, 10.0 - 12.0);
    EXPECT_DOUBLE_EQ(grid::greedy_tour_reward(grid::TaskMdp(t)), a);
}

TEST(Tsp, GreedyCanBeSuboptimal) {
    // Nearest-first heads to the goal at distance 1 and then has to cross back.
    bool found = false;
    for (std::uint64_t seed = 0; seed < 300 && !found; ++seed) {
        const auto t = grid::sample_task(Kind::Tsp, 4, 0, 0, seed, 1000);
        const grid::TaskMdp tm(t);
        found = grid::greedy_tour_reward(tm) < grid::solve_task(tm, 0, 1000000).optimal_reward;
    }
    EXPECT_TRUE(found);
}

TEST(Difficulty, ShortestPathExamples) {
    grid::SolvedTask t{.task = {.goals = {3}}, .optimal_reward = 7.0, .optimal_paths = 1};
    EXPECT_DOUBLE_EQ(grid::teacher_difficulty_shortest_path(t, 1.0 - 7.0), 1.0);
    const double base = grid::teacher_difficulty_shortest_path(t, 2.0);
    t.optimal_paths = 2;
    EXPECT_DOUBLE_EQ(grid::teacher_difficulty_shortest_path(t, 2.0), 2.0 * base);
    EXPECT_THROW(grid::teacher_difficulty_shortest_path(t, -7.0), ValidationError);
    t.optimal_reward = kInf;
    EXPECT_THROW(grid::teacher_difficulty_shortest_path(t, 0.0), ValidationError);
}

TEST(Difficulty, TspExamples) {
    grid::SolvedTask t{.task = {.kind = Kind::Tsp, .goals = {1, 2, 3}}, .optimal_reward = -8.0, .greedy_reward = -8.0};
    EXPECT_EQ(t.greedy_gap(), 0.0);
    EXPECT_DOUBLE_EQ(grid::teacher_difficulty_tsp(t, 10.0), 3.0 / 2.0);
    const double easy = grid::teacher_difficulty_tsp(t, 20.0);
    t.greedy_reward = -12.0;
    EXPECT_EQ(t.greedy_gap(), 4.0);
    EXPECT_GT(grid::teacher_difficulty_tsp(t, 20.0), easy);
}

TEST(Difficulty, ThreeGoalInstanceFromSolvers) {
    const GridTask task{.kind = Kind::Tsp, .start = {cell(0, 0), grid::East}, .goals = {cell(0, 3), cell(3, 3), cell(5, 0)}};
    grid::DatasetConfig cfg = grid::DatasetConfig::tsp_defaults();
    const auto solved = grid::solve(task, cfg, false);
    const double opt = permutation_optimal(task);
    EXPECT_DOUBLE_EQ(solved.optimal_reward, opt);
    const double shift = 30.0;
    EXPECT_DOUBLE_EQ(grid::teacher_difficulty(solved, shift), 3.0 / (opt - (opt - *solved.greedy_reward) + shift));
}

TEST(Dataset, SmallGenerationIsExactAndDeterministic) {
    grid::DatasetConfig cfg = grid::DatasetConfig::shortest_path_defaults(5);
    cfg.max_muds = 2;
    cfg.max_bombs = 3;
    cfg.per_group = {4, 1, 2};
    const auto ds = grid::generate_dataset(cfg);
    EXPECT_EQ(ds.splits[0].size(), 12u * 4);
    EXPECT_EQ(ds.splits[1].size(), 12u);
    EXPECT_EQ(ds.splits[2].size(), 24u);
    std::size_t one_goal = 0;
    double min_den = kInf;
    for (const auto& t : ds.train()) {
        one_goal += t.task.goals.size() == 1;
        ASSERT_FALSE(t.demos.empty());
        const grid::TaskMdp tm(t.task);
        for (const auto& d : t.demos) EXPECT_NEAR(replay(tm.mdp(), d), t.optimal_reward, 1e-9);
        EXPECT_GE(t.psi_e, 0.0);
        min_den = std::min(min_den, t.optimal_reward + ds.denominator_shift);
    }
    EXPECT_EQ(one_goal, ds.train().size() / 2);
    EXPECT_DOUBLE_EQ(min_den, 1.0);
    for (const auto& t : ds.splits[2]) EXPECT_TRUE(t.demos.empty());

    const auto again = grid::generate_dataset(cfg);
    for (std::size_t i = 0; i < ds.train().size(); ++i) EXPECT_EQ(again.train()[i].task, ds.train()[i].task);
    cfg.threads = 1;
    const auto serial = grid::generate_dataset(cfg);
    for (std::size_t i = 0; i < ds.splits[2].size(); ++i) EXPECT_EQ(serial.splits[2][i].task, ds.splits[2][i].task);
}

TEST(Dataset, DefaultCounts) {
    const auto sp = grid::DatasetConfig::shortest_path_defaults();
    EXPECT_EQ(sp.groups(), 169u);
    EXPECT_EQ(sp.split_size(0), 16900u);
    EXPECT_EQ(sp.split_size(1), 1690u);
    EXPECT_EQ(sp.split_size(2), 5070u);
    const auto tsp = grid::DatasetConfig::tsp_defaults();
    EXPECT_EQ(tsp.split_size(0), 6000u);
    EXPECT_EQ(tsp.split_size(1), 300u);
    EXPECT_EQ(tsp.split_size(2), 1500u);
}

TEST(Dataset, InvalidConfigAndInfeasiblePlacement) {
    auto cfg = grid::DatasetConfig::shortest_path_defaults();
    cfg.max_muds = 30;
    EXPECT_THROW(grid::generate_dataset(cfg), ConfigError);
    const GridTask boxed{.start = {cell(0, 0), grid::East}, .goals = {cell(5, 5)}, .bombs = {cell(0, 1), cell(1, 0)}};
    EXPECT_FALSE(grid::goal_reachable(boxed));
    GridTask open = boxed;
    open.bombs = {cell(0, 1)};
    EXPECT_TRUE(grid::goal_reachable(open));
    EXPECT_THROW(grid::sample_task(Kind::ShortestPath, 1, 0, 0, 1, 0), GenerationError);
}

TEST(Dataset, TaskAndDirectoryRoundTrip) {
    grid::DatasetConfig cfg = grid::DatasetConfig::tsp_defaults(9);
    cfg.per_group = {3, 1, 1};
    const auto ds = grid::generate_dataset(cfg);
    std::stringstream buf;
    grid::write_task(buf, ds.train()[1]);
    const auto back = grid::read_task(buf);
    EXPECT_EQ(back.task, ds.train()[1].task);
    EXPECT_EQ(back.optimal_reward, ds.train()[1].optimal_reward);
    EXPECT_EQ(back.greedy_reward, ds.train()[1].greedy_reward);
    EXPECT_EQ(back.psi_e, ds.train()[1].psi_e);

    const auto dir = std::filesystem::temp_directory_path() / "curteach_env_test_dataset";
    std::filesystem::remove_all(dir);
    grid::write_dataset(ds, dir);
    EXPECT_TRUE(std::filesystem::exists(dir / "train" / "000000.demos"));
    EXPECT_FALSE(std::filesystem::exists(dir / "test" / "000000.demos"));
    const auto loaded = grid::read_dataset(dir);
    EXPECT_EQ(loaded.denominator_shift, ds.denominator_shift);
    for (std::size_t split = 0; split < 3; ++split) {
        ASSERT_EQ(loaded.splits[split].size(), ds.splits[split].size());
        for (std::size_t i = 0; i < ds.splits[split].size(); ++i) {
            EXPECT_EQ(loaded.splits[split][i].task, ds.splits[split][i].task);
            EXPECT_EQ(loaded.splits[split][i].demos, ds.splits[split][i].demos);
            EXPECT_EQ(loaded.splits[split][i].optimal_paths, ds.splits[split][i].optimal_paths);
        }
    }
    std::filesystem::remove_all(dir);
    EXPECT_THROW(grid::read_dataset(dir), IoError);
}

}  // namespace
}  // namespace curteach

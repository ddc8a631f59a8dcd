#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "curteach/dynamic_programming.hpp"
#include "curteach/errors.hpp"
#include "curteach/mdp.hpp"

namespace curteach::grid {

inline constexpr int kSide = 6;
inline constexpr int kCells = kSide * kSide;
inline constexpr std::size_t kActions = 3;

enum class Kind { ShortestPath, Tsp };

inline const char* kind_name(Kind k) { return k == Kind::ShortestPath ? "shortest-path" : "tsp"; }

inline Kind parse_kind(const std::string& s) {
    if (s == "shortest-path") return Kind::ShortestPath;
    if (s == "tsp") return Kind::Tsp;
    throw ValidationError("unknown grid environment '" + s + "'");
}

/// Facing, in the order of the agent feature channels.
enum Dir : int { North = 0, South = 1, West = 2, East = 3 };

enum Action : ActionId { Move = 0, TurnLeft = 1, TurnRight = 2 };

inline constexpr double kStepReward = -1.0;
inline constexpr double kGoalReward = 10.0;
inline constexpr double kMudReward = -1.0;
inline constexpr double kBombReward = -5.0;
inline constexpr double kTourReward = 10.0;

/// Feature channels per cell: 4 agent-facing channels, then mud, bomb, goal
/// (shortest path) or start, goal (TSP).
inline std::size_t channels(Kind k) { return k == Kind::ShortestPath ? 7 : 6; }

inline int turn_left(int d) {
    static constexpr std::array<int, 4> t = {West, East, South, North};
    return t[static_cast<std::size_t>(d)];
}

inline int turn_right(int d) {
    static constexpr std::array<int, 4> t = {East, West, North, South};
    return t[static_cast<std::size_t>(d)];
}

/// Cell reached by moving forward; the agent stays put against a wall.
inline int step_forward(int cell, int dir) {
    int r = cell / kSide, c = cell % kSide;
    switch (dir) {
        case North: r = std::max(r - 1, 0); break;
        case South: r = std::min(r + 1, kSide - 1); break;
        case West: c = std::max(c - 1, 0); break;
        case East: c = std::min(c + 1, kSide - 1); break;
        default: break;
    }
    return r * kSide + c;
}

struct Pose {
    int cell = 0;
    int dir = North;
    bool operator==(const Pose&) const = default;
};

inline Pose apply_action(Pose p, ActionId a) {
    switch (a) {
        case Move: return {step_forward(p.cell, p.dir), p.dir};
        case TurnLeft: return {p.cell, turn_left(p.dir)};
        case TurnRight: return {p.cell, turn_right(p.dir)};
        default: throw ValidationError("grid: unknown action");
    }
}

struct GridTask {
    Kind kind = Kind::ShortestPath;
    std::uint64_t id = 0;
    Pose start;
    std::vector<int> goals;
    std::vector<int> muds;
    std::vector<int> bombs;

    bool operator==(const GridTask&) const = default;

    void validate() const {
        std::vector<int> all = {start.cell};
        all.insert(all.end(), goals.begin(), goals.end());
        all.insert(all.end(), muds.begin(), muds.end());
        all.insert(all.end(), bombs.begin(), bombs.end());
        for (int c : all) {
            if (c < 0 || c >= kCells) throw ValidationError("grid task: cell out of range");
        }
        std::sort(all.begin(), all.end());
        if (std::adjacent_find(all.begin(), all.end()) != all.end()) throw ValidationError("grid task: overlapping cells");
        if (start.dir < 0 || start.dir > 3) throw ValidationError("grid task: bad facing");
        if (goals.empty()) throw ValidationError("grid task: no goals");
        if (kind == Kind::Tsp && (!muds.empty() || !bombs.empty())) throw ValidationError("tsp task: no muds or bombs");
        if (kind == Kind::Tsp && goals.size() > 16) throw ValidationError("tsp task: too many goals");
    }
};

/// Decoded MDP state.
struct GridState {
    Pose pose;
    /// Bit i set once goal i has been visited (TSP only).
    unsigned visited = 0;
    bool terminal = false;
};

/// Flattened 6 x 6 x C input tensor of a decoded state, index (cell * C + channel).
/// Channels 0-3 mark the agent's facing; shortest path adds mud, bomb, goal;
/// TSP adds the start cell and the goals not yet visited.
inline Eigen::VectorXd task_input(const GridTask& task, const GridState& gs) {
    const std::size_t C = channels(task.kind);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kCells * C));
    auto set = [&](int cell, std::size_t ch) { x[static_cast<Eigen::Index>(static_cast<std::size_t>(cell) * C + ch)] = 1.0; };
    if (!gs.terminal) set(gs.pose.cell, static_cast<std::size_t>(gs.pose.dir));
    if (task.kind == Kind::ShortestPath) {
        for (int c : task.muds) set(c, 4);
        for (int c : task.bombs) set(c, 5);
        for (int c : task.goals) set(c, 6);
    } else {
        set(task.start.cell, 4);
        for (std::size_t i = 0; i < task.goals.size(); ++i) {
            if (!(gs.visited & (1u << i))) set(task.goals[i], 5);
        }
    }
    return x;
}

/// Decodes a TaskMdp state id without building the MDP.
inline GridState decode_state(const GridTask& task, StateId s) {
    const std::size_t masks = task.kind == Kind::Tsp ? (std::size_t{1} << task.goals.size()) : 1;
    if (s == masks * kCells * 4) return {{}, 0, true};
    GridState gs;
    gs.pose.dir = static_cast<int>(s % 4);
    gs.pose.cell = static_cast<int>((s / 4) % kCells);
    gs.visited = static_cast<unsigned>(s / (4 * kCells));
    return gs;
}

/// Tabular MDP of one task. Shortest path: states are poses plus one absorbing
/// terminal entered on a goal or bomb. TSP: states are (visited-goal mask, pose)
/// plus the terminal entered when the agent returns to its start cell with all
/// goals visited. Undiscounted; episodes are capped by a horizon at evaluation.
class TaskMdp {
public:
    TaskMdp() = default;

    explicit TaskMdp(const GridTask& task) : task_(task) {
        task.validate();
        const std::size_t masks = task.kind == Kind::Tsp ? (std::size_t{1} << task.goals.size()) : 1;
        n_live_ = masks * kCells * 4;
        const std::size_t S = n_live_ + 1;
        const StateId term = static_cast<StateId>(n_live_);
        cell_goal_.assign(kCells, -1);
        for (std::size_t i = 0; i < task.goals.size(); ++i) cell_goal_[static_cast<std::size_t>(task.goals[i])] = static_cast<int>(i);
        std::vector<char> mud(kCells, 0), bomb(kCells, 0);
        for (int c : task.muds) mud[static_cast<std::size_t>(c)] = 1;
        for (int c : task.bombs) bomb[static_cast<std::size_t>(c)] = 1;
        const unsigned full = static_cast<unsigned>(masks - 1);

        std::vector<std::vector<Transition>> rows(S * kActions);
        Eigen::MatrixXd reward = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(S), kActions);
        for (StateId s = 0; s < n_live_; ++s) {
            const GridState gs = decode(s);
            for (ActionId a = 0; a < kActions; ++a) {
                const Pose np = apply_action(gs.pose, a);
                double r = kStepReward;
                StateId next;
                if (task.kind == Kind::ShortestPath) {
                    const bool moved = a == Move && np.cell != gs.pose.cell;
                    if (moved && cell_goal_[static_cast<std::size_t>(np.cell)] >= 0) {
                        r += kGoalReward;
                        next = term;
                    } else if (moved && bomb[static_cast<std::size_t>(np.cell)]) {
                        r += kBombReward;
                        next = term;
                    } else {
                        if (moved && mud[static_cast<std::size_t>(np.cell)]) r += kMudReward;
                        next = encode({np, 0, false});
                    }
                } else {
                    unsigned mask = gs.visited;
                    const int g = cell_goal_[static_cast<std::size_t>(np.cell)];
                    if (g >= 0) mask |= 1u << g;
                    const bool moved = a == Move && np.cell != gs.pose.cell;
                    if (moved && mask == full && np.cell == task.start.cell) {
                        r += kTourReward;
                        next = term;
                    } else {
                        next = encode({np, mask, false});
                    }
                }
                rows[s * kActions + a] = {{next, 1.0}};
                reward(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = r;
            }
        }
        for (ActionId a = 0; a < kActions; ++a) rows[term * kActions + a] = {{term, 1.0}};
        start_ = encode({task.start, 0, false});
        Eigen::VectorXd p0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(S));
        p0[static_cast<Eigen::Index>(start_)] = 1.0;
        std::vector<bool> terminal(S, false);
        terminal[term] = true;
        mdp_ = TabularMdp(S, kActions, rows, 1.0, std::move(p0), std::move(reward), std::move(terminal));
    }

    const TabularMdp& mdp() const noexcept { return mdp_; }
    const GridTask& task() const noexcept { return task_; }
    StateId start() const noexcept { return start_; }
    StateId terminal_state() const noexcept { return static_cast<StateId>(n_live_); }

    StateId encode(const GridState& gs) const {
        if (gs.terminal) return terminal_state();
        return static_cast<StateId>((static_cast<std::size_t>(gs.visited) * kCells + static_cast<std::size_t>(gs.pose.cell)) * 4 +
                                    static_cast<std::size_t>(gs.pose.dir));
    }

    GridState decode(StateId s) const {
        if (s == terminal_state()) return {{}, 0, true};
        GridState gs;
        gs.pose.dir = static_cast<int>(s % 4);
        gs.pose.cell = static_cast<int>((s / 4) % kCells);
        gs.visited = static_cast<unsigned>(s / (4 * kCells));
        return gs;
    }

    /// Flattened 6 x 6 x C feature tensor, index (cell * C + channel).
    Eigen::VectorXd state_input(StateId s) const { return task_input(task_, decode(s)); }

private:
    GridTask task_;
    TabularMdp mdp_;
    std::size_t n_live_ = 0;
    StateId start_ = 0;
    std::vector<int> cell_goal_;
};

/// Default episode caps: 72 for TSP, 96 for shortest path.
inline std::size_t default_horizon(Kind k) { return k == Kind::Tsp ? 72 : 96; }

struct TaskSolution {
    double optimal_reward = 0.0;
    /// Number of distinct optimal action sequences from the start, saturated at the cap.
    std::uint64_t optimal_paths = 0;
    std::vector<Demonstration> demos;
    ValueIterationResult values;
};

/// Exact solution by value iteration plus a count and enumeration of optimal
/// action sequences over the graph of Q-optimal actions (a DAG, since every
/// action costs at least one unit).
inline TaskSolution solve_task(const TaskMdp& tm, std::size_t max_demos, std::uint64_t path_cap,
                               double tie_tol = 1e-9) {
    const auto& mdp = tm.mdp();
    TaskSolution sol;
    sol.values = value_iteration(mdp, {.tol = 1e-10, .max_iters = 100000, .tie_tol = tie_tol});
    sol.optimal_reward = sol.values.values[static_cast<Eigen::Index>(tm.start())];
    const auto S = mdp.n_states();
    auto optimal = [&](StateId s, ActionId a) {
        return sol.values.q_values(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) >=
               sol.values.values[static_cast<Eigen::Index>(s)] - tie_tol;
    };
    std::vector<std::uint64_t> count(S, 0);
    std::vector<char> done(S, 0);
    // Iterative post-order DFS over the optimal-action DAG.
    std::vector<std::pair<StateId, ActionId>> stack = {{tm.start(), 0}};
    while (!stack.empty()) {
        auto& [s, a] = stack.back();
        if (mdp.is_terminal(s)) {
            count[s] = 1;
            done[s] = 1;
            stack.pop_back();
            continue;
        }
        if (a == kActions) {
            std::uint64_t total = 0;
            for (ActionId b = 0; b < kActions; ++b) {
                if (optimal(s, b)) total = std::min(path_cap, total + count[mdp.successors(s, b)[0].next]);
            }
            count[s] = total;
            done[s] = 1;
            stack.pop_back();
            continue;
        }
        const ActionId cur = a++;
        if (!optimal(s, cur)) continue;
        const StateId next = mdp.successors(s, cur)[0].next;
        if (!done[next]) stack.push_back({next, 0});
    }
    sol.optimal_paths = count[tm.start()];

    Demonstration path{tm.start(), {}, std::nullopt};
    std::function<void(StateId)> walk = [&](StateId s) {
        if (sol.demos.size() >= max_demos) return;
        if (mdp.is_terminal(s)) {
            Demonstration d = path;
            d.end = s;
            sol.demos.push_back(std::move(d));
            return;
        }
        for (ActionId a = 0; a < kActions; ++a) {
            if (!optimal(s, a)) continue;
            path.steps.push_back({s, a});
            walk(mdp.successors(s, a)[0].next);
            path.steps.pop_back();
        }
    };
    if (max_demos > 0) walk(tm.start());
    return sol;
}

/// Fewest actions from `from` to each pose (BFS), with the first action of
/// one shortest path recorded per pose in (move, left, right) order.
struct PoseDistances {
    std::array<int, kCells * 4> dist{};
    std::array<int, kCells * 4> parent{};
    std::array<int, kCells * 4> parent_action{};
};

inline int pose_id(Pose p) { return p.cell * 4 + p.dir; }

inline PoseDistances pose_bfs(Pose from) {
    PoseDistances out;
    out.dist.fill(-1);
    out.parent.fill(-1);
    out.parent_action.fill(-1);
    std::deque<Pose> q = {from};
    out.dist[static_cast<std::size_t>(pose_id(from))] = 0;
    while (!q.empty()) {
        const Pose p = q.front();
        q.pop_front();
        for (ActionId a = 0; a < kActions; ++a) {
            const Pose np = apply_action(p, a);
            auto& d = out.dist[static_cast<std::size_t>(pose_id(np))];
            if (d >= 0) continue;
            d = out.dist[static_cast<std::size_t>(pose_id(p))] + 1;
            out.parent[static_cast<std::size_t>(pose_id(np))] = pose_id(p);
            out.parent_action[static_cast<std::size_t>(pose_id(np))] = static_cast<int>(a);
            q.push_back(np);
        }
    }
    return out;
}

/// Closest arrival pose at `cell` (ties by facing order).
inline std::optional<Pose> nearest_arrival(const PoseDistances& pd, int cell) {
    std::optional<Pose> best;
    int best_d = std::numeric_limits<int>::max();
    for (int d = 0; d < 4; ++d) {
        const int v = pd.dist[static_cast<std::size_t>(cell * 4 + d)];
        if (v >= 0 && v < best_d) {
            best_d = v;
            best = Pose{cell, d};
        }
    }
    return best;
}

inline std::vector<ActionId> bfs_path(const PoseDistances& pd, Pose to) {
    std::vector<ActionId> out;
    for (int id = pose_id(to); pd.parent[static_cast<std::size_t>(id)] >= 0; id = pd.parent[static_cast<std::size_t>(id)]) {
        out.push_back(static_cast<ActionId>(pd.parent_action[static_cast<std::size_t>(id)]));
    }
    std::reverse(out.begin(), out.end());
    return out;
}

/// Nearest-unvisited-goal tour: repeatedly head to the closest goal not yet
/// visited (goals crossed on the way count as visited), then return to the
/// start cell. Returns the reward of the executed tour in the task MDP.
inline double greedy_tour_reward(const TaskMdp& tm) {
    const auto& task = tm.task();
    if (task.kind != Kind::Tsp) throw ValidationError("greedy tour needs a tsp task");
    const auto& mdp = tm.mdp();
    StateId s = tm.start();
    double total = 0.0;
    auto follow = [&](const std::vector<ActionId>& actions) {
        for (ActionId a : actions) {
            if (mdp.is_terminal(s)) return;
            total += mdp.reward(s, a);
            s = mdp.successors(s, a)[0].next;
        }
    };
    const unsigned full = (1u << task.goals.size()) - 1;
    while (!mdp.is_terminal(s)) {
        const GridState gs = tm.decode(s);
        const PoseDistances pd = pose_bfs(gs.pose);
        if (gs.visited == full) {
            follow(bfs_path(pd, *nearest_arrival(pd, task.start.cell)));
            break;
        }
        int best_goal = -1, best_d = std::numeric_limits<int>::max();
        for (std::size_t i = 0; i < task.goals.size(); ++i) {
            if (gs.visited & (1u << i)) continue;
            const auto arr = nearest_arrival(pd, task.goals[i]);
            const int d = pd.dist[static_cast<std::size_t>(pose_id(*arr))];
            if (d < best_d) {
                best_d = d;
                best_goal = static_cast<int>(i);
            }
        }
        follow(bfs_path(pd, *nearest_arrival(pd, task.goals[static_cast<std::size_t>(best_goal)])));
    }
    return total;
}

}  // namespace curteach::grid

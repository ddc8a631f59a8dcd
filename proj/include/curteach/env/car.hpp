#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "curteach/dynamic_programming.hpp"
#include "curteach/errors.hpp"
#include "curteach/mdp.hpp"
#include "curteach/random.hpp"

namespace curteach::car {

// Highway tasks: 8 types x 5 instances, each 10 rows long and 2 lanes wide.
inline constexpr std::size_t kTypes = 8;
inline constexpr std::size_t kInstances = 5;
inline constexpr std::size_t kRows = 10;
inline constexpr std::size_t kLanes = 2;
inline constexpr std::size_t kStates = kTypes * kInstances * kRows * kLanes;
inline constexpr std::size_t kActions = 3;
inline constexpr std::size_t kFeatures = 8;

enum Action : ActionId { Left = 0, Straight = 1, Right = 2 };

enum Feature : std::size_t { Stone = 0, Grass, Car, Ped, CarFront, PedFront, Hov, Police };

inline constexpr std::array<const char*, kFeatures> kFeatureNames = {"stone", "grass", "car", "ped",
                                                                    "car-front", "ped-front", "hov", "police"};

/// Teacher weights for the linear part of the reward.
inline Eigen::VectorXd reward_weights() {
    Eigen::VectorXd w(kFeatures);
    w << -1.0, -0.5, -5.0, -10.0, -2.0, -5.0, 1.0, 0.0;
    return w;
}

/// Driving on HOV with police present yields -5 instead of the linear +1.
inline constexpr double kHovPoliceReward = -5.0;

/// R^E(phi) = <w, phi> with the HOV/police override.
inline double reward_of(const Eigen::Ref<const Eigen::VectorXd>& phi) {
    double r = reward_weights().dot(phi);
    if (phi[Hov] > 0.5 && phi[Police] > 0.5) r += kHovPoliceReward - 1.0;
    return r;
}

/// theta* for a linear learner: the teacher weights (exact except on HOV with police).
inline Eigen::VectorXd linear_target() { return reward_weights(); }

/// theta* for the quadratic learner <theta1, phi> + <theta2, phi>^2, which
/// reproduces the override exactly: theta2 = sqrt(3) (hov - police), and
/// theta1 compensates the squared diagonal terms.
inline Eigen::VectorXd quadratic_target() {
    const double a = std::sqrt(3.0);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(2 * kFeatures);
    theta.head(kFeatures) = reward_weights();
    theta[Hov] -= a * a;
    theta[Police] -= a * a;
    theta[kFeatures + Hov] = a;
    theta[kFeatures + Police] = -a;
    return theta;
}

inline StateId state_index(std::size_t type, std::size_t instance, std::size_t row, std::size_t lane) {
    return static_cast<StateId>(((type * kInstances + instance) * kRows + row) * kLanes + lane);
}

struct CellObjects {
    bool stone = false, grass = false, car = false, ped = false, hov = false, police = false;
};

using Layout = std::array<std::array<CellObjects, kLanes>, kRows>;

/// Seeded object layout for one task. Row 0 (the start row) is always clear.
inline Layout generate_layout(std::size_t type, Rng& rng) {
    Layout L{};
    auto coin = [&](double p) { return uniform01(rng) < p; };
    auto lane = [&]() { return uniform_index(rng, kLanes); };
    for (std::size_t r = 1; r < kRows; ++r) {
        auto& row = L[r];
        switch (type) {
            case 0: break;
            case 1:
                if (coin(0.45)) row[lane()].car = true;
                break;
            case 2:
                if (coin(0.5)) row[1].stone = true;
                break;
            case 3:
                if (coin(0.3)) row[lane()].car = true;
                if (!row[1].car && coin(0.4)) row[1].stone = true;
                break;
            case 4:
                if (coin(0.6)) row[1].grass = true;
                break;
            case 5:
                if (coin(0.5)) row[1].grass = true;
                if (coin(0.3)) {
                    const auto l = lane();
                    row[l].car = true;
                    row[l].grass = false;
                }
                break;
            case 6:
                if (coin(0.3)) row[lane()].ped = true;
                if (coin(0.25)) {
                    const auto l = lane();
                    if (!row[l].ped) row[l].car = true;
                }
                break;
            case 7:
                row[1].hov = true;
                if (coin(0.35)) row[1].police = true;
                if (coin(0.3)) row[0].car = true;
                break;
            default: throw ValidationError("car: unknown task type");
        }
    }
    return L;
}

/// Feature vector of the cell at (row, lane).
inline Eigen::VectorXd cell_features(const Layout& L, std::size_t row, std::size_t lane) {
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(kFeatures);
    const auto& c = L[row][lane];
    phi[Stone] = c.stone;
    phi[Grass] = c.grass;
    phi[Car] = c.car;
    phi[Ped] = c.ped;
    phi[Hov] = c.hov;
    phi[Police] = c.police;
    if (row + 1 < kRows) {
        phi[CarFront] = L[row + 1][lane].car;
        phi[PedFront] = L[row + 1][lane].ped;
    }
    return phi;
}

struct CarConfig {
    std::uint64_t layout_seed = 0;
    double gamma = 0.99;
    /// Temperature of the teacher's soft-Bellman policy on R^E.
    double teacher_temperature = 1.0;
};

struct CarEnvironment {
    TabularMdp mdp;
    /// phi^E(s), one row per state.
    Eigen::MatrixXd state_features;
    /// phi(s,a) = phi^E(s).
    FeatureMap raw_features;
    /// phi(s,a) = E_{s' ~ T(.|s,a)} phi^E(s').
    FeatureMap smoothed_features;
    std::vector<Layout> layouts;
    /// Start state of each of the 40 tasks, ordered by type then instance.
    std::vector<StateId> start_states;
    std::vector<std::size_t> state_type;
    Policy teacher;
};

inline std::size_t task_type_of_start(std::size_t task) { return task / kInstances; }

/// The 800-state highway MDP. The agent advances one row per step; left/right
/// change lane, and steering off the road picks a lane uniformly. Reaching the
/// last row ends the episode. Episodes start in the left lane of the first row
/// of a uniformly chosen task.
inline CarEnvironment build_car_environment(const CarConfig& config = {}) {
    if (!(config.teacher_temperature > 0.0)) throw ValidationError("car: teacher temperature must be positive");
    CarEnvironment env;
    env.state_features = Eigen::MatrixXd::Zero(kStates, kFeatures);
    env.state_type.resize(kStates);
    std::vector<std::vector<Transition>> rows(kStates * kActions);
    Eigen::MatrixXd reward = Eigen::MatrixXd::Zero(kStates, kActions);
    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(kStates);
    std::vector<bool> terminal(kStates, false);
    const double start_mass = 1.0 / static_cast<double>(kTypes * kInstances);

    for (std::size_t type = 0; type < kTypes; ++type) {
        for (std::size_t inst = 0; inst < kInstances; ++inst) {
            Rng rng(derive_seed(config.layout_seed, "car-layout", type * kInstances + inst));
            env.layouts.push_back(generate_layout(type, rng));
            const auto& L = env.layouts.back();
            env.start_states.push_back(state_index(type, inst, 0, 0));
            p0[static_cast<Eigen::Index>(env.start_states.back())] = start_mass;
            for (std::size_t r = 0; r < kRows; ++r) {
                for (std::size_t l = 0; l < kLanes; ++l) {
                    const StateId s = state_index(type, inst, r, l);
                    env.state_type[s] = type;
                    const Eigen::VectorXd phi = cell_features(L, r, l);
                    env.state_features.row(static_cast<Eigen::Index>(s)) = phi.transpose();
                    if (r + 1 == kRows) {
                        terminal[s] = true;
                        for (ActionId a = 0; a < kActions; ++a) rows[s * kActions + a] = {{s, 1.0}};
                        continue;
                    }
                    const double rs = reward_of(phi);
                    reward.row(static_cast<Eigen::Index>(s)).setConstant(rs);
                    const StateId up_left = state_index(type, inst, r + 1, 0);
                    const StateId up_right = state_index(type, inst, r + 1, 1);
                    const StateId up_same = l == 0 ? up_left : up_right;
                    const std::vector<Transition> either = {{up_left, 0.5}, {up_right, 0.5}};
                    rows[s * kActions + Straight] = {{up_same, 1.0}};
                    rows[s * kActions + Left] = l == 0 ? either : std::vector<Transition>{{up_left, 1.0}};
                    rows[s * kActions + Right] = l == 1 ? either : std::vector<Transition>{{up_right, 1.0}};
                }
            }
        }
    }
    env.mdp = TabularMdp(kStates, kActions, rows, config.gamma, p0, reward, terminal);
    env.raw_features = FeatureMap::action_independent(env.state_features, kActions);
    env.smoothed_features = FeatureMap::transition_smoothed(env.mdp, env.state_features);
    env.teacher = soft_value_iteration(env.mdp, reward / config.teacher_temperature, {.tol = 1e-12}).policy;
    return env;
}

/// ASCII picture of one task, top row first: '.' empty, 'S' stone, 'G' grass,
/// 'C' car, 'P' pedestrian, 'H' HOV, 'X' HOV with police.
inline std::string render_task(const Layout& L) {
    std::string out;
    for (std::size_t r = kRows; r-- > 0;) {
        for (std::size_t l = 0; l < kLanes; ++l) {
            const auto& c = L[r][l];
            char ch = '.';
            if (c.hov) ch = c.police ? 'X' : 'H';
            if (c.stone) ch = 'S';
            if (c.grass) ch = 'G';
            if (c.ped) ch = 'P';
            if (c.car) ch = 'C';
            out += ch;
        }
        out += '\n';
    }
    return out;
}

}  // namespace curteach::car

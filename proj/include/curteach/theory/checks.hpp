#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "curteach/curricula/difficulty.hpp"
#include "curteach/curricula/selection.hpp"
#include "curteach/dynamic_programming.hpp"
#include "curteach/errors.hpp"
#include "curteach/learners/learner.hpp"
#include "curteach/mdp.hpp"
#include "curteach/numeric.hpp"
#include "curteach/occupancy.hpp"
#include "curteach/theory/instances.hpp"
#include "curteach/trajectory.hpp"

namespace curteach::theory {

/// Soft-Bellman policy of the linear reward <theta, phi(s,a)>.
inline Policy linear_soft_policy(const TabularMdp& mdp, const FeatureMap& features, const Eigen::VectorXd& theta) {
    const ScoringModel linear(Parameterization::Linear, features.dim(), mdp.n_actions());
    return soft_value_iteration(mdp, learner_scores(linear, theta, mdp, features), {.tol = 1e-13}).policy;
}

/// log Z(theta) = log sum_xi exp <theta, mu^xi> over an enumerated trajectory set.
inline double log_partition(std::span<const Eigen::VectorXd> mus, const Eigen::VectorXd& theta) {
    std::vector<double> s;
    s.reserve(mus.size());
    for (const auto& mu : mus) s.push_back(theta.dot(mu));
    return log_sum_exp(s);
}

struct GibbsReport {
    std::size_t trajectories = 0;
    double max_relative_error = 0.0;
    double total_probability = 0.0;
    bool pass = false;
};

/// Compares prod_tau pi_theta(a_tau|s_tau) with exp<theta, mu^xi>/Z(theta) on
/// every trajectory of a deterministic undiscounted instance.
inline GibbsReport check_gibbs_consistency(const LayeredInstance& inst, const Eigen::VectorXd& theta,
                                           double tolerance = 1e-8) {
    if (!inst.mdp.is_deterministic()) throw ValidationError("gibbs check needs deterministic transitions");
    const Policy pi = linear_soft_policy(inst.mdp, inst.features, theta);
    const auto trajs = enumerate_trajectories(inst.mdp, inst.start, inst.depth + 1);
    std::vector<Eigen::VectorXd> mus;
    for (const auto& xi : trajs) mus.push_back(demonstration_features(xi, inst.features, inst.mdp.gamma()));
    const double log_z = log_partition(mus, theta);
    GibbsReport r;
    r.trajectories = trajs.size();
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        const double gibbs = std::exp(theta.dot(mus[i]) - log_z);
        const double product = std::exp(-policy_negative_log_likelihood(pi, trajs[i]));
        r.total_probability += product;
        r.max_relative_error = std::max(r.max_relative_error, std::abs(product - gibbs) / gibbs);
    }
    r.pass = r.max_relative_error < tolerance;
    return r;
}

struct IdentityReport {
    /// |(lhs1 - lhs2) - (rhs1 - rhs2)| per demonstration pair.
    std::vector<double> residuals;
    /// |lhs - rhs - K_t| per demonstration, when the full identity was checked.
    std::vector<double> full_residuals;
    double max_abs = 0.0;
    double mean_abs = 0.0;
    double tolerance = 1e-8;
    bool pass = false;
};

struct DemoPair {
    Demonstration first;
    Demonstration second;
};

/// Pairwise form of the MaxEnt identity
///   -<theta* - theta_t, g(xi)> = log Psi^L(xi) - log Psi^E(xi) + K_t,
/// with g(xi) = mu^{pi_t} - mu^xi, Psi^E under pi_{theta*} and Psi^L under
/// pi_{theta_t}. K_t cancels between the two demonstrations of a pair. With
/// `full` set, K_t = log(Z(theta*)/Z(theta_t)) - <theta* - theta_t, mu^{pi_t}>
/// is evaluated from enumerated trajectories and each side checked directly.
inline IdentityReport check_maxent_identity(const LayeredInstance& inst, const Eigen::VectorXd& theta_star,
                                            const Eigen::VectorXd& theta_t, std::span<const DemoPair> pairs,
                                            bool full = false, double tolerance = 1e-8) {
    if (!inst.mdp.is_deterministic()) throw ValidationError("maxent identity needs deterministic transitions");
    const Policy pi_star = linear_soft_policy(inst.mdp, inst.features, theta_star);
    const Policy pi_t = linear_soft_policy(inst.mdp, inst.features, theta_t);
    const Eigen::VectorXd mu_t = feature_expectation(inst.mdp, pi_t, inst.features, {.start = inst.start});
    const Eigen::VectorXd u = theta_star - theta_t;
    double k_t = 0.0;
    if (full) {
        std::vector<Eigen::VectorXd> mus;
        for (const auto& xi : enumerate_trajectories(inst.mdp, inst.start, inst.depth + 1)) {
            mus.push_back(demonstration_features(xi, inst.features, inst.mdp.gamma()));
        }
        k_t = log_partition(mus, theta_star) - log_partition(mus, theta_t) - u.dot(mu_t);
    }
    auto sides = [&](const Demonstration& xi) {
        const Eigen::VectorXd g = mu_t - demonstration_features(xi, inst.features, inst.mdp.gamma());
        const double lhs = -u.dot(g);
        const double rhs = log_difficulty(pi_t, xi) - log_difficulty(pi_star, xi);
        return std::pair{lhs, rhs};
    };
    IdentityReport r;
    r.tolerance = tolerance;
    double total = 0.0;
    for (const auto& p : pairs) {
        const auto [l1, r1] = sides(p.first);
        const auto [l2, r2] = sides(p.second);
        const double res = std::abs((l1 - l2) - (r1 - r2));
        r.residuals.push_back(res);
        r.max_abs = std::max(r.max_abs, res);
        total += res;
        if (full) {
            r.full_residuals.push_back(std::abs(l1 - r1 - k_t));
            r.full_residuals.push_back(std::abs(l2 - r2 - k_t));
            r.max_abs = std::max({r.max_abs, r.full_residuals.end()[-1], r.full_residuals.end()[-2]});
        }
    }
    r.mean_abs = r.residuals.empty() ? 0.0 : total / static_cast<double>(r.residuals.size());
    r.pass = r.max_abs < tolerance;
    return r;
}

struct FirstOrderReport {
    std::vector<double> epsilons;
    std::vector<double> residuals;
    LinearFit fit;
};

/// Residual of the CrossEnt first-order identity along theta* = theta_t + eps u:
///   r(eps) = |log(Psi^L(xi)/Psi^E(xi)) + <theta* - theta_t, g_t(xi)>|,
/// with linear scores <theta, phi(s,a)>. The fitted slope of log r against
/// log eps measures the order at which the remainder vanishes.
inline FirstOrderReport check_crossent_firstorder(const FeatureMap& features, const Eigen::VectorXd& theta_t,
                                                  const Eigen::VectorXd& direction, const Demonstration& xi,
                                                  std::span<const double> epsilons) {
    const ScoringModel linear(Parameterization::Linear, features.dim(), features.n_actions());
    const std::vector<Demonstration> one = {xi};
    const Eigen::VectorXd g = crossent_gradient(linear, theta_t, features, one);
    FirstOrderReport rep;
    std::vector<double> lx, ly;
    for (double eps : epsilons) {
        const Eigen::VectorXd theta_star = theta_t + eps * direction;
        // log Psi^L - log Psi^E = sum_tau [log pi*(a|s) - log pi_t(a|s)].
        double log_ratio = 0.0;
        for (const auto& st : xi.steps) {
            const auto block = features.state_block(st.state);
            const Eigen::VectorXd hs = block * theta_star, ht = block * theta_t;
            log_ratio += (hs[static_cast<Eigen::Index>(st.action)] - log_sum_exp(hs)) -
                         (ht[static_cast<Eigen::Index>(st.action)] - log_sum_exp(ht));
        }
        const double r = std::abs(log_ratio + (theta_star - theta_t).dot(g));
        rep.epsilons.push_back(eps);
        rep.residuals.push_back(r);
        if (r > 0.0) {
            lx.push_back(std::log(eps));
            ly.push_back(std::log(r));
        }
    }
    if (lx.size() >= 2) rep.fit = fit_line(lx, ly);
    return rep;
}

/// eta^2 ||g||^2 <= c * 2 eta |<theta* - theta_t, g>|.
inline bool step_size_condition(double eta, const Eigen::VectorXd& g, const Eigen::VectorXd& theta_star,
                                const Eigen::VectorXd& theta, double c = 0.1) {
    return eta * eta * g.squaredNorm() <= c * 2.0 * eta * std::abs((theta_star - theta).dot(g));
}

struct TraceStep {
    double eta = 0.0;
    Eigen::VectorXd gradient;
    Eigen::VectorXd theta;
};

inline std::vector<bool> check_step_size_condition(std::span<const TraceStep> trace, const Eigen::VectorXd& theta_star,
                                                   double c = 0.1) {
    std::vector<bool> out;
    out.reserve(trace.size());
    for (const auto& st : trace) out.push_back(step_size_condition(st.eta, st.gradient, theta_star, st.theta, c));
    return out;
}

struct MonotonicityReport {
    std::size_t bins = 0;
    /// Mean Delta per cell, row = psi^E bin, column = psi^L bin; NaN when empty.
    Eigen::MatrixXd cell_means;
    Eigen::MatrixXi cell_counts;
    std::size_t pairs_teacher = 0, correct_teacher = 0;
    std::size_t pairs_learner = 0, correct_learner = 0;
    std::size_t empty_cells = 0;
    std::vector<std::string> warnings;

    double fraction_correct() const {
        const auto pairs = pairs_teacher + pairs_learner;
        return pairs == 0 ? 0.0 : static_cast<double>(correct_teacher + correct_learner) / static_cast<double>(pairs);
    }
};

/// Per-demonstration one-step progress Delta(xi) = ||theta* - theta_t||^2 -
/// ||theta* - theta_{t+1}(xi)||^2 for the linear MaxEnt learner, averaged over
/// an equal-width grid of (log psi^E, log psi^L) cells. Adjacent non-empty cells
/// along each axis give finite-difference slope signs; the expected signs are
/// negative along psi^E and positive along psi^L. Cells holding fewer than
/// `min_count` demonstrations are treated as empty.
inline MonotonicityReport monotonicity_experiment(const LayeredInstance& inst, const Eigen::VectorXd& theta_star,
                                                  const Eigen::VectorXd& theta_t, std::span<const Demonstration> pool,
                                                  double eta, std::size_t bins, std::size_t min_count = 1) {
    if (bins == 0) throw ValidationError("monotonicity: bins must be positive");
    const Policy pi_star = linear_soft_policy(inst.mdp, inst.features, theta_star);
    const Policy pi_t = linear_soft_policy(inst.mdp, inst.features, theta_t);
    const Eigen::VectorXd mu_t = feature_expectation(inst.mdp, pi_t, inst.features, {.start = inst.start});
    const Eigen::VectorXd u = theta_star - theta_t;
    std::vector<double> le, ll, delta;
    for (const auto& xi : pool) {
        le.push_back(log_difficulty(pi_star, xi));
        ll.push_back(log_difficulty(pi_t, xi));
        const Eigen::VectorXd g = mu_t - demonstration_features(xi, inst.features, inst.mdp.gamma());
        delta.push_back(u.squaredNorm() - (u + eta * g).squaredNorm());
    }
    MonotonicityReport rep;
    rep.bins = bins;
    const auto B = static_cast<Eigen::Index>(bins);
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(B, B);
    rep.cell_counts = Eigen::MatrixXi::Zero(B, B);
    auto bin_of = [&](double v, double lo, double hi) {
        if (hi <= lo) return Eigen::Index{0};
        const auto k = static_cast<Eigen::Index>(std::floor((v - lo) / (hi - lo) * static_cast<double>(bins)));
        return std::clamp<Eigen::Index>(k, 0, B - 1);
    };
    const auto [elo, ehi] = std::minmax_element(le.begin(), le.end());
    const auto [llo, lhi] = std::minmax_element(ll.begin(), ll.end());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto be = bin_of(le[i], *elo, *ehi), bl = bin_of(ll[i], *llo, *lhi);
        sums(be, bl) += delta[i];
        rep.cell_counts(be, bl) += 1;
    }
    rep.cell_means = Eigen::MatrixXd::Constant(B, B, std::numeric_limits<double>::quiet_NaN());
    for (Eigen::Index i = 0; i < B; ++i) {
        for (Eigen::Index j = 0; j < B; ++j) {
            if (rep.cell_counts(i, j) >= static_cast<int>(min_count)) {
                rep.cell_means(i, j) = sums(i, j) / rep.cell_counts(i, j);
            } else {
                ++rep.empty_cells;
            }
        }
    }
    if (rep.empty_cells > 0) rep.warnings.push_back(std::to_string(rep.empty_cells) + " empty cells skipped");
    for (Eigen::Index i = 0; i < B; ++i) {
        for (Eigen::Index j = 0; j < B; ++j) {
            const double here = rep.cell_means(i, j);
            if (std::isnan(here)) continue;
            if (i + 1 < B && !std::isnan(rep.cell_means(i + 1, j))) {
                ++rep.pairs_teacher;
                if (rep.cell_means(i + 1, j) < here) ++rep.correct_teacher;
            }
            if (j + 1 < B && !std::isnan(rep.cell_means(i, j + 1))) {
                ++rep.pairs_learner;
                if (rep.cell_means(i, j + 1) > here) ++rep.correct_learner;
            }
        }
    }
    if (rep.pairs_teacher + rep.pairs_learner == 0) rep.warnings.push_back("no adjacent cell pairs; slopes undefined");
    return rep;
}

struct ConvergenceReport {
    /// ||theta* - theta_t|| for t = 1..T+1.
    std::vector<double> distances;
    std::vector<std::size_t> selected;
    /// Index of argmax_xi <theta* - theta_t, mu^xi> at each step.
    std::vector<std::size_t> inner_product_argmax;
    std::vector<double> betas;
    std::vector<double> delta_norms;
    /// |<delta_t, theta* - theta_t>| / ||theta* - theta_t||, zero up to rounding.
    std::vector<double> orthogonality;
    std::vector<bool> step_condition;
    double Delta = 0.0, z_max = 0.0, eta_max = 0.0, beta = kInf, L = 0.0;
    double plateau_scale = 0.0;
    /// Steps [0, pre_plateau_end) form the fitted segment.
    std::size_t pre_plateau_end = 0;
    LinearFit fit;
};

struct ConvergenceOptions {
    std::size_t steps = 200;
    LearningRateSchedule learning_rate{.initial = 0.05};
    double step_condition_c = 0.1;
    /// The plateau level is this multiple of the mean distance over the final `tail_fraction` of steps.
    double plateau_multiple = 2.0;
    double tail_fraction = 0.2;
};

/// Linear MaxEnt learner taught by CUR from a fixed pool of single
/// demonstrations, recording the decomposition mu^{xi_t} = beta_t (theta* -
/// theta_t) + delta_t and a log-linear fit of the distance over the segment
/// before it first drops to the plateau level.
inline ConvergenceReport convergence_experiment(const LayeredInstance& inst, const Eigen::VectorXd& theta_star,
                                                const Eigen::VectorXd& theta_1, std::span<const Demonstration> pool,
                                                const ConvergenceOptions& opt = {}) {
    const Policy pi_star = linear_soft_policy(inst.mdp, inst.features, theta_star);
    std::vector<double> log_e;
    std::vector<Eigen::VectorXd> mus;
    for (const auto& xi : pool) {
        log_e.push_back(log_difficulty(pi_star, xi));
        mus.push_back(demonstration_features(xi, inst.features, inst.mdp.gamma()));
    }
    ConvergenceReport rep;
    Eigen::VectorXd theta = theta_1;
    for (std::size_t t = 0; t < opt.steps; ++t) {
        const Eigen::VectorXd u = theta_star - theta;
        rep.distances.push_back(u.norm());
        const Policy pi_t = linear_soft_policy(inst.mdp, inst.features, theta);
        std::vector<double> log_l, inner;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            log_l.push_back(log_difficulty(pi_t, pool[i]));
            inner.push_back(u.dot(mus[i]));
        }
        const auto pick = cur_select(log_l, log_e);
        rep.selected.push_back(pick.index);
        rep.inner_product_argmax.push_back(argmax_lowest(inner).index);

        const Eigen::VectorXd mu_t = feature_expectation(inst.mdp, pi_t, inst.features, {.start = inst.start});
        const Eigen::VectorXd& mu_xi = mus[pick.index];
        const Eigen::VectorXd g = mu_t - mu_xi;
        const double eta = opt.learning_rate.at(t);
        const double un = u.squaredNorm();
        const double beta_t = un > 0.0 ? mu_xi.dot(u) / un : 0.0;
        const Eigen::VectorXd delta = mu_xi - beta_t * u;
        rep.betas.push_back(beta_t);
        rep.delta_norms.push_back(delta.norm());
        rep.orthogonality.push_back(un > 0.0 ? std::abs(delta.dot(u)) / std::sqrt(un) : 0.0);
        rep.step_condition.push_back(step_size_condition(eta, g, theta_star, theta, opt.step_condition_c));
        rep.Delta = std::max(rep.Delta, delta.norm());
        rep.z_max = std::max(rep.z_max, u.norm());
        rep.eta_max = std::max(rep.eta_max, eta);
        rep.beta = std::min(rep.beta, eta * beta_t);
        rep.L = std::max({rep.L, mu_xi.norm(), mu_t.norm()});
        theta = apply_update(theta, g, eta);
    }
    rep.distances.push_back((theta_star - theta).norm());
    if (rep.beta > 0.0 && std::isfinite(rep.beta)) rep.plateau_scale = std::sqrt(rep.eta_max * (rep.Delta + rep.L)) / rep.beta;

    const std::size_t n = rep.distances.size();
    const std::size_t tail = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(opt.tail_fraction * static_cast<double>(n))));
    double tail_mean = 0.0;
    for (std::size_t i = n - tail; i < n; ++i) tail_mean += rep.distances[i];
    tail_mean /= static_cast<double>(tail);
    const double level = opt.plateau_multiple * tail_mean;
    rep.pre_plateau_end = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (rep.distances[i] <= level) {
            rep.pre_plateau_end = i + 1;
            break;
        }
    }
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < rep.pre_plateau_end; ++i) {
        if (rep.distances[i] <= 0.0) break;
        xs.push_back(static_cast<double>(i));
        ys.push_back(std::log(rep.distances[i]));
    }
    if (xs.size() >= 2) rep.fit = fit_line(xs, ys);
    return rep;
}

}  // namespace curteach::theory

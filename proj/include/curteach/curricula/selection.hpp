#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "curteach/errors.hpp"
#include "curteach/numeric.hpp"
#include "curteach/random.hpp"

namespace curteach {

enum class Strategy { Cur, CurT, CurL, Agn, Omn, Bbox, Scot };

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Cur: return "cur";
        case Strategy::CurT: return "cur-t";
        case Strategy::CurL: return "cur-l";
        case Strategy::Agn: return "agn";
        case Strategy::Omn: return "omn";
        case Strategy::Bbox: return "bbox";
        case Strategy::Scot: return "scot";
    }
    return "?";
}

inline Strategy parse_strategy(const std::string& s) {
    for (auto st : {Strategy::Cur, Strategy::CurT, Strategy::CurL, Strategy::Agn, Strategy::Omn, Strategy::Bbox,
                    Strategy::Scot}) {
        if (s == strategy_name(st)) return st;
    }
    throw ValidationError("unknown strategy '" + s + "'");
}

/// How CUR-T / CUR-L turn their single score into a pick.
enum class SelectionMode { Argmax, Softmax };

struct Selection {
    std::size_t index = 0;
    double score = 0.0;
};

/// Index of the largest score, lowest index on ties. NaN never wins.
inline Selection argmax_lowest(std::span<const double> scores) {
    if (scores.empty()) throw ValidationError("selection over an empty pool");
    Selection best{0, -kInf};
    bool found = false;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double v = scores[i];
        if (std::isnan(v)) continue;
        if (!found || v > best.score) {
            best = {i, v};
            found = true;
        }
    }
    if (!found) best = {0, scores[0]};
    return best;
}

/// Indices sorted by descending score, ties by ascending index.
inline std::vector<std::size_t> rank_descending(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto key = [&](std::size_t i) { return std::isnan(scores[i]) ? -kInf : scores[i]; };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
    return order;
}

/// log Psi^L - log Psi^E per candidate; inf - inf counts as 0.
inline std::vector<double> cur_scores(std::span<const double> log_learner, std::span<const double> log_teacher) {
    if (log_learner.size() != log_teacher.size()) throw ValidationError("cur_scores: size mismatch");
    std::vector<double> out(log_learner.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double l = log_learner[i], e = log_teacher[i];
        out[i] = (std::isinf(l) && std::isinf(e) && (l > 0) == (e > 0)) ? 0.0 : l - e;
    }
    return out;
}

inline Selection cur_select(std::span<const double> log_learner, std::span<const double> log_teacher) {
    const auto scores = cur_scores(log_learner, log_teacher);
    return argmax_lowest(scores);
}

/// Draws an index with probability proportional to exp(score / temperature).
inline Selection softmax_sample(std::span<const double> scores, double temperature, Rng& rng) {
    if (scores.empty()) throw ValidationError("selection over an empty pool");
    if (!(temperature > 0.0)) throw ValidationError("softmax temperature must be positive");
    Eigen::VectorXd z(static_cast<Eigen::Index>(scores.size()));
    for (std::size_t i = 0; i < scores.size(); ++i) {
        z[static_cast<Eigen::Index>(i)] = std::isnan(scores[i]) ? -kInf : scores[i] / temperature;
    }
    if (z.maxCoeff() == kInf) return argmax_lowest(scores);
    const Eigen::VectorXd p = softmax(z);
    const auto i = sample_categorical(rng, std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
    return {i, scores[i]};
}

/// CUR-T: the easiest demonstration for the teacher, i.e. argmin log Psi^E.
inline Selection cur_t_select(std::span<const double> log_teacher, SelectionMode mode = SelectionMode::Argmax,
                              Rng* rng = nullptr, double temperature = 1.0) {
    std::vector<double> neg(log_teacher.size());
    for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -log_teacher[i];
    Selection s = mode == SelectionMode::Softmax ? softmax_sample(neg, temperature, *rng) : argmax_lowest(neg);
    s.score = -s.score;
    return s;
}

/// CUR-L: the hardest demonstration for the learner, i.e. argmax log Psi^L.
inline Selection cur_l_select(std::span<const double> log_learner, SelectionMode mode = SelectionMode::Argmax,
                              Rng* rng = nullptr, double temperature = 1.0) {
    return mode == SelectionMode::Softmax ? softmax_sample(log_learner, temperature, *rng) : argmax_lowest(log_learner);
}

inline Selection agn_select(std::size_t pool_size, Rng& rng) {
    if (pool_size == 0) throw ValidationError("selection over an empty pool");
    return {uniform_index(rng, pool_size), 0.0};
}

/// argmin_i ||theta* - theta_t + eta g_i||; the reported score is the distance.
inline Selection omn_select(std::span<const Eigen::VectorXd> gradients, const Eigen::VectorXd& theta_star,
                            const Eigen::VectorXd& theta, double eta) {
    std::vector<double> neg(gradients.size());
    const Eigen::VectorXd gap = theta_star - theta;
    for (std::size_t i = 0; i < gradients.size(); ++i) neg[i] = -(gap + eta * gradients[i]).norm();
    Selection s = argmax_lowest(neg);
    s.score = -s.score;
    return s;
}

/// argmax_i |sum_{s,a} (rho^learner_i - rho^xi_i)(s,a) R^E(s,a)|.
inline Selection bbox_select(std::span<const Eigen::MatrixXd> learner_visitation,
                             std::span<const Eigen::MatrixXd> demo_visitation, const Eigen::MatrixXd& reward) {
    if (learner_visitation.size() != demo_visitation.size()) throw ValidationError("bbox_select: size mismatch");
    std::vector<double> scores(demo_visitation.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = std::abs((learner_visitation[i] - demo_visitation[i]).cwiseProduct(reward).sum());
    }
    return argmax_lowest(scores);
}

}  // namespace curteach

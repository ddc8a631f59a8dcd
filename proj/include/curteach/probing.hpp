#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>

#include <Eigen/Dense>

#include "curteach/errors.hpp"
#include "curteach/mdp.hpp"
#include "curteach/random.hpp"

namespace curteach {

/// Probe every `interval` steps with `queries` sampled actions per state.
/// An unset `queries` means the probe returns the exact policy.
struct ProbeConfig {
    std::size_t interval = 1;
    std::optional<std::size_t> queries;

    void validate() const {
        if (interval < 1) throw ValidationError("probe interval must be >= 1");
        if (queries && *queries < 1) throw ValidationError("probe queries must be >= 1");
    }
};

/// Empirical action frequencies from k independent queries per state.
/// Terminal states are probed trivially and keep the true row.
inline Policy probe_policy(const TabularMdp& mdp, const Policy& learner, std::size_t k, std::uint64_t seed) {
    if (k < 1) throw ValidationError("probe_policy: k must be >= 1");
    Rng rng(seed);
    Policy out{Eigen::MatrixXd::Zero(learner.probs.rows(), learner.probs.cols())};
    const auto A = static_cast<std::size_t>(learner.probs.cols());
    std::vector<double> row(A);
    for (Eigen::Index s = 0; s < learner.probs.rows(); ++s) {
        if (mdp.is_terminal(static_cast<StateId>(s))) {
            out.probs.row(s) = learner.probs.row(s);
            continue;
        }
        for (std::size_t a = 0; a < A; ++a) row[a] = learner.probs(s, static_cast<Eigen::Index>(a));
        for (std::size_t q = 0; q < k; ++q) out.probs(s, static_cast<Eigen::Index>(sample_categorical(rng, row))) += 1.0;
        out.probs.row(s) /= static_cast<double>(k);
    }
    return out;
}

/// max_s TV(p(.|s), q(.|s)).
inline double max_tv_distance(const Policy& p, const Policy& q) {
    return 0.5 * (p.probs - q.probs).cwiseAbs().rowwise().sum().maxCoeff();
}

/// The teacher's view of the learner under limited observability: refreshed
/// at steps 1, 1 + B, 1 + 2B, ... and held constant in between.
class StalePolicyView {
public:
    StalePolicyView(ProbeConfig config, std::uint64_t seed) : config_(config), seed_(seed) { config_.validate(); }

    bool due(std::size_t t) const { return !estimate_ || (t - 1) % config_.interval == 0; }

    /// Returns the estimate the teacher uses at step t (1-based), probing
    /// `learner` first when a refresh is due.
    const Policy& view(std::size_t t, const TabularMdp& mdp, const Policy& learner) {
        if (t < 1) throw ValidationError("StalePolicyView: steps are 1-based");
        if (due(t)) {
            estimate_ = config_.queries ? probe_policy(mdp, learner, *config_.queries, derive_seed(seed_, "probe", t))
                                        : learner;
            last_probe_ = t;
            last_tv_ = max_tv_distance(*estimate_, learner);
        }
        return *estimate_;
    }

    std::size_t last_probe() const noexcept { return last_probe_; }
    double last_tv() const noexcept { return last_tv_; }
    const ProbeConfig& config() const noexcept { return config_; }

private:
    ProbeConfig config_;
    std::uint64_t seed_;
    std::optional<Policy> estimate_;
    std::size_t last_probe_ = 0;
    double last_tv_ = 0.0;
};

}  // namespace curteach

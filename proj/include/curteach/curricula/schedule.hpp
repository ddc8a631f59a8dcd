#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "curteach/errors.hpp"

namespace curteach {

struct SchedulerParams {
    double a = 0.8;
    double b = 0.5;
    std::size_t epochs = 40;

    void validate() const {
        if (!(a > 0.0 && a <= 1.0)) throw ValidationError("scheduler: a must lie in (0, 1]");
        if (!(b > 0.0 && b <= 1.0)) throw ValidationError("scheduler: b must lie in (0, 1]");
        if (epochs == 0) throw ValidationError("scheduler: epochs must be positive");
    }
};

/// Number of demonstrations released in epoch e (1-based):
///   X = floor(b n + e/(a N) (1 - b) n)  if e < a N,  else n,
/// capped at n. A 1e-9 guard absorbs rounding in the product before flooring.
inline std::size_t schedule_size(std::size_t epoch, const SchedulerParams& p, std::size_t pool_size) {
    p.validate();
    if (epoch < 1 || epoch > p.epochs) throw ValidationError("scheduler: epoch out of range");
    const double n = static_cast<double>(pool_size);
    const double e = static_cast<double>(epoch);
    const double aN = p.a * static_cast<double>(p.epochs);
    if (e >= aN) return pool_size;
    const double x = p.b * n + e / aN * (1.0 - p.b) * n;
    const auto floored = static_cast<std::size_t>(std::floor(x + 1e-9));
    return std::min(floored, pool_size);
}

/// The top-X entries of a preference ranking (most preferred first).
inline std::vector<std::size_t> schedule(std::span<const std::size_t> ranking, std::size_t epoch,
                                         const SchedulerParams& p) {
    const auto x = schedule_size(epoch, p, ranking.size());
    return {ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(x)};
}

}  // namespace curteach

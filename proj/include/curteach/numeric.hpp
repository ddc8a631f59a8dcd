#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <system_error>

#include <Eigen/Dense>

#include "curteach/errors.hpp"

namespace curteach {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// log(sum(exp(x))) with max-subtraction. Empty input yields -inf.
template <typename Range>
double log_sum_exp(const Range& xs) {
    double m = -kInf;
    for (double x : xs) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

inline double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& xs) {
    if (xs.size() == 0) return -kInf;
    const double m = xs.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((xs.array() - m).exp().sum());
}

/// Softmax of a score vector; numerically stable.
inline Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& scores) {
    const double m = scores.maxCoeff();
    Eigen::VectorXd e = (scores.array() - m).exp().matrix();
    return e / e.sum();
}

/// Shortest decimal string that parses back to the identical double.
inline std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    double x = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ValidationError("malformed number '" + std::string(s) + "'");
    }
    return x;
}

inline long long parse_int(std::string_view s) {
    long long x = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ValidationError("malformed integer '" + std::string(s) + "'");
    }
    return x;
}

/// Ordinary least squares y = a + b x; returns {slope, intercept, r2}.
struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    LinearFit fit;
    if (n < 2) return fit;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) return fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return fit;
}

}  // namespace curteach

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include <Eigen/Core>

#include "gendisc/errors.hpp"

namespace gendisc {

/// sup f - inf f over a finite vector.
inline double span_seminorm(std::span<const double> v) {
    if (v.empty())
        throw Error(ErrorCode::InvalidArgument, "span_seminorm of an empty vector");
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
}

inline double span_seminorm(const Eigen::VectorXd& v) {
    return span_seminorm(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

// log(sum_i exp(a_i)), skipping -inf entries. Returns -inf if every entry is -inf.
inline double log_sum_exp(std::span<const double> a) {
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    double peak = neg_inf;
    for (double x : a)
        peak = std::max(peak, x);
    if (peak == neg_inf)
        return neg_inf;
    double sum = 0.0;
    for (double x : a)
        if (x != neg_inf)
            sum += std::exp(x - peak);
    return peak + std::log(sum);
}

inline double log_sum_exp(double a, double b) {
    const double hi = std::max(a, b);
    if (hi == -std::numeric_limits<double>::infinity())
        return hi;
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace gendisc

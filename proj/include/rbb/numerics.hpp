#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

namespace rbb {

inline constexpr double inv_sqrt_2pi = 0.3989422804014327;  // 1/sqrt(2 pi)

[[nodiscard]] inline double normal_pdf(double z) noexcept {
    return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

[[nodiscard]] inline double normal_cdf(double z) noexcept {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

/// Composite Simpson rule on [a, b] with an even number of subintervals.
[[nodiscard]] double simpson(const std::function<double(double)>& f, double a, double b,
                             std::size_t subintervals = 2048);

/// Empirical quantile, type 7 (linear interpolation between order statistics).
/// `sorted` must be ascending and nonempty; p is clamped to [0, 1].
[[nodiscard]] double quantile_type7(std::span<const double> sorted, double p);

[[nodiscard]] double mean(std::span<const double> xs);

/// Unbiased sample variance (divisor size - 1); 0 for fewer than two values.
[[nodiscard]] double sample_variance(std::span<const double> xs);

/// Lag-1 sample autocorrelation; 0 when the series has no variation.
[[nodiscard]] double lag1_autocorrelation(std::span<const double> xs);

[[nodiscard]] double median(std::vector<double> xs);

}  // namespace rbb

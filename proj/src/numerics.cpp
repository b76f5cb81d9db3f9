#include "rbb/numerics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace rbb {

double simpson(const std::function<double(double)>& f, double a, double b,
               std::size_t subintervals) {
    if (subintervals == 0 || subintervals % 2 != 0) {
        throw std::invalid_argument("simpson: subinterval count must be positive and even");
    }
    const double h = (b - a) / static_cast<double>(subintervals);
    double odd = 0.0;
    double even = 0.0;
    for (std::size_t i = 1; i < subintervals; ++i) {
        const double x = a + h * static_cast<double>(i);
        (i % 2 == 1 ? odd : even) += f(x);
    }
    return h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even);
}

double quantile_type7(std::span<const double> sorted, double p) {
    if (sorted.empty()) {
        throw std::invalid_argument("quantile of empty sample");
    }
    p = std::clamp(p, 0.0, 1.0);
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

double lag1_autocorrelation(std::span<const double> xs) {
    if (xs.size() < 3) return 0.0;
    const double m = mean(xs);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        den += (xs[i] - m) * (xs[i] - m);
        if (i + 1 < xs.size()) num += (xs[i] - m) * (xs[i + 1] - m);
    }
    return den > 0.0 ? num / den : 0.0;
}

double median(std::vector<double> xs) {
    if (xs.empty()) {
        throw std::invalid_argument("median of empty sample");
    }
    std::sort(xs.begin(), xs.end());
    return quantile_type7(xs, 0.5);
}

}  // namespace rbb

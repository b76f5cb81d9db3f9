#include "rbb/density_estimation.hpp"

#include "rbb/errors.hpp"
#include "rbb/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace rbb {

Grid2D square_grid(double lo, double hi, std::size_t k) {
    if (k < 2 || !(lo < hi)) {
        throw Error(ErrorKind::InvalidGrid, "square_grid needs k >= 2 and lo < hi");
    }
    Grid2D g;
    g.reserve(k * k);
    for (std::size_t i = 0; i < k; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(k - 1);
        for (std::size_t j = 0; j < k; ++j) {
            const double y = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(k - 1);
            g.emplace_back(x, y);
        }
    }
    return g;
}

TransitionDensityEstimate::TransitionDensityEstimate(std::vector<std::pair<State, State>> pairs,
                                                     double bandwidth, SmallSetConfig cfg,
                                                     double ceiling, std::string ceiling_source)
    : bandwidth_(bandwidth),
      cfg_(std::move(cfg)),
      ceiling_(ceiling),
      ceiling_source_(std::move(ceiling_source)) {
    if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_)) {
        throw Error(ErrorKind::InvalidParameter, "bandwidth must be positive and finite");
    }
    std::sort(pairs.begin(), pairs.end());
    xs_.reserve(pairs.size());
    ys_.reserve(pairs.size());
    for (const auto& [x, y] : pairs) {
        xs_.push_back(x);
        ys_.push_back(y);
    }
}

double TransitionDensityEstimate::raw(State x, State y) const {
    const double h = bandwidth_;
    const double reach = cutoff * h;
    const auto first = std::lower_bound(xs_.begin(), xs_.end(), x - reach);
    const auto last = std::upper_bound(first, xs_.end(), x + reach);
    double num = 0.0;
    double den = 0.0;
    for (auto it = first; it != last; ++it) {
        const auto i = static_cast<std::size_t>(it - xs_.begin());
        const double u = (x - *it) / h;
        const double kx = std::exp(-0.5 * u * u);
        den += kx;
        const double v = (y - ys_[i]) / h;
        if (std::abs(v) <= cutoff) num += kx * std::exp(-0.5 * v * v);
    }
    if (!(den > 0.0)) return 0.0;
    // The x kernel normalization cancels in the ratio; the y kernel keeps it.
    return num / den * inv_sqrt_2pi / h;
}

double TransitionDensityEstimate::evaluate(State x, State y) const {
    const double floor = std::max(cfg_.minorant(y), std::numeric_limits<double>::min());
    return std::clamp(raw(x, y), floor, std::max(floor, ceiling_));
}

TransitionDensityEstimate estimate_transition_density(const Trajectory& traj,
                                                      std::optional<double> bandwidth,
                                                      const SmallSetConfig& cfg) {
    const std::size_t n = traj.n();
    if (n < min_transition_pairs) {
        throw Error(ErrorKind::TooFewPairs, "need at least " +
                                                std::to_string(min_transition_pairs) +
                                                " transition pairs, have " + std::to_string(n));
    }
    std::vector<std::pair<State, State>> pairs;
    pairs.reserve(n);
    bool any_in_s = false;
    for (std::size_t i = 1; i <= n; ++i) {
        pairs.emplace_back(traj.at(i), traj.at(i + 1));
        any_in_s = any_in_s || cfg.contains(traj.at(i));
    }
    if (!any_in_s) {
        throw Error(ErrorKind::EmptySmallSet, "no observation X_i lies in the small set");
    }

    double h = 0.0;
    if (bandwidth) {
        h = *bandwidth;
    } else {
        const std::span<const State> xs(*traj.states);
        h = std::sqrt(sample_variance(xs)) * std::pow(static_cast<double>(n), -1.0 / 6.0);
        if (!(h > 0.0)) {
            throw Error(ErrorKind::InvalidParameter,
                        "AUTO bandwidth is zero: the trajectory has no spread");
        }
    }

    std::optional<double> true_max;
    if (traj.model && traj.model->has_transition_density()) {
        true_max = transition_density_max(*traj.model);
    }
    if (true_max) {
        return TransitionDensityEstimate(std::move(pairs), h, cfg, 10.0 * *true_max,
                                         "10x true density maximum");
    }
    const TransitionDensityEstimate unclipped(pairs, h, cfg,
                                        std::numeric_limits<double>::infinity(), "pending");
    double raw_max = 0.0;
    for (const auto& [x, y] : square_grid(-cfg.half_width(), cfg.half_width(), 21)) {
        raw_max = std::max(raw_max, unclipped.raw(x, y));
    }
    return TransitionDensityEstimate(std::move(pairs), h, cfg, 10.0 * raw_max,
                                     "10x raw estimate maximum on S x S");
}

double density_mse(const TransitionDensityEstimate& est, const ChainModel& model,
                   const Grid2D& grid) {
    if (grid.empty()) {
        throw Error(ErrorKind::InvalidGrid, "density_mse needs a nonempty grid");
    }
    if (!model.has_transition_density()) {
        throw Error(ErrorKind::Unsupported, "model has no known transition density");
    }
    double worst = 0.0;
    for (const auto& [x, y] : grid) {
        const double d = est.evaluate(x, y) - transition_density(model, x, y);
        worst = std::max(worst, d * d);
    }
    return worst;
}

void write_density_grid_csv(std::ostream& os, const TransitionDensityEstimate& est,
                            const ChainModel& model, const Grid2D& grid) {
    os << "x,y,p_n,p_true,abs_err\n";
    for (const auto& [x, y] : grid) {
        const double pn = est.evaluate(x, y);
        const double pt = transition_density(model, x, y);
        os << x << ',' << y << ',' << pn << ',' << pt << ',' << std::abs(pn - pt) << '\n';
    }
}

}  // namespace rbb

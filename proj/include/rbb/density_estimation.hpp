#pragma once

#include "rbb/chain_models.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rbb {

using Grid2D = std::vector<std::pair<State, State>>;

/// k x k grid over [lo, hi]^2, k >= 2.
[[nodiscard]] Grid2D square_grid(double lo, double hi, std::size_t k);

/// Kernel estimate p_n(x, y) of the transition density, clipped into
/// [delta * phi(y), R].
///
/// The raw estimate is the Nadaraya-Watson ratio
///
///     sum_i K_h(x - X_i) K_h(y - X_{i+1}) / sum_i K_h(x - X_i)
///
/// with a gaussian kernel K_h. Kernel terms beyond `cutoff` bandwidths are
/// dropped; the pairs are kept sorted by X_i so a query only visits its window.
class TransitionDensityEstimate {
public:
    TransitionDensityEstimate(std::vector<std::pair<State, State>> pairs, double bandwidth,
                              SmallSetConfig cfg, double ceiling, std::string ceiling_source);

    [[nodiscard]] double evaluate(State x, State y) const;
    [[nodiscard]] double operator()(State x, State y) const { return evaluate(x, y); }

    /// Unclipped Nadaraya-Watson value (0 when no pair is within the window).
    [[nodiscard]] double raw(State x, State y) const;

    [[nodiscard]] double bandwidth() const noexcept { return bandwidth_; }
    [[nodiscard]] double clip_floor(State y) const { return cfg_.minorant(y); }
    [[nodiscard]] double clip_ceiling() const noexcept { return ceiling_; }
    [[nodiscard]] const std::string& ceiling_source() const noexcept { return ceiling_source_; }
    [[nodiscard]] const SmallSetConfig& small_set() const noexcept { return cfg_; }
    [[nodiscard]] std::size_t pair_count() const noexcept { return xs_.size(); }

    static constexpr double cutoff = 8.0;

private:
    std::vector<State> xs_;  // sorted X_i
    std::vector<State> ys_;  // matching X_{i+1}
    double bandwidth_;
    SmallSetConfig cfg_;
    double ceiling_;
    std::string ceiling_source_;
};

inline constexpr std::size_t min_transition_pairs = 50;

/// Builds p_n from a trajectory. `bandwidth` nullopt selects AUTO:
/// h = sd(states) * n^(-1/6). The ceiling R is 10x the true density maximum
/// when the trajectory carries a model with a known density, otherwise 10x
/// the raw estimate's maximum on a 21 x 21 grid over S x S.
[[nodiscard]] TransitionDensityEstimate estimate_transition_density(
    const Trajectory& traj, std::optional<double> bandwidth, const SmallSetConfig& cfg);

/// sup over the grid of |p_n - p|^2.
[[nodiscard]] double density_mse(const TransitionDensityEstimate& est, const ChainModel& model,
                                 const Grid2D& grid);

/// CSV with columns x,y,p_n,p_true,abs_err.
void write_density_grid_csv(std::ostream& os, const TransitionDensityEstimate& est,
                            const ChainModel& model, const Grid2D& grid);

}  // namespace rbb

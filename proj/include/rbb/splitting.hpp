#pragma once

#include "rbb/chain_models.hpp"
#include "rbb/density_estimation.hpp"
#include "rbb/regeneration.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace rbb {

enum class SplitMode { Exact, Approximate };

/// A realization of the (approximate) split chain: states X_1..X_{n+1},
/// indicators Y_1..Y_n and the Bernoulli parameters they were drawn with.
/// Regenerations are the times i with X_i in S and Y_i = 1.
struct SplitPath {
    std::shared_ptr<const std::vector<State>> states;
    std::vector<std::uint8_t> indicators;
    std::vector<double> parameters;
    SmallSetConfig cfg;
    SplitMode mode = SplitMode::Exact;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t n() const noexcept { return indicators.size(); }
    [[nodiscard]] bool in_small_set(std::size_t i) const { return cfg.contains((*states)[i - 1]); }
    /// l_hat_n, the number of visits to S x {1}.
    [[nodiscard]] std::size_t regeneration_count() const;
    [[nodiscard]] RegenerationSchedule schedule() const;
};

using DensityFunction = std::function<double(State, State)>;

/// Draws Y_i given X^(n+1): Bernoulli(delta) off S, Bernoulli(delta phi(X_{i+1})
/// / p(X_i, X_{i+1})) on S. Parameters outside [0,1] by more than 1e-12 raise
/// InvalidParameter; smaller excursions are clamped.
[[nodiscard]] SplitPath draw_split_indicators(const Trajectory& traj, const DensityFunction& density,
                                              SplitMode mode, const SmallSetConfig& cfg,
                                              std::uint64_t seed);

/// Exact splitting with the model's true transition density.
[[nodiscard]] SplitPath draw_split_indicators(const Trajectory& traj, const ChainModel& model,
                                              const SmallSetConfig& cfg, std::uint64_t seed);

/// Approximate splitting with an estimated density p_n.
[[nodiscard]] SplitPath draw_split_indicators(const Trajectory& traj,
                                              const TransitionDensityEstimate& estimate,
                                              const SmallSetConfig& cfg, std::uint64_t seed);

/// Pseudo-regeneration blocks. Needs at least two regenerations.
[[nodiscard]] BlockCollection pseudo_blocks(const SplitPath& sp);

/// CSV with columns i,x_i,in_S,bernoulli_param,y_i.
void write_split_csv(std::ostream& os, const SplitPath& sp);

}  // namespace rbb

#pragma once

#include "rbb/chain_models.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace rbb {

using StateFunction = std::function<double(State)>;

/// Regeneration times tau(1) < ... < tau(l_n), 1-based positions in the
/// stored trajectory.
struct RegenerationSchedule {
    std::vector<std::size_t> times;

    [[nodiscard]] std::size_t count() const noexcept { return times.size(); }
};

/// A contiguous slice of the trajectory. `start` is the 1-based time of the
/// first state, so the block covers X_start .. X_{start+length-1}.
struct Block {
    std::size_t start = 0;
    std::size_t length = 0;
};

/// Blocks B_1..B_{l-1} between consecutive regenerations, plus the discarded
/// head (X_1..X_{tau(1)}) and tail (X_{tau(l)+1}..X_{n+1}) segments.
class BlockCollection {
public:
    BlockCollection(std::shared_ptr<const std::vector<State>> states, std::vector<Block> blocks,
                    Block head, Block tail);

    [[nodiscard]] std::size_t size() const noexcept { return blocks_.size(); }
    [[nodiscard]] const std::vector<Block>& blocks() const noexcept { return blocks_; }
    [[nodiscard]] const Block& head() const noexcept { return head_; }
    [[nodiscard]] const Block& tail() const noexcept { return tail_; }
    /// n_A = sum of block lengths = tau(l) - tau(1).
    [[nodiscard]] std::size_t interior_length() const noexcept { return interior_length_; }

    [[nodiscard]] std::span<const State> states_of(const Block& b) const;
    [[nodiscard]] std::span<const State> block_states(std::size_t j) const {
        return states_of(blocks_[j]);
    }
    /// The observations X_{tau(1)+1} .. X_{tau(l)} in order.
    [[nodiscard]] std::span<const State> interior_states() const;
    [[nodiscard]] const std::shared_ptr<const std::vector<State>>& trajectory() const noexcept {
        return states_;
    }

private:
    std::shared_ptr<const std::vector<State>> states_;
    std::vector<Block> blocks_;
    Block head_;
    Block tail_;
    std::size_t interior_length_ = 0;
};

/// Per-block sums f(B_j) and lengths l(B_j), the sufficient statistics of
/// every linear estimator in this library.
struct BlockSums {
    std::vector<double> sums;
    std::vector<std::size_t> lengths;
    std::size_t total_length = 0;

    [[nodiscard]] std::size_t size() const noexcept { return sums.size(); }
};

[[nodiscard]] BlockSums block_sums(const BlockCollection& bc, const StateFunction& f);

/// Every position i of the stored path with X_i in the atom. An atom visit
/// needs no successor state, so the last stored state counts too; when it is
/// a visit the tail is empty.
[[nodiscard]] RegenerationSchedule find_regenerations(const Trajectory& traj,
                                                      const StateSet& atom);

/// Splits the trajectory at the regeneration times. Needs count >= 2.
[[nodiscard]] BlockCollection decompose_blocks(const Trajectory& traj,
                                               const RegenerationSchedule& sched);

/// Kac occupation estimate of mu(target) from the interior observations.
[[nodiscard]] double occupation_estimate(const BlockCollection& bc, const StateSet& target);

/// Number of interior observations falling in `target`.
[[nodiscard]] std::size_t occupation_count(const BlockCollection& bc, const StateSet& target);

/// mu_hat(f) = sum_j f(B_j) / n_A.
[[nodiscard]] double regen_mean(const BlockCollection& bc, const StateFunction& f);
[[nodiscard]] double regen_mean(const BlockSums& sums);

/// sigma_hat^2(f) = (1/n_A) sum_j (f(B_j) - mu_hat(f) l(B_j))^2. Needs >= 2 blocks.
[[nodiscard]] double regen_variance(const BlockCollection& bc, const StateFunction& f);
[[nodiscard]] double regen_variance(const BlockSums& sums);

/// CSV with columns block_index,start_time,length,f_sum.
void write_blocks_csv(std::ostream& os, const BlockCollection& bc, const StateFunction& f);

}  // namespace rbb

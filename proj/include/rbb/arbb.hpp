#pragma once

#include "rbb/regeneration.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rbb {

/// One ARBB resample: indices of the kept source blocks B*_1..B*_{l*-1}.
/// The block drawn at position l* (the one that pushed the joint length past
/// n) is recorded but not kept.
struct BootstrapDraw {
    std::vector<std::size_t> blocks;
    std::size_t stop_index = 0;        // l*_n
    std::size_t total_length = 0;      // n*, sum of kept lengths
    std::size_t overflow_length = 0;   // length of the discarded block l*
    std::uint64_t seed = 0;
};

/// Draws source-block indices i.i.d. uniform until the joint length exceeds
/// n. Raises EmptyResample when the very first block is already longer than n.
[[nodiscard]] BootstrapDraw resample_blocks(const BlockCollection& bc, std::size_t n,
                                            std::uint64_t seed);

/// Same stopping rule driven by an explicit index source, for the cases where
/// the draw sequence has to be controlled.
[[nodiscard]] BootstrapDraw resample_blocks_with(std::span<const std::size_t> lengths,
                                                 std::size_t n,
                                                 const std::function<std::size_t()>& next_index);

struct BootstrapMoments {
    double mean = 0.0;      // mu*_n(f)
    double variance = 0.0;  // sigma*_n^2(f)
};

[[nodiscard]] BootstrapMoments bootstrap_statistic(const BootstrapDraw& draw,
                                                   const BlockSums& source);
[[nodiscard]] BootstrapMoments bootstrap_statistic(const BootstrapDraw& draw,
                                                   const BlockCollection& bc,
                                                   const StateFunction& f);

/// Sorted sample serving as an empirical CDF.
class EmpiricalDistribution {
public:
    enum class Kind { Unstudentized, Studentized };

    EmpiricalDistribution(std::vector<double> values, Kind kind);

    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    /// Fraction of values <= x.
    [[nodiscard]] double cdf(double x) const;
    /// Type-7 quantile.
    [[nodiscard]] double quantile(double p) const;

private:
    std::vector<double> values_;
    Kind kind_;
};

/// Which scale divides the bootstrap root.
enum class Studentization {
    None,      // sqrt(n*) (mu* - mu_hat)
    Original,  // ... / sigma_hat_n(f) from the original blocks
    Bootstrap, // ... / sigma*_n(f) from the resample itself
};

/// H_ARBB: sorted sample over replicates of sqrt(n*) (mu*(f) - mu_hat(f)),
/// divided by the chosen scale. Replicate r uses
/// derive_seed(seed, streams::bootstrap, r), so the result does not depend on
/// the worker count.
[[nodiscard]] EmpiricalDistribution arbb_distribution(const BlockSums& source,
                                                      std::size_t replicates, std::size_t n,
                                                      Studentization studentization,
                                                      std::uint64_t seed);
[[nodiscard]] EmpiricalDistribution arbb_distribution(const BlockCollection& bc,
                                                      const StateFunction& f,
                                                      std::size_t replicates, std::size_t n,
                                                      bool studentized, std::uint64_t seed);

struct Interval {
    double lower = 0.0;
    double upper = 0.0;

    [[nodiscard]] bool contains(double x) const noexcept { return x >= lower && x <= upper; }
    [[nodiscard]] double width() const noexcept { return upper - lower; }
};

/// Root-method interval [c - q_{1-a/2} s / sqrt(n_hat), c - q_{a/2} s / sqrt(n_hat)]
/// with a = 1 - level and type-7 quantiles of `dist`.
[[nodiscard]] Interval confidence_interval(const EmpiricalDistribution& dist, double level,
                                           double center, double scale, double n_hat);

/// One CI record as a JSON object string.
[[nodiscard]] std::string ci_record_json(const std::string& statistic, double level,
                                         const Interval& ci, std::size_t n,
                                         std::size_t replicates, std::uint64_t seed);

/// Single-column CSV of the distribution sample.
void write_distribution_csv(std::ostream& os, const EmpiricalDistribution& dist);

}  // namespace rbb

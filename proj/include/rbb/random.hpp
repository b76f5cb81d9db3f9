#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace rbb {

/// SplitMix64 finalizer. Used to derive independent stream seeds from one
/// master seed; the mapping is fixed so results are reproducible everywhere.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Seed for sub-stream `index` of stream `stream` under `master`.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                                  std::uint64_t index) noexcept {
    return splitmix64(splitmix64(splitmix64(master) ^ stream) + index);
}

/// Stream tags used with derive_seed. Keeping them in one place avoids two
/// subsystems accidentally sharing a stream.
namespace streams {
inline constexpr std::uint64_t chain = 0x01;
inline constexpr std::uint64_t split = 0x02;
inline constexpr std::uint64_t bootstrap = 0x03;
inline constexpr std::uint64_t meta = 0x04;
inline constexpr std::uint64_t monte_carlo = 0x05;
}  // namespace streams

/// std::mt19937_64 with distribution code written out explicitly: the
/// standard distributions are implementation-defined, which would break
/// bit-exact reproducibility across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via the Marsaglia polar method.
    double normal() noexcept;

    /// Uniform integer in [0, n), n > 0, unbiased (rejection sampling).
    std::size_t index(std::size_t n) noexcept;

    bool bernoulli(double p) noexcept { return uniform() < p; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace rbb

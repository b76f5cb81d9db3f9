#pragma once

#include "rbb/arbb.hpp"
#include "rbb/empirical_process.hpp"
#include "rbb/regeneration.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rbb {

using OuterMap = std::function<double(std::span<const double>)>;
using OuterGradient = std::function<std::vector<double>(std::span<const double>)>;

/// Plug-in functional T(mu) = g(mu(f_1), ..., mu(f_k)) with a user-supplied
/// gradient of g.
class SmoothFunctional {
public:
    /// Checks the gradient against central differences of g at a fixed set of
    /// test points (relative error 1e-5) and throws InvalidParameter on a
    /// mismatch. Points where g is not finite are skipped, so maps with a
    /// restricted domain can still be used.
    SmoothFunctional(std::string name, std::vector<NamedFunction> inner, OuterMap g,
                     OuterGradient gradient);

    /// Same check at caller-chosen points (each of length k).
    SmoothFunctional(std::string name, std::vector<NamedFunction> inner, OuterMap g,
                     OuterGradient gradient, const std::vector<std::vector<double>>& test_points);

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] std::size_t arity() const noexcept { return inner_.size(); }
    [[nodiscard]] const std::vector<NamedFunction>& inner() const noexcept { return inner_; }
    [[nodiscard]] double outer(std::span<const double> u) const { return g_(u); }
    [[nodiscard]] std::vector<double> gradient(std::span<const double> u) const;

    /// T(mu) = g(u) = u.
    [[nodiscard]] static SmoothFunctional identity(NamedFunction f);
    /// T(mu) = g(u) = u^2.
    [[nodiscard]] static SmoothFunctional square(NamedFunction f);
    /// T(mu) = g(u, v) = u - v.
    [[nodiscard]] static SmoothFunctional difference(NamedFunction f1, NamedFunction f2);
    /// T(mu) = c for every mu (one inner function, zero gradient).
    [[nodiscard]] static SmoothFunctional constant(NamedFunction f, double c);

private:
    void check_gradient(const std::vector<std::vector<double>>& points) const;

    std::string name_;
    std::vector<NamedFunction> inner_;
    OuterMap g_;
    OuterGradient grad_;
};

/// Block sums of the inner functions, in order.
[[nodiscard]] std::vector<BlockSums> functional_block_sums(const SmoothFunctional& t,
                                                           const BlockCollection& bc);

/// g evaluated at the regenerative means of the inner functions.
[[nodiscard]] double functional_value(const SmoothFunctional& t, const BlockCollection& bc);
[[nodiscard]] double functional_value(const SmoothFunctional& t,
                                      const std::vector<BlockSums>& sums);

/// T1(x) = sum_j dg/du_j(mu_hat) (f_j(x) - mu_hat(f_j)).
[[nodiscard]] double influence_function(const SmoothFunctional& t, const BlockCollection& bc,
                                        State x);

/// Block sums of T1 itself; their total over the interior blocks is zero up to
/// rounding.
[[nodiscard]] BlockSums influence_block_sums(const SmoothFunctional& t, const BlockCollection& bc);

/// Bootstrap law of sqrt(n*) (T(mu*) - T(mu_hat)) together with, replicate by
/// replicate, the linearization sqrt(n*) mu*(T1) and the remainder
/// (root minus linearization).
struct FunctionalBootstrap {
    EmpiricalDistribution distribution;
    std::vector<double> roots;          // replicate order
    std::vector<double> linearized;     // replicate order
    std::vector<double> remainders;     // replicate order
    std::vector<double> d_f;            // sqrt(n*) d_F(mu*, mu_hat) over the inner functions
};

/// Replicate r resamples with derive_seed(seed, streams::bootstrap, r), the
/// stream arbb_distribution uses, so g(u) = u reproduces its unstudentized
/// sample exactly.
[[nodiscard]] FunctionalBootstrap bootstrap_functional_distribution(
    const SmoothFunctional& t, const std::vector<BlockSums>& sums, std::size_t replicates,
    std::size_t n, std::uint64_t seed);
[[nodiscard]] FunctionalBootstrap bootstrap_functional_distribution(
    const SmoothFunctional& t, const BlockCollection& bc, std::size_t replicates, std::size_t n,
    std::uint64_t seed);

/// JSON object {g_name, inner_functions, value, ci: {level, lower, upper},
/// replicates}.
[[nodiscard]] std::string functional_record_json(const SmoothFunctional& t, double value,
                                                 double level, const Interval& ci,
                                                 std::size_t replicates);

/// A measure of the form sum_j w_j (occupation of block j) / sum_j w_j l_j
/// over the source blocks: weight 1 for the original blocks, multiplicity for
/// a bootstrap draw.
struct BlockMeasure {
    std::vector<double> weights;

    [[nodiscard]] static BlockMeasure original(std::size_t blocks);
    [[nodiscard]] static BlockMeasure from_draw(const BootstrapDraw& draw, std::size_t blocks);

    /// Plug-in mean of the function whose block sums are given.
    [[nodiscard]] double mean(const BlockSums& sums) const;
};

/// sup over the class members of |mu_a(f) - mu_b(f)|; `sums` holds one entry
/// per member, computed on the blocks both measures weight.
[[nodiscard]] double d_f_distance(const BlockMeasure& a, const BlockMeasure& b,
                                  const std::vector<BlockSums>& sums);
[[nodiscard]] double d_f_distance(const BlockMeasure& a, const BlockMeasure& b,
                                  const BlockCollection& bc, const FunctionClass& cls);

}  // namespace rbb

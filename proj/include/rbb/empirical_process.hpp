#pragma once

#include "rbb/arbb.hpp"
#include "rbb/regeneration.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rbb {

struct NamedFunction {
    std::string name;
    StateFunction f;
};

/// A finite (or finitely discretized) class of functions indexed for the
/// empirical process, with an envelope F >= sup_f |f|.
///
/// All built-in kinds are pointwise measurable by construction.
class FunctionClass {
public:
    enum class Kind { FiniteList, HalfLineIndicators, ScaledSmooth };

    /// Arbitrary members. `bound` is the declared sup-norm bound, if any.
    [[nodiscard]] static FunctionClass finite_list(std::vector<NamedFunction> members,
                                                   StateFunction envelope,
                                                   std::optional<double> bound = std::nullopt);
    /// f_t(x) = 1{x <= t}; envelope 1.
    [[nodiscard]] static FunctionClass half_line_indicators(std::vector<double> thresholds);
    /// f_a(x) = x exp(-a x^2), a >= 0; envelope |x|. Bounded by
    /// 1/sqrt(2 e min a) when every a > 0, unbounded (L2 envelope) otherwise.
    [[nodiscard]] static FunctionClass scaled_smooth(std::vector<double> params);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t size() const noexcept { return members_.size(); }
    [[nodiscard]] bool empty() const noexcept { return members_.empty(); }
    [[nodiscard]] const NamedFunction& member(std::size_t i) const { return members_[i]; }
    [[nodiscard]] const std::vector<NamedFunction>& members() const noexcept { return members_; }
    [[nodiscard]] const StateFunction& envelope() const noexcept { return envelope_; }
    [[nodiscard]] std::optional<double> bound() const noexcept { return bound_; }

    /// Spot check F(x) >= |f(x)| (within 1e-12) for every member and state.
    [[nodiscard]] bool envelope_dominates(std::span<const State> sample) const;

    /// Member i evaluated on every sample point.
    [[nodiscard]] std::vector<double> evaluate(std::size_t i, std::span<const State> sample) const;

private:
    Kind kind_ = Kind::FiniteList;
    std::vector<NamedFunction> members_;
    StateFunction envelope_;
    std::optional<double> bound_;
};

/// Block sums for every class member, in class order.
[[nodiscard]] std::vector<BlockSums> class_block_sums(const BlockCollection& bc,
                                                      const FunctionClass& cls);

struct ProcessEvaluation {
    std::vector<std::string> names;
    std::vector<double> values;
    double normalization = 0.0;  // sqrt(n_hat) or sqrt(n*)
};

/// Z(f) = sqrt(n_hat) (mu_hat(f) - ref(f)). `reference` holds one value per
/// member; omitted means all zeros.
[[nodiscard]] ProcessEvaluation process_eval(const BlockCollection& bc, const FunctionClass& cls,
                                             std::span<const double> reference = {});
[[nodiscard]] ProcessEvaluation process_eval(const std::vector<BlockSums>& sums,
                                             const FunctionClass& cls,
                                             std::span<const double> reference = {});

/// Z*(f) = sqrt(n*) (mu*(f) - mu_hat(f)).
[[nodiscard]] ProcessEvaluation bootstrap_process_eval(const BootstrapDraw& draw,
                                                       const BlockCollection& bc,
                                                       const FunctionClass& cls);
[[nodiscard]] ProcessEvaluation bootstrap_process_eval(const BootstrapDraw& draw,
                                                       const std::vector<BlockSums>& sums,
                                                       const FunctionClass& cls);

/// sup_f |Z(f)|; 0 for an empty evaluation.
[[nodiscard]] double sup_statistic(const ProcessEvaluation& ev);

/// Pairwise empirical L_p(Q) distances between class members on `sample`.
[[nodiscard]] std::vector<std::vector<double>> class_distances(const FunctionClass& cls,
                                                               std::span<const State> sample,
                                                               int p = 2);

/// sup |Z(f) - Z(g)| over pairs with distance(f, g) < delta.
[[nodiscard]] double modulus(const ProcessEvaluation& ev,
                             const std::vector<std::vector<double>>& distances, double delta);

/// Joint bootstrap sample of (Z*(f_1), ..., Z*(f_k)). Replicate r resamples
/// with derive_seed(seed, streams::bootstrap, r), the same stream
/// arbb_distribution uses.
struct BootstrapProcessSample {
    std::vector<std::vector<double>> values;  // [replicate][member]

    [[nodiscard]] EmpiricalDistribution sup_distribution() const;
};

[[nodiscard]] BootstrapProcessSample bootstrap_process_sample(const std::vector<BlockSums>& sums,
                                                              std::size_t replicates,
                                                              std::size_t n, std::uint64_t seed);

/// Centers of the greedy farthest-point epsilon-net of the class on `sample`
/// under the empirical L_p norm (p = 1 or 2). Starts from member 0; ties go to
/// the lowest index.
[[nodiscard]] std::vector<std::size_t> greedy_net(const FunctionClass& cls,
                                                  std::span<const State> sample, double epsilon,
                                                  int p = 2);

/// Size of the greedy epsilon-net; an upper bound on N_p(epsilon, Q_n, F).
[[nodiscard]] std::size_t covering_number(const FunctionClass& cls, std::span<const State> sample,
                                          double epsilon, int p = 2);

/// Trapezoid approximation of the integral of sqrt(log N_2(eps)) over a
/// strictly decreasing positive epsilon grid.
[[nodiscard]] double entropy_integral(const FunctionClass& cls, std::span<const State> sample,
                                      std::span<const double> epsilons);

/// CSV with columns epsilon,N,sqrt_log_N.
void write_covering_csv(std::ostream& os, const FunctionClass& cls, std::span<const State> sample,
                        std::span<const double> epsilons);

/// Mean over blocks of (sum_{i in B} F(X_i))^power, the block-envelope moment
/// that the unbounded-class results require to be finite.
[[nodiscard]] double envelope_block_moment(const BlockCollection& bc, const FunctionClass& cls,
                                           double power);

/// Sample covariance matrix of row vectors.
[[nodiscard]] std::vector<std::vector<double>> covariance_matrix(
    const std::vector<std::vector<double>>& rows);

/// ||a - b||_F / ||b||_F.
[[nodiscard]] double relative_frobenius_error(const std::vector<std::vector<double>>& a,
                                              const std::vector<std::vector<double>>& b);

}  // namespace rbb

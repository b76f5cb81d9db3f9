#pragma once

#include "rbb/arbb.hpp"
#include "rbb/chain_models.hpp"
#include "rbb/empirical_process.hpp"
#include "rbb/frechet.hpp"
#include "rbb/regeneration.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rbb {

// ---------------------------------------------------------------------------
// Kolmogorov distances

/// Two-sample sup |F_a - F_b|, exact over the jump points.
[[nodiscard]] double ks_distance(const EmpiricalDistribution& a, const EmpiricalDistribution& b);
/// One-sample sup |F_a - F|, F a continuous CDF.
[[nodiscard]] double ks_distance(const EmpiricalDistribution& a,
                                 const std::function<double(double)>& cdf);
/// Raw-sample forms; throw EmptyDistribution on empty input.
[[nodiscard]] double ks_distance(std::span<const double> a, std::span<const double> b);
[[nodiscard]] double ks_distance(std::span<const double> a,
                                 const std::function<double(double)>& cdf);

/// Asymptotic 5% critical value of the two-sample statistic,
/// 1.358 sqrt((m + n) / (m n)).
[[nodiscard]] double ks_critical_value_5pct(std::size_t m, std::size_t n);

// ---------------------------------------------------------------------------
// Oracles

/// Stationary mean of f. Finite chains and the reflected walk use the exact
/// (truncated) stationary vector, LinearAR a fine Simpson rule against its
/// normal stationary law.
[[nodiscard]] double reference_mean(const ChainModel& model, const StateFunction& f);

/// Asymptotic covariance of sqrt(n) (mu_hat(f_i) - mu(f_i)) from the
/// fundamental matrix (I - P + 1 pi)^-1. Available for finite chains and the
/// truncated reflected walk; nullopt for LinearAR.
[[nodiscard]] std::optional<std::vector<std::vector<double>>> asymptotic_covariance(
    const ChainModel& model, const std::vector<StateFunction>& fs);

/// Diagonal entry for a single function.
[[nodiscard]] std::optional<double> asymptotic_variance(const ChainModel& model,
                                                        const StateFunction& f);

// ---------------------------------------------------------------------------
// Experiments

enum class ChainMode { Atomic, ExactSplit, ApproxSplit };

[[nodiscard]] std::string to_string(ChainMode mode);

struct ExperimentConfig {
    ChainModel model;
    ChainMode mode = ChainMode::Atomic;
    std::optional<double> bandwidth;  // approximate splitting; nullopt is AUTO
    std::vector<std::size_t> n_grid;
    std::size_t chains = 500;          // M
    std::size_t replicates = 500;      // B
    std::size_t meta_replicates = 50;  // uniform experiment
    double level = 0.9;
    NamedFunction function;
    std::optional<FunctionClass> function_class;
    std::optional<SmoothFunctional> functional;
    /// Oracle overrides. When absent they come from reference_mean and
    /// asymptotic_variance.
    std::optional<double> reference;
    std::optional<double> sigma2;
    std::uint64_t seed = 0;

    /// Throws InvalidConfig when M, B or the meta count is zero, the n-grid
    /// is empty or not increasing, the level is outside (0,1), or the mode
    /// needs an atom or small set the model lacks.
    void validate() const;
};

/// Seeds for one simulated chain. `base` is derive_seed(master, streams::meta,
/// n_index) for the Monte Carlo chains and derive_seed(master,
/// streams::monte_carlo, n_index) for the meta-replicate chains.
struct ChainSeeds {
    std::uint64_t chain = 0;
    std::uint64_t split = 0;
    std::uint64_t bootstrap = 0;
};

[[nodiscard]] ChainSeeds chain_seeds(std::uint64_t base, std::size_t index);
[[nodiscard]] std::uint64_t monte_carlo_base(std::uint64_t master, std::size_t n_index);
[[nodiscard]] std::uint64_t meta_base(std::uint64_t master, std::size_t n_index);

/// Regeneration or pseudo-regeneration blocks for a trajectory under the
/// configured mode.
[[nodiscard]] BlockCollection experiment_blocks(const ExperimentConfig& cfg, const Trajectory& traj,
                                                std::uint64_t split_seed);

/// A rectangular numeric table, written as CSV.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct ReportRow {
    std::size_t n = 0;
    std::vector<std::pair<std::string, double>> metrics;  // NaN is written as null
    std::size_t attempted = 0;
    std::size_t failures = 0;
    double runtime_seconds = 0.0;
    Table detail;

    /// NaN when the metric is absent.
    [[nodiscard]] double metric(const std::string& name) const;
};

struct ExperimentReport {
    std::string experiment;
    std::string header;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<ReportRow> rows;
    std::vector<std::string> flags;

    [[nodiscard]] bool flagged() const noexcept { return !flags.empty(); }
    /// Failed chains over attempted chains, pooled across rows.
    [[nodiscard]] double failure_rate() const;

    /// JSON document. The runtime fields are the only nondeterministic part
    /// and can be left out for comparisons.
    [[nodiscard]] std::string to_json(bool include_runtime = true) const;
};

/// Writes report.json, one <experiment>_n<N>.csv detail table per n and
/// plot.csv (one row per n, one column per metric) into `dir`.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

/// Failed-chain share at or above which a report is flagged.
inline constexpr double failure_flag_threshold = 0.01;

/// Delta_n, CI coverage and sigma_hat^2 error for the studentized mean of
/// cfg.function. H_nu is estimated from M fresh chains; each chain also gets
/// its own H_ARBB from B replicates. Delta_n is the median over chains of
/// KS(H_ARBB, H_nu).
[[nodiscard]] ExperimentReport run_clt_experiment(const ExperimentConfig& cfg);

/// Sup-statistic check over cfg.function_class: Monte Carlo law of
/// sup |Z_n(f)| from M chains against the bootstrap law of sup |Z*_n(f)| on
/// each of the meta-replicate chains.
[[nodiscard]] ExperimentReport run_uniform_experiment(const ExperimentConfig& cfg);

/// Bootstrap of sqrt(n) (T(mu*) - T(mu_hat)) for cfg.functional against the
/// Monte Carlo law and the delta-method normal limit.
[[nodiscard]] ExperimentReport run_functional_experiment(const ExperimentConfig& cfg);

}  // namespace rbb

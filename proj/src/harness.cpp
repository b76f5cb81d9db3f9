#include "rbb/harness.hpp"

#include "rbb/density_estimation.hpp"
#include "rbb/errors.hpp"
#include "rbb/numerics.hpp"
#include "rbb/parallel.hpp"
#include "rbb/random.hpp"
#include "rbb/splitting.hpp"

#include "json.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <variant>

namespace rbb {

namespace {

constexpr const char* library_version = "0.1.0";
constexpr double nan = std::numeric_limits<double>::quiet_NaN();

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double ks_sorted(std::span<const double> a, std::span<const double> b) {
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double ks_sorted(std::span<const double> a, const std::function<double(double)>& cdf) {
    const double n = static_cast<double>(a.size());
    std::size_t i = 0;
    double d = 0.0;
    while (i < a.size()) {
        const double v = a[i];
        const double lo = static_cast<double>(i) / n;
        while (i < a.size() && a[i] == v) ++i;
        const double hi = static_cast<double>(i) / n;
        const double f = cdf(v);
        d = std::max({d, std::abs(hi - f), std::abs(f - lo)});
    }
    return d;
}

std::vector<double> sorted_copy(std::span<const double> xs) {
    if (xs.empty()) {
        throw Error(ErrorKind::EmptyDistribution, "KS distance needs nonempty samples");
    }
    std::vector<double> v(xs.begin(), xs.end());
    std::sort(v.begin(), v.end());
    return v;
}

// Finite transition matrix standing in for the model, when there is one.
std::optional<std::vector<std::vector<double>>> finite_matrix(const ChainModel& model) {
    return std::visit(
        overloaded{
            [](const FiniteState& fs) -> std::optional<std::vector<std::vector<double>>> {
                return fs.matrix;
            },
            [](const LinearAR&) -> std::optional<std::vector<std::vector<double>>> {
                return std::nullopt;
            },
            [](const ReflectedWalk& w) -> std::optional<std::vector<std::vector<double>>> {
                return reflected_walk_matrix(w);
            },
        },
        model.kind);
}

bool is_chain_failure(const Error& e) {
    return e.kind() == ErrorKind::InsufficientRegeneration ||
           e.kind() == ErrorKind::EmptyResample || e.kind() == ErrorKind::ZeroVariance;
}

struct FailureTally {
    std::size_t insufficient = 0;
    std::size_t empty_resample = 0;
    std::size_t zero_variance = 0;

    void add(ErrorKind k) {
        if (k == ErrorKind::InsufficientRegeneration) ++insufficient;
        if (k == ErrorKind::EmptyResample) ++empty_resample;
        if (k == ErrorKind::ZeroVariance) ++zero_variance;
    }
    [[nodiscard]] std::size_t total() const { return insufficient + empty_resample + zero_variance; }
};

void append_failures(ReportRow& row, const FailureTally& t) {
    row.failures = t.total();
    row.metrics.emplace_back("failed_insufficient_regeneration", static_cast<double>(t.insufficient));
    row.metrics.emplace_back("failed_empty_resample", static_cast<double>(t.empty_resample));
    row.metrics.emplace_back("failed_zero_variance", static_cast<double>(t.zero_variance));
}

double mean_of_finite(const std::vector<double>& xs) {
    double s = 0.0;
    std::size_t c = 0;
    for (double x : xs) {
        if (std::isfinite(x)) {
            s += x;
            ++c;
        }
    }
    return c == 0 ? nan : s / static_cast<double>(c);
}

double median_of_finite(const std::vector<double>& xs) {
    std::vector<double> v;
    for (double x : xs) {
        if (std::isfinite(x)) v.push_back(x);
    }
    return v.empty() ? nan : median(std::move(v));
}

std::string format_double(double v) {
    if (std::isnan(v)) return "NaN";
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string join_sizes(const std::vector<std::size_t>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i > 0) s += ' ';
        s += std::to_string(xs[i]);
    }
    return s;
}

ExperimentReport start_report(const ExperimentConfig& cfg, const std::string& experiment,
                              const std::string& header) {
    ExperimentReport r;
    r.experiment = experiment;
    r.header = header;
    r.seed = cfg.seed;
    r.metadata = {{"version", library_version},
                  {"model", cfg.model.name()},
                  {"mode", to_string(cfg.mode)},
                  {"chains", std::to_string(cfg.chains)},
                  {"replicates", std::to_string(cfg.replicates)},
                  {"level", format_double(cfg.level)},
                  {"n_grid", join_sizes(cfg.n_grid)},
                  {"bandwidth", cfg.bandwidth ? format_double(*cfg.bandwidth) : "auto"}};
    return r;
}

void finish_report(ExperimentReport& r) {
    for (const auto& row : r.rows) {
        if (row.attempted == 0) continue;
        const double rate = static_cast<double>(row.failures) / static_cast<double>(row.attempted);
        if (rate >= failure_flag_threshold) {
            r.flags.push_back("n=" + std::to_string(row.n) + ": " + std::to_string(row.failures) +
                              " of " + std::to_string(row.attempted) +
                              " chains failed (regeneration or resampling)");
        }
    }
}

// Nonincreasing up to a single inversion.
bool nearly_monotone(const std::vector<ReportRow>& rows, const std::string& metric) {
    std::size_t inversions = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].metric(metric) > rows[i - 1].metric(metric)) ++inversions;
    }
    return inversions <= 1;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

// ---------------------------------------------------------------------------
// Kolmogorov distances

double ks_distance(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
    return ks_sorted(a.values(), b.values());
}

double ks_distance(const EmpiricalDistribution& a, const std::function<double(double)>& cdf) {
    return ks_sorted(a.values(), cdf);
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
    const auto sa = sorted_copy(a);
    const auto sb = sorted_copy(b);
    return ks_sorted(sa, sb);
}

double ks_distance(std::span<const double> a, const std::function<double(double)>& cdf) {
    return ks_sorted(sorted_copy(a), cdf);
}

double ks_critical_value_5pct(std::size_t m, std::size_t n) {
    if (m == 0 || n == 0) {
        throw Error(ErrorKind::EmptyDistribution, "critical value needs nonempty samples");
    }
    const double dm = static_cast<double>(m);
    const double dn = static_cast<double>(n);
    return 1.358 * std::sqrt((dm + dn) / (dm * dn));
}

// ---------------------------------------------------------------------------
// Oracles

double reference_mean(const ChainModel& model, const StateFunction& f) {
    if (const auto* ar = std::get_if<LinearAR>(&model.kind)) {
        const double sd = std::sqrt(ar1_stationary_variance(*ar));
        return simpson([&](double x) { return f(x) * normal_pdf(x / sd) / sd; }, -12.0 * sd,
                       12.0 * sd, 200000);
    }
    std::vector<double> pi;
    if (std::holds_alternative<FiniteState>(model.kind)) {
        pi = stationary_oracle(model);
    } else {
        pi = reflected_walk_stationary(std::get<ReflectedWalk>(model.kind));
    }
    double m = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i) m += pi[i] * f(static_cast<State>(i));
    return m;
}

std::optional<std::vector<std::vector<double>>> asymptotic_covariance(
    const ChainModel& model, const std::vector<StateFunction>& fs) {
    const auto matrix = finite_matrix(model);
    if (!matrix) return std::nullopt;
    const std::size_t k = matrix->size();
    const std::vector<double> pi =
        stationary_oracle(make_finite_state(*matrix, InitialLaw::point(0.0)));

    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k),
                                                  static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +=
                pi[j] - (*matrix)[i][j];
        }
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);

    std::vector<Eigen::VectorXd> centered;
    std::vector<Eigen::VectorXd> solved;
    for (const auto& f : fs) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(k));
        double m = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            v(static_cast<Eigen::Index>(i)) = f(static_cast<State>(i));
            m += pi[i] * v(static_cast<Eigen::Index>(i));
        }
        v.array() -= m;
        solved.push_back(lu.solve(v));
        centered.push_back(std::move(v));
    }
    const Eigen::Map<const Eigen::VectorXd> w(pi.data(), static_cast<Eigen::Index>(k));
    std::vector<std::vector<double>> cov(fs.size(), std::vector<double>(fs.size(), 0.0));
    for (std::size_t i = 0; i < fs.size(); ++i) {
        for (std::size_t j = 0; j < fs.size(); ++j) {
            const auto& ci = centered[i].array();
            const auto& cj = centered[j].array();
            cov[i][j] = (w.array() * (ci * solved[j].array() + cj * solved[i].array() - ci * cj))
                            .sum();
        }
    }
    return cov;
}

std::optional<double> asymptotic_variance(const ChainModel& model, const StateFunction& f) {
    const auto cov = asymptotic_covariance(model, {f});
    if (!cov) return std::nullopt;
    return (*cov)[0][0];
}

// ---------------------------------------------------------------------------
// Configuration and plumbing

std::string to_string(ChainMode mode) {
    switch (mode) {
        case ChainMode::Atomic:
            return "atomic";
        case ChainMode::ExactSplit:
            return "exact_split";
        case ChainMode::ApproxSplit:
            return "approx_split";
    }
    return "unknown";
}

void ExperimentConfig::validate() const {
    model.validate();
    if (chains == 0 || replicates == 0 || meta_replicates == 0) {
        throw Error(ErrorKind::InvalidConfig, "chains, replicates and meta_replicates must be >= 1");
    }
    if (n_grid.empty()) {
        throw Error(ErrorKind::InvalidConfig, "n_grid is empty");
    }
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] < 2 || (i > 0 && n_grid[i] <= n_grid[i - 1])) {
            throw Error(ErrorKind::InvalidConfig, "n_grid must be increasing with entries >= 2");
        }
    }
    if (!(level > 0.0 && level < 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "level must lie in (0,1)");
    }
    if (mode == ChainMode::Atomic && !model.atom) {
        throw Error(ErrorKind::InvalidConfig, "atomic mode needs a model with an atom");
    }
    if (mode != ChainMode::Atomic && !model.small_set) {
        throw Error(ErrorKind::InvalidConfig, "splitting modes need a small set");
    }
    if (mode == ChainMode::ExactSplit && !model.has_transition_density()) {
        throw Error(ErrorKind::InvalidConfig, "exact splitting needs a known transition density");
    }
    if (bandwidth && !(*bandwidth > 0.0)) {
        throw Error(ErrorKind::InvalidConfig, "bandwidth must be positive");
    }
}

ChainSeeds chain_seeds(std::uint64_t base, std::size_t index) {
    return ChainSeeds{derive_seed(base, streams::chain, index),
                      derive_seed(base, streams::split, index),
                      derive_seed(base, streams::bootstrap, index)};
}

std::uint64_t monte_carlo_base(std::uint64_t master, std::size_t n_index) {
    return derive_seed(master, streams::meta, n_index);
}

std::uint64_t meta_base(std::uint64_t master, std::size_t n_index) {
    return derive_seed(master, streams::monte_carlo, n_index);
}

BlockCollection experiment_blocks(const ExperimentConfig& cfg, const Trajectory& traj,
                                  std::uint64_t split_seed) {
    switch (cfg.mode) {
        case ChainMode::Atomic:
            return decompose_blocks(traj, find_regenerations(traj, *cfg.model.atom));
        case ChainMode::ExactSplit:
            return pseudo_blocks(
                draw_split_indicators(traj, cfg.model, *cfg.model.small_set, split_seed));
        case ChainMode::ApproxSplit: {
            const auto est =
                estimate_transition_density(traj, cfg.bandwidth, *cfg.model.small_set);
            return pseudo_blocks(
                draw_split_indicators(traj, est, *cfg.model.small_set, split_seed));
        }
    }
    throw Error(ErrorKind::InvalidConfig, "unknown chain mode");
}

double ReportRow::metric(const std::string& name) const {
    for (const auto& [k, v] : metrics) {
        if (k == name) return v;
    }
    return nan;
}

double ExperimentReport::failure_rate() const {
    std::size_t a = 0;
    std::size_t f = 0;
    for (const auto& r : rows) {
        a += r.attempted;
        f += r.failures;
    }
    return a == 0 ? 0.0 : static_cast<double>(f) / static_cast<double>(a);
}

std::string ExperimentReport::to_json(bool include_runtime) const {
    nlohmann::ordered_json j;
    j["experiment"] = experiment;
    j["header"] = header;
    j["seed"] = seed;
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
    for (const auto& [k, v] : metadata) meta[k] = v;
    j["metadata"] = meta;
    j["flagged"] = flagged();
    j["flags"] = flags;
    j["failure_rate"] = failure_rate();
    nlohmann::ordered_json rows_json = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json row;
        row["n"] = r.n;
        row["attempted"] = r.attempted;
        row["failures"] = r.failures;
        for (const auto& [k, v] : r.metrics) {
            if (std::isfinite(v)) {
                row[k] = v;
            } else {
                row[k] = nullptr;
            }
        }
        if (include_runtime) row["runtime_seconds"] = r.runtime_seconds;
        rows_json.push_back(row);
    }
    j["rows"] = rows_json;
    return j.dump(2);
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "report.json");
        out << report.to_json() << '\n';
    }
    for (const auto& row : report.rows) {
        std::ofstream out(dir / (report.experiment + "_n" + std::to_string(row.n) + ".csv"));
        for (std::size_t c = 0; c < row.detail.columns.size(); ++c) {
            out << (c ? "," : "") << row.detail.columns[c];
        }
        out << '\n';
        for (const auto& values : row.detail.rows) {
            for (std::size_t c = 0; c < values.size(); ++c) {
                out << (c ? "," : "") << format_double(values[c]);
            }
            out << '\n';
        }
    }
    std::ofstream plot(dir / "plot.csv");
    plot << "n,failures";
    if (!report.rows.empty()) {
        for (const auto& [k, v] : report.rows.front().metrics) plot << ',' << k;
    }
    plot << '\n';
    for (const auto& row : report.rows) {
        plot << row.n << ',' << row.failures;
        for (const auto& [k, v] : row.metrics) plot << ',' << format_double(v);
        plot << '\n';
    }
}

// ---------------------------------------------------------------------------
// CLT experiment

ExperimentReport run_clt_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const double mu = cfg.reference ? *cfg.reference : reference_mean(cfg.model, cfg.function.f);
    const std::optional<double> sigma2 =
        cfg.sigma2 ? cfg.sigma2 : asymptotic_variance(cfg.model, cfg.function.f);

    ExperimentReport report = start_report(
        cfg, "clt",
        "Kolmogorov distance between the per-chain bootstrap law of the studentized mean and "
        "its Monte Carlo sampling law; the bounded-Lipschitz metric is replaced by KS.");
    report.metadata.emplace_back("function", cfg.function.name);
    report.metadata.emplace_back("reference_mean", format_double(mu));
    report.metadata.emplace_back("sigma2_oracle", sigma2 ? format_double(*sigma2) : "none");
    report.metadata.emplace_back(
        "h_nu_scale", sigma2 ? "oracle sigma_f" : "per-chain sigma_hat (no oracle available)");

    for (std::size_t k = 0; k < cfg.n_grid.size(); ++k) {
        const auto t0 = Clock::now();
        const std::size_t n = cfg.n_grid[k];
        const std::uint64_t base = monte_carlo_base(cfg.seed, k);

        struct ChainResult {
            bool ok = false;
            ErrorKind failure = ErrorKind::InsufficientRegeneration;
            double n_hat = nan, blocks = nan, mu_hat = nan, sigma2_hat = nan, root = nan;
            double lower = nan, upper = nan;
            std::vector<double> boot;  // sorted H_ARBB sample
        };
        std::vector<ChainResult> results(cfg.chains);
        parallel_for(cfg.chains, [&](std::size_t m) {
            const ChainSeeds seeds = chain_seeds(base, m);
            ChainResult& r = results[m];
            try {
                const Trajectory traj = simulate(cfg.model, n, seeds.chain);
                const BlockCollection bc = experiment_blocks(cfg, traj, seeds.split);
                const BlockSums sums = block_sums(bc, cfg.function.f);
                if (sums.size() < 2) {
                    throw Error(ErrorKind::InsufficientRegeneration, "fewer than 2 blocks");
                }
                r.n_hat = static_cast<double>(sums.total_length);
                r.blocks = static_cast<double>(sums.size());
                r.mu_hat = regen_mean(sums);
                r.sigma2_hat = regen_variance(sums);
                const EmpiricalDistribution h = arbb_distribution(
                    sums, cfg.replicates, n, Studentization::Original, seeds.bootstrap);
                const double sigma_hat = std::sqrt(r.sigma2_hat);
                const double scale = sigma2 && *sigma2 > 0.0 ? std::sqrt(*sigma2) : sigma_hat;
                r.root = std::sqrt(r.n_hat) * (r.mu_hat - mu) / scale;
                const Interval ci = confidence_interval(h, cfg.level, r.mu_hat, sigma_hat, r.n_hat);
                r.lower = ci.lower;
                r.upper = ci.upper;
                r.boot.assign(h.values().begin(), h.values().end());
                r.ok = true;
            } catch (const Error& e) {
                if (!is_chain_failure(e)) throw;
                r.failure = e.kind();
            }
        });

        FailureTally tally;
        std::vector<double> roots;
        for (const auto& r : results) {
            if (r.ok) {
                roots.push_back(r.root);
            } else {
                tally.add(r.failure);
            }
        }

        ReportRow row;
        row.n = n;
        row.attempted = cfg.chains;
        row.detail.columns = {"chain", "ok",   "n_hat", "blocks", "mu_hat", "sigma2_hat",
                              "root",  "ks",   "lower", "upper",  "covered"};
        std::vector<double> ks(cfg.chains, nan);
        std::vector<double> covered(cfg.chains, nan);
        std::vector<double> widths(cfg.chains, nan);
        std::vector<double> sigma_err(cfg.chains, nan);
        std::vector<double> mu_err(cfg.chains, nan);
        std::vector<double> blocks(cfg.chains, nan);
        std::vector<double> n_hats(cfg.chains, nan);
        std::vector<double> sigma2_hats(cfg.chains, nan);
        if (!roots.empty()) {
            const EmpiricalDistribution h_nu(roots, EmpiricalDistribution::Kind::Studentized);
            for (std::size_t m = 0; m < cfg.chains; ++m) {
                const auto& r = results[m];
                if (!r.ok) continue;
                ks[m] = ks_sorted(r.boot, h_nu.values());
                covered[m] = (mu >= r.lower && mu <= r.upper) ? 1.0 : 0.0;
                widths[m] = r.upper - r.lower;
                if (sigma2) sigma_err[m] = std::abs(r.sigma2_hat - *sigma2);
                mu_err[m] = std::abs(r.mu_hat - mu);
                blocks[m] = r.blocks;
                n_hats[m] = r.n_hat;
                sigma2_hats[m] = r.sigma2_hat;
            }
        }
        for (std::size_t m = 0; m < cfg.chains; ++m) {
            const auto& r = results[m];
            row.detail.rows.push_back({static_cast<double>(m), r.ok ? 1.0 : 0.0, r.n_hat, r.blocks,
                                       r.mu_hat, r.sigma2_hat, r.root, ks[m], r.lower, r.upper,
                                       covered[m]});
        }
        row.metrics = {{"delta", median_of_finite(ks)},
                       {"delta_mean", mean_of_finite(ks)},
                       {"coverage", mean_of_finite(covered)},
                       {"ci_width_mean", mean_of_finite(widths)},
                       {"sigma2_hat_mean", mean_of_finite(sigma2_hats)},
                       {"sigma2_abs_error_mean", mean_of_finite(sigma_err)},
                       {"mu_abs_error_mean", mean_of_finite(mu_err)},
                       {"blocks_mean", mean_of_finite(blocks)},
                       {"n_hat_mean", mean_of_finite(n_hats)}};
        append_failures(row, tally);
        row.runtime_seconds = seconds_since(t0);
        report.rows.push_back(std::move(row));
    }
    report.metadata.emplace_back("delta_nearly_monotone",
                                 nearly_monotone(report.rows, "delta") ? "true" : "false");
    finish_report(report);
    return report;
}

// ---------------------------------------------------------------------------
// Uniform experiment

ExperimentReport run_uniform_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (!cfg.function_class || cfg.function_class->empty()) {
        throw Error(ErrorKind::InvalidConfig, "uniform experiment needs a nonempty function class");
    }
    const FunctionClass& cls = *cfg.function_class;
    std::vector<double> refs;
    for (const auto& m : cls.members()) refs.push_back(reference_mean(cfg.model, m.f));

    ExperimentReport report = start_report(
        cfg, "uniform",
        "Two-sample KS between the Monte Carlo law of sup_f |Z_n(f)| and the bootstrap law of "
        "sup_f |Z*_n(f)| on independent chains; finite-dimensional covariances compared in "
        "relative Frobenius norm.");
    report.metadata.emplace_back("meta_replicates", std::to_string(cfg.meta_replicates));
    report.metadata.emplace_back("class_size", std::to_string(cls.size()));
    std::string names;
    for (const auto& m : cls.members()) names += (names.empty() ? "" : " ") + m.name;
    report.metadata.emplace_back("class_members", names);

    for (std::size_t k = 0; k < cfg.n_grid.size(); ++k) {
        const auto t0 = Clock::now();
        const std::size_t n = cfg.n_grid[k];

        struct McResult {
            bool ok = false;
            ErrorKind failure = ErrorKind::InsufficientRegeneration;
            std::vector<double> z;
            double sup = nan;
            double envelope_moment = nan;
        };
        std::vector<McResult> mc(cfg.chains);
        const std::uint64_t mc_seed = monte_carlo_base(cfg.seed, k);
        parallel_for(cfg.chains, [&](std::size_t m) {
            const ChainSeeds seeds = chain_seeds(mc_seed, m);
            McResult& r = mc[m];
            try {
                const Trajectory traj = simulate(cfg.model, n, seeds.chain);
                const BlockCollection bc = experiment_blocks(cfg, traj, seeds.split);
                const ProcessEvaluation ev = process_eval(class_block_sums(bc, cls), cls, refs);
                r.z = ev.values;
                r.sup = sup_statistic(ev);
                r.envelope_moment = envelope_block_moment(bc, cls, 2.0);
                r.ok = true;
            } catch (const Error& e) {
                if (!is_chain_failure(e)) throw;
                r.failure = e.kind();
            }
        });

        FailureTally tally;
        std::vector<double> sups;
        std::vector<std::vector<double>> z_rows;
        std::vector<double> env;
        for (const auto& r : mc) {
            if (r.ok) {
                sups.push_back(r.sup);
                z_rows.push_back(r.z);
                env.push_back(r.envelope_moment);
            } else {
                tally.add(r.failure);
            }
        }
        if (sups.empty()) {
            throw Error(ErrorKind::InsufficientRegeneration,
                        "every Monte Carlo chain failed at n=" + std::to_string(n));
        }
        const EmpiricalDistribution mc_law(sups, EmpiricalDistribution::Kind::Unstudentized);
        std::optional<std::vector<std::vector<double>>> mc_cov;
        if (z_rows.size() >= 2) mc_cov = covariance_matrix(z_rows);
        const double crit = ks_critical_value_5pct(sups.size(), cfg.replicates);

        struct MetaResult {
            bool ok = false;
            ErrorKind failure = ErrorKind::InsufficientRegeneration;
            double blocks = nan, ks = nan, pass = nan, cov_error = nan;
        };
        std::vector<MetaResult> meta(cfg.meta_replicates);
        const std::uint64_t meta_seed = meta_base(cfg.seed, k);
        parallel_for(cfg.meta_replicates, [&](std::size_t j) {
            const ChainSeeds seeds = chain_seeds(meta_seed, j);
            MetaResult& r = meta[j];
            try {
                const Trajectory traj = simulate(cfg.model, n, seeds.chain);
                const BlockCollection bc = experiment_blocks(cfg, traj, seeds.split);
                const auto sums = class_block_sums(bc, cls);
                const BootstrapProcessSample sample =
                    bootstrap_process_sample(sums, cfg.replicates, n, seeds.bootstrap);
                r.blocks = static_cast<double>(bc.size());
                r.ks = ks_distance(sample.sup_distribution(), mc_law);
                r.pass = r.ks < crit ? 1.0 : 0.0;
                if (mc_cov && sample.values.size() >= 2) {
                    r.cov_error = relative_frobenius_error(covariance_matrix(sample.values), *mc_cov);
                }
                r.ok = true;
            } catch (const Error& e) {
                if (!is_chain_failure(e)) throw;
                r.failure = e.kind();
            }
        });

        ReportRow row;
        row.n = n;
        row.attempted = cfg.chains + cfg.meta_replicates;
        row.detail.columns = {"meta", "ok", "blocks", "sup_ks", "pass", "cov_error"};
        std::vector<double> ks;
        std::vector<double> pass;
        std::vector<double> cov_err;
        for (std::size_t j = 0; j < meta.size(); ++j) {
            const auto& r = meta[j];
            row.detail.rows.push_back(
                {static_cast<double>(j), r.ok ? 1.0 : 0.0, r.blocks, r.ks, r.pass, r.cov_error});
            if (r.ok) {
                ks.push_back(r.ks);
                pass.push_back(r.pass);
                cov_err.push_back(r.cov_error);
            } else {
                tally.add(r.failure);
            }
        }
        row.metrics = {{"pass_rate", mean_of_finite(pass)},
                       {"sup_ks_median", median_of_finite(ks)},
                       {"sup_ks_mean", mean_of_finite(ks)},
                       {"critical_value", crit},
                       {"cov_error_median", median_of_finite(cov_err)},
                       {"mc_sup_mean", mean_of_finite(sups)},
                       {"envelope_moment_mean", mean_of_finite(env)}};
        append_failures(row, tally);
        row.runtime_seconds = seconds_since(t0);
        report.rows.push_back(std::move(row));
    }
    finish_report(report);
    return report;
}

// ---------------------------------------------------------------------------
// Functional experiment

ExperimentReport run_functional_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (!cfg.functional) {
        throw Error(ErrorKind::InvalidConfig, "functional experiment needs a functional");
    }
    const SmoothFunctional& t = *cfg.functional;
    std::vector<double> refs;
    std::vector<StateFunction> fs;
    for (const auto& f : t.inner()) {
        refs.push_back(reference_mean(cfg.model, f.f));
        fs.push_back(f.f);
    }
    const double t_true = t.outer(refs);
    std::optional<double> dm_var = cfg.sigma2;
    if (!dm_var) {
        if (const auto cov = asymptotic_covariance(cfg.model, fs)) {
            const std::vector<double> d = t.gradient(refs);
            double v = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i) {
                for (std::size_t j = 0; j < d.size(); ++j) v += d[i] * (*cov)[i][j] * d[j];
            }
            dm_var = v;
        }
    }

    ExperimentReport report = start_report(
        cfg, "functional",
        "Bootstrap law of sqrt(n*) (T(mu*) - T(mu_hat)) against the Monte Carlo law of "
        "sqrt(n_hat) (T(mu_hat) - T(mu)) and the delta-method normal limit (KS).");
    report.metadata.emplace_back("functional", t.name());
    report.metadata.emplace_back("functional_true", format_double(t_true));
    report.metadata.emplace_back("delta_method_variance",
                                 dm_var ? format_double(*dm_var) : "none");

    for (std::size_t k = 0; k < cfg.n_grid.size(); ++k) {
        const auto t0 = Clock::now();
        const std::size_t n = cfg.n_grid[k];
        const std::uint64_t base = monte_carlo_base(cfg.seed, k);

        struct ChainResult {
            bool ok = false;
            ErrorKind failure = ErrorKind::InsufficientRegeneration;
            double n_hat = nan, value = nan, root = nan, lower = nan, upper = nan;
            double ks_oracle = nan, remainder = nan, d_f = nan, boot_var = nan;
            std::vector<double> boot;
        };
        std::vector<ChainResult> results(cfg.chains);
        parallel_for(cfg.chains, [&](std::size_t m) {
            const ChainSeeds seeds = chain_seeds(base, m);
            ChainResult& r = results[m];
            try {
                const Trajectory traj = simulate(cfg.model, n, seeds.chain);
                const BlockCollection bc = experiment_blocks(cfg, traj, seeds.split);
                const auto sums = functional_block_sums(t, bc);
                const FunctionalBootstrap fb = bootstrap_functional_distribution(
                    t, sums, cfg.replicates, n, seeds.bootstrap);
                r.n_hat = static_cast<double>(sums.front().total_length);
                r.value = functional_value(t, sums);
                r.root = std::sqrt(r.n_hat) * (r.value - t_true);
                const Interval ci =
                    confidence_interval(fb.distribution, cfg.level, r.value, 1.0, r.n_hat);
                r.lower = ci.lower;
                r.upper = ci.upper;
                if (dm_var && *dm_var > 0.0) {
                    const double sd = std::sqrt(*dm_var);
                    r.ks_oracle =
                        ks_distance(fb.distribution, [sd](double x) { return normal_cdf(x / sd); });
                }
                std::vector<double> abs_rem;
                for (double v : fb.remainders) abs_rem.push_back(std::abs(v));
                r.remainder = median(std::move(abs_rem));
                r.d_f = median(fb.d_f);
                r.boot_var = sample_variance(fb.roots);
                r.boot.assign(fb.distribution.values().begin(), fb.distribution.values().end());
                r.ok = true;
            } catch (const Error& e) {
                if (!is_chain_failure(e)) throw;
                r.failure = e.kind();
            }
        });

        FailureTally tally;
        std::vector<double> roots;
        for (const auto& r : results) {
            if (r.ok) {
                roots.push_back(r.root);
            } else {
                tally.add(r.failure);
            }
        }
        ReportRow row;
        row.n = n;
        row.attempted = cfg.chains;
        row.detail.columns = {"chain", "ok",        "n_hat",     "value", "root",    "ks_mc",
                              "ks_delta_method",    "remainder", "d_f",   "covered", "boot_var"};
        std::vector<double> ks(cfg.chains, nan);
        std::vector<double> covered(cfg.chains, nan);
        std::vector<double> ks_oracle;
        std::vector<double> rem;
        std::vector<double> dfs;
        std::vector<double> boot_var;
        if (!roots.empty()) {
            const EmpiricalDistribution h_nu(roots, EmpiricalDistribution::Kind::Unstudentized);
            for (std::size_t m = 0; m < cfg.chains; ++m) {
                const auto& r = results[m];
                if (!r.ok) continue;
                ks[m] = ks_sorted(r.boot, h_nu.values());
                covered[m] = (t_true >= r.lower && t_true <= r.upper) ? 1.0 : 0.0;
                ks_oracle.push_back(r.ks_oracle);
                rem.push_back(r.remainder);
                dfs.push_back(r.d_f);
                boot_var.push_back(r.boot_var);
            }
        }
        for (std::size_t m = 0; m < cfg.chains; ++m) {
            const auto& r = results[m];
            row.detail.rows.push_back({static_cast<double>(m), r.ok ? 1.0 : 0.0, r.n_hat, r.value,
                                       r.root, ks[m], r.ks_oracle, r.remainder, r.d_f, covered[m],
                                       r.boot_var});
        }
        row.metrics = {{"delta", median_of_finite(ks)},
                       {"delta_mean", mean_of_finite(ks)},
                       {"ks_delta_method_median", median_of_finite(ks_oracle)},
                       {"coverage", mean_of_finite(covered)},
                       {"remainder_abs_median", median_of_finite(rem)},
                       {"d_f_sqrt_n_median", median_of_finite(dfs)},
                       {"bootstrap_variance_mean", mean_of_finite(boot_var)},
                       {"mc_root_variance", roots.size() >= 2 ? sample_variance(roots) : nan}};
        append_failures(row, tally);
        row.runtime_seconds = seconds_since(t0);
        report.rows.push_back(std::move(row));
    }
    finish_report(report);
    return report;
}

}  // namespace rbb

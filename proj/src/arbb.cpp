#include "rbb/arbb.hpp"

#include "rbb/errors.hpp"
#include "rbb/numerics.hpp"
#include "rbb/parallel.hpp"
#include "rbb/random.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace rbb {

BootstrapDraw resample_blocks_with(std::span<const std::size_t> lengths, std::size_t n,
                                   const std::function<std::size_t()>& next_index) {
    if (lengths.size() < 2) {
        throw Error(ErrorKind::InsufficientRegeneration,
                    "resampling needs at least 2 source blocks");
    }
    BootstrapDraw draw;
    std::size_t joint = 0;
    for (;;) {
        const std::size_t j = next_index();
        const std::size_t len = lengths[j];
        ++draw.stop_index;
        if (joint + len > n) {
            draw.overflow_length = len;
            break;
        }
        joint += len;
        draw.blocks.push_back(j);
    }
    draw.total_length = joint;
    if (draw.blocks.empty()) {
        throw Error(ErrorKind::EmptyResample,
                    "first resampled block (length " + std::to_string(draw.overflow_length) +
                        ") already exceeds n = " + std::to_string(n));
    }
    return draw;
}

namespace {

BootstrapDraw resample_lengths(std::span<const std::size_t> lengths, std::size_t n,
                               std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t count = lengths.size();
    BootstrapDraw draw = resample_blocks_with(lengths, n, [&] { return rng.index(count); });
    draw.seed = seed;
    return draw;
}

}  // namespace

BootstrapDraw resample_blocks(const BlockCollection& bc, std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> lengths;
    lengths.reserve(bc.size());
    for (const Block& b : bc.blocks()) lengths.push_back(b.length);
    return resample_lengths(lengths, n, seed);
}

BootstrapMoments bootstrap_statistic(const BootstrapDraw& draw, const BlockSums& source) {
    if (draw.blocks.empty()) {
        throw Error(ErrorKind::EmptyResample, "bootstrap draw holds no blocks");
    }
    double total = 0.0;
    for (std::size_t j : draw.blocks) total += source.sums[j];
    const double n_star = static_cast<double>(draw.total_length);
    BootstrapMoments m;
    m.mean = total / n_star;
    double ss = 0.0;
    for (std::size_t j : draw.blocks) {
        const double d = source.sums[j] - m.mean * static_cast<double>(source.lengths[j]);
        ss += d * d;
    }
    m.variance = ss / n_star;
    return m;
}

BootstrapMoments bootstrap_statistic(const BootstrapDraw& draw, const BlockCollection& bc,
                                     const StateFunction& f) {
    return bootstrap_statistic(draw, block_sums(bc, f));
}

// ---------------------------------------------------------------------------

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> values, Kind kind)
    : values_(std::move(values)), kind_(kind) {
    if (values_.empty()) {
        throw Error(ErrorKind::EmptyDistribution, "empirical distribution needs a value");
    }
    std::sort(values_.begin(), values_.end());
}

double EmpiricalDistribution::cdf(double x) const {
    const auto it = std::upper_bound(values_.begin(), values_.end(), x);
    return static_cast<double>(it - values_.begin()) / static_cast<double>(values_.size());
}

double EmpiricalDistribution::quantile(double p) const { return quantile_type7(values_, p); }

EmpiricalDistribution arbb_distribution(const BlockSums& source, std::size_t replicates,
                                        std::size_t n, Studentization studentization,
                                        std::uint64_t seed) {
    if (replicates == 0) {
        throw Error(ErrorKind::InvalidParameter, "replicates must be positive");
    }
    if (source.size() < 2) {
        throw Error(ErrorKind::InsufficientRegeneration, "bootstrap needs at least 2 blocks");
    }
    const double mu_hat = regen_mean(source);
    double scale = 1.0;
    if (studentization == Studentization::Original) {
        const double var = regen_variance(source);
        if (!(var > 0.0)) {
            throw Error(ErrorKind::ZeroVariance, "sigma_hat_n(f) is zero; cannot studentize");
        }
        scale = std::sqrt(var);
    }
    std::vector<double> values(replicates);
    parallel_for(replicates, [&](std::size_t r) {
        const BootstrapDraw draw =
            resample_lengths(source.lengths, n, derive_seed(seed, streams::bootstrap, r));
        const BootstrapMoments m = bootstrap_statistic(draw, source);
        double s = scale;
        if (studentization == Studentization::Bootstrap) {
            if (!(m.variance > 0.0)) {
                throw Error(ErrorKind::ZeroVariance, "sigma*_n(f) is zero in a replicate");
            }
            s = std::sqrt(m.variance);
        }
        values[r] = std::sqrt(static_cast<double>(draw.total_length)) * (m.mean - mu_hat) / s;
    });
    const auto kind = studentization == Studentization::None
                          ? EmpiricalDistribution::Kind::Unstudentized
                          : EmpiricalDistribution::Kind::Studentized;
    return EmpiricalDistribution(std::move(values), kind);
}

EmpiricalDistribution arbb_distribution(const BlockCollection& bc, const StateFunction& f,
                                        std::size_t replicates, std::size_t n, bool studentized,
                                        std::uint64_t seed) {
    return arbb_distribution(block_sums(bc, f), replicates, n,
                             studentized ? Studentization::Original : Studentization::None, seed);
}

Interval confidence_interval(const EmpiricalDistribution& dist, double level, double center,
                             double scale, double n_hat) {
    if (!(level > 0.0 && level < 1.0)) {
        throw Error(ErrorKind::InvalidLevel, "confidence level must lie in (0,1)");
    }
    if (!(n_hat > 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "n_hat must be positive");
    }
    const double alpha = 1.0 - level;
    const double step = scale / std::sqrt(n_hat);
    return Interval{center - dist.quantile(1.0 - alpha / 2.0) * step,
                    center - dist.quantile(alpha / 2.0) * step};
}

std::string ci_record_json(const std::string& statistic, double level, const Interval& ci,
                           std::size_t n, std::size_t replicates, std::uint64_t seed) {
    const nlohmann::ordered_json j = {{"statistic", statistic}, {"level", level},
                              {"lower", ci.lower},      {"upper", ci.upper},
                              {"n", n},                 {"replicates", replicates},
                              {"seed", seed}};
    return j.dump();
}

void write_distribution_csv(std::ostream& os, const EmpiricalDistribution& dist) {
    os << "value\n";
    for (double v : dist.values()) os << v << '\n';
}

}  // namespace rbb

#include "rbb/frechet.hpp"

#include "rbb/errors.hpp"
#include "rbb/parallel.hpp"
#include "rbb/random.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rbb {

namespace {

// Coordinates of the default gradient test points. Point m uses
// probe_values[(m + j) % size] in coordinate j, so coordinates differ.
constexpr double probe_values[] = {-1.3, -0.4, 0.25, 0.7, 1.9};

std::vector<std::vector<double>> default_points(std::size_t k) {
    constexpr std::size_t count = std::size(probe_values);
    std::vector<std::vector<double>> pts;
    for (std::size_t m = 0; m < count; ++m) {
        std::vector<double> u(k);
        for (std::size_t j = 0; j < k; ++j) u[j] = probe_values[(m + j) % count];
        pts.push_back(std::move(u));
    }
    return pts;
}

std::vector<double> means_of(const std::vector<BlockSums>& sums) {
    std::vector<double> mu;
    mu.reserve(sums.size());
    for (const auto& s : sums) mu.push_back(regen_mean(s));
    return mu;
}

void require_blocks(const std::vector<BlockSums>& sums, std::size_t minimum) {
    if (sums.empty() || sums.front().size() < minimum) {
        throw Error(ErrorKind::InsufficientRegeneration,
                    "functional needs at least " + std::to_string(minimum) + " block(s)");
    }
}

}  // namespace

SmoothFunctional::SmoothFunctional(std::string name, std::vector<NamedFunction> inner, OuterMap g,
                                   OuterGradient gradient)
    : SmoothFunctional(std::move(name), inner, std::move(g), std::move(gradient),
                       default_points(inner.size())) {}

SmoothFunctional::SmoothFunctional(std::string name, std::vector<NamedFunction> inner, OuterMap g,
                                   OuterGradient gradient,
                                   const std::vector<std::vector<double>>& test_points)
    : name_(std::move(name)), inner_(std::move(inner)), g_(std::move(g)),
      grad_(std::move(gradient)) {
    if (inner_.empty()) {
        throw Error(ErrorKind::InvalidParameter, "functional needs at least one inner function");
    }
    check_gradient(test_points);
}

std::vector<double> SmoothFunctional::gradient(std::span<const double> u) const {
    std::vector<double> d = grad_(u);
    if (d.size() != inner_.size()) {
        throw Error(ErrorKind::InvalidParameter, "gradient has the wrong dimension");
    }
    return d;
}

void SmoothFunctional::check_gradient(const std::vector<std::vector<double>>& points) const {
    for (const auto& u : points) {
        if (u.size() != inner_.size()) {
            throw Error(ErrorKind::InvalidParameter, "test point has the wrong dimension");
        }
        if (!std::isfinite(g_(u))) continue;
        const std::vector<double> d = gradient(u);
        for (std::size_t j = 0; j < u.size(); ++j) {
            const double h = 1e-5 * std::max(1.0, std::abs(u[j]));
            std::vector<double> up = u;
            std::vector<double> down = u;
            up[j] += h;
            down[j] -= h;
            const double gu = g_(up);
            const double gd = g_(down);
            if (!std::isfinite(gu) || !std::isfinite(gd)) continue;
            const double fd = (gu - gd) / (2.0 * h);
            if (std::abs(fd - d[j]) > 1e-5 * std::max(1.0, std::abs(fd))) {
                std::ostringstream os;
                os << "gradient of " << name_ << " disagrees with finite differences in "
                   << "coordinate " << j << ": " << d[j] << " vs " << fd;
                throw Error(ErrorKind::InvalidParameter, os.str());
            }
        }
    }
}

SmoothFunctional SmoothFunctional::identity(NamedFunction f) {
    const std::string name = f.name;
    return SmoothFunctional(
        name, {std::move(f)}, [](std::span<const double> u) { return u[0]; },
        [](std::span<const double>) { return std::vector<double>{1.0}; });
}

SmoothFunctional SmoothFunctional::square(NamedFunction f) {
    const std::string name = "square(" + f.name + ")";
    return SmoothFunctional(
        name, {std::move(f)}, [](std::span<const double> u) { return u[0] * u[0]; },
        [](std::span<const double> u) { return std::vector<double>{2.0 * u[0]}; });
}

SmoothFunctional SmoothFunctional::difference(NamedFunction f1, NamedFunction f2) {
    const std::string name = f1.name + " - " + f2.name;
    return SmoothFunctional(
        name, {std::move(f1), std::move(f2)},
        [](std::span<const double> u) { return u[0] - u[1]; },
        [](std::span<const double>) { return std::vector<double>{1.0, -1.0}; });
}

SmoothFunctional SmoothFunctional::constant(NamedFunction f, double c) {
    std::ostringstream name;
    name << "constant(" << c << ")";
    return SmoothFunctional(
        name.str(), {std::move(f)}, [c](std::span<const double>) { return c; },
        [](std::span<const double>) { return std::vector<double>{0.0}; });
}

std::vector<BlockSums> functional_block_sums(const SmoothFunctional& t, const BlockCollection& bc) {
    std::vector<BlockSums> out;
    out.reserve(t.arity());
    for (const auto& f : t.inner()) out.push_back(block_sums(bc, f.f));
    return out;
}

double functional_value(const SmoothFunctional& t, const std::vector<BlockSums>& sums) {
    require_blocks(sums, 1);
    return t.outer(means_of(sums));
}

double functional_value(const SmoothFunctional& t, const BlockCollection& bc) {
    if (bc.size() == 0) {
        throw Error(ErrorKind::InsufficientRegeneration, "functional needs at least 1 block");
    }
    return functional_value(t, functional_block_sums(t, bc));
}

double influence_function(const SmoothFunctional& t, const BlockCollection& bc, State x) {
    if (bc.size() == 0) {
        throw Error(ErrorKind::InsufficientRegeneration, "influence needs at least 1 block");
    }
    const std::vector<double> mu = means_of(functional_block_sums(t, bc));
    const std::vector<double> d = t.gradient(mu);
    double v = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) v += d[j] * (t.inner()[j].f(x) - mu[j]);
    return v;
}

BlockSums influence_block_sums(const SmoothFunctional& t, const BlockCollection& bc) {
    if (bc.size() == 0) {
        throw Error(ErrorKind::InsufficientRegeneration, "influence needs at least 1 block");
    }
    const std::vector<double> mu = means_of(functional_block_sums(t, bc));
    const std::vector<double> d = t.gradient(mu);
    return block_sums(bc, [&](State x) {
        double v = 0.0;
        for (std::size_t j = 0; j < mu.size(); ++j) v += d[j] * (t.inner()[j].f(x) - mu[j]);
        return v;
    });
}

FunctionalBootstrap bootstrap_functional_distribution(const SmoothFunctional& t,
                                                      const std::vector<BlockSums>& sums,
                                                      std::size_t replicates, std::size_t n,
                                                      std::uint64_t seed) {
    if (replicates == 0) {
        throw Error(ErrorKind::InvalidParameter, "replicates must be positive");
    }
    require_blocks(sums, 2);
    const std::vector<double> mu_hat = means_of(sums);
    const double t_hat = t.outer(mu_hat);
    const std::vector<double> d = t.gradient(mu_hat);
    const auto& lengths = sums.front().lengths;
    const std::size_t count = lengths.size();

    std::vector<double> roots(replicates);
    std::vector<double> linear(replicates);
    std::vector<double> dist(replicates);
    parallel_for(replicates, [&](std::size_t r) {
        Rng rng(derive_seed(seed, streams::bootstrap, r));
        const BootstrapDraw draw =
            resample_blocks_with(lengths, n, [&] { return rng.index(count); });
        const double root_n = std::sqrt(static_cast<double>(draw.total_length));
        std::vector<double> mu_star(sums.size());
        for (std::size_t j = 0; j < sums.size(); ++j) {
            mu_star[j] = bootstrap_statistic(draw, sums[j]).mean;
        }
        double lin = 0.0;
        double sup = 0.0;
        for (std::size_t j = 0; j < sums.size(); ++j) {
            const double diff = mu_star[j] - mu_hat[j];
            lin += d[j] * diff;
            sup = std::max(sup, std::abs(diff));
        }
        roots[r] = root_n * (t.outer(mu_star) - t_hat);
        linear[r] = root_n * lin;
        dist[r] = root_n * sup;
    });

    std::vector<double> rem(replicates);
    for (std::size_t r = 0; r < replicates; ++r) rem[r] = roots[r] - linear[r];
    return FunctionalBootstrap{
        EmpiricalDistribution(roots, EmpiricalDistribution::Kind::Unstudentized),
        std::move(roots), std::move(linear), std::move(rem), std::move(dist)};
}

FunctionalBootstrap bootstrap_functional_distribution(const SmoothFunctional& t,
                                                      const BlockCollection& bc,
                                                      std::size_t replicates, std::size_t n,
                                                      std::uint64_t seed) {
    if (bc.size() < 2) {
        throw Error(ErrorKind::InsufficientRegeneration, "bootstrap needs at least 2 blocks");
    }
    return bootstrap_functional_distribution(t, functional_block_sums(t, bc), replicates, n,
                                             seed);
}

BlockMeasure BlockMeasure::original(std::size_t blocks) {
    return BlockMeasure{std::vector<double>(blocks, 1.0)};
}

BlockMeasure BlockMeasure::from_draw(const BootstrapDraw& draw, std::size_t blocks) {
    BlockMeasure m{std::vector<double>(blocks, 0.0)};
    for (std::size_t j : draw.blocks) {
        if (j >= blocks) {
            throw Error(ErrorKind::InvalidParameter, "draw refers to a block outside the source");
        }
        m.weights[j] += 1.0;
    }
    return m;
}

double BlockMeasure::mean(const BlockSums& sums) const {
    if (sums.size() != weights.size()) {
        throw Error(ErrorKind::InvalidParameter, "measure and block sums disagree in size");
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        num += weights[j] * sums.sums[j];
        den += weights[j] * static_cast<double>(sums.lengths[j]);
    }
    if (!(den > 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "measure has no mass");
    }
    return num / den;
}

double d_f_distance(const BlockMeasure& a, const BlockMeasure& b,
                    const std::vector<BlockSums>& sums) {
    double sup = 0.0;
    for (const auto& s : sums) sup = std::max(sup, std::abs(a.mean(s) - b.mean(s)));
    return sup;
}

double d_f_distance(const BlockMeasure& a, const BlockMeasure& b, const BlockCollection& bc,
                    const FunctionClass& cls) {
    return d_f_distance(a, b, class_block_sums(bc, cls));
}

std::string functional_record_json(const SmoothFunctional& t, double value, double level,
                                   const Interval& ci, std::size_t replicates) {
    nlohmann::ordered_json inner = nlohmann::ordered_json::array();
    for (const NamedFunction& f : t.inner()) inner.push_back(f.name);
    nlohmann::ordered_json j;
    j["g_name"] = t.name();
    j["inner_functions"] = inner;
    j["value"] = value;
    j["ci"] = {{"level", level}, {"lower", ci.lower}, {"upper", ci.upper}};
    j["replicates"] = replicates;
    return j.dump();
}

}  // namespace rbb

#include "rbb/empirical_process.hpp"

#include "rbb/errors.hpp"
#include "rbb/parallel.hpp"
#include "rbb/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace rbb {

namespace {

std::string format_param(const char* prefix, double v) {
    std::ostringstream os;
    os << prefix << v;
    return os.str();
}

double lp_distance(const std::vector<double>& a, const std::vector<double>& b, int p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        acc += p == 1 ? d : d * d;
    }
    acc /= static_cast<double>(a.size());
    return p == 1 ? acc : std::sqrt(acc);
}

std::vector<std::vector<double>> evaluation_vectors(const FunctionClass& cls,
                                                    std::span<const State> sample) {
    std::vector<std::vector<double>> out;
    out.reserve(cls.size());
    for (std::size_t i = 0; i < cls.size(); ++i) out.push_back(cls.evaluate(i, sample));
    return out;
}

void check_norm(int p) {
    if (p != 1 && p != 2) {
        throw Error(ErrorKind::InvalidParameter, "only L1 and L2 norms are supported");
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// FunctionClass

FunctionClass FunctionClass::finite_list(std::vector<NamedFunction> members,
                                         StateFunction envelope, std::optional<double> bound) {
    FunctionClass c;
    c.kind_ = Kind::FiniteList;
    c.members_ = std::move(members);
    c.envelope_ = std::move(envelope);
    c.bound_ = bound;
    return c;
}

FunctionClass FunctionClass::half_line_indicators(std::vector<double> thresholds) {
    FunctionClass c;
    c.kind_ = Kind::HalfLineIndicators;
    for (double t : thresholds) {
        c.members_.push_back(
            NamedFunction{format_param("le_", t), [t](State x) { return x <= t ? 1.0 : 0.0; }});
    }
    c.envelope_ = [](State) { return 1.0; };
    c.bound_ = 1.0;
    return c;
}

FunctionClass FunctionClass::scaled_smooth(std::vector<double> params) {
    FunctionClass c;
    c.kind_ = Kind::ScaledSmooth;
    double min_a = std::numeric_limits<double>::infinity();
    for (double a : params) {
        if (!(a >= 0.0)) {
            throw Error(ErrorKind::InvalidParameter, "scaled_smooth parameters must be >= 0");
        }
        min_a = std::min(min_a, a);
        c.members_.push_back(NamedFunction{format_param("xexp_", a),
                                           [a](State x) { return x * std::exp(-a * x * x); }});
    }
    c.envelope_ = [](State x) { return std::abs(x); };
    if (!params.empty() && min_a > 0.0) {
        c.bound_ = 1.0 / std::sqrt(2.0 * std::numbers::e * min_a);
    }
    return c;
}

bool FunctionClass::envelope_dominates(std::span<const State> sample) const {
    for (State x : sample) {
        const double env = envelope_(x);
        for (const auto& m : members_) {
            if (std::abs(m.f(x)) > env + 1e-12) return false;
        }
    }
    return true;
}

std::vector<double> FunctionClass::evaluate(std::size_t i, std::span<const State> sample) const {
    std::vector<double> out;
    out.reserve(sample.size());
    for (State x : sample) out.push_back(members_[i].f(x));
    return out;
}

std::vector<BlockSums> class_block_sums(const BlockCollection& bc, const FunctionClass& cls) {
    std::vector<BlockSums> out;
    out.reserve(cls.size());
    for (const auto& m : cls.members()) out.push_back(block_sums(bc, m.f));
    return out;
}

// ---------------------------------------------------------------------------
// Process evaluation

ProcessEvaluation process_eval(const std::vector<BlockSums>& sums, const FunctionClass& cls,
                               std::span<const double> reference) {
    if (!reference.empty() && reference.size() != cls.size()) {
        throw Error(ErrorKind::InvalidParameter, "one reference value per class member expected");
    }
    ProcessEvaluation ev;
    if (cls.empty()) return ev;
    if (sums.front().size() < 2) {
        throw Error(ErrorKind::InsufficientRegeneration, "process_eval needs at least 2 blocks");
    }
    ev.normalization = std::sqrt(static_cast<double>(sums.front().total_length));
    for (std::size_t i = 0; i < cls.size(); ++i) {
        const double ref = reference.empty() ? 0.0 : reference[i];
        ev.names.push_back(cls.member(i).name);
        ev.values.push_back(ev.normalization * (regen_mean(sums[i]) - ref));
    }
    return ev;
}

ProcessEvaluation process_eval(const BlockCollection& bc, const FunctionClass& cls,
                               std::span<const double> reference) {
    if (bc.size() < 2) {
        throw Error(ErrorKind::InsufficientRegeneration, "process_eval needs at least 2 blocks");
    }
    return process_eval(class_block_sums(bc, cls), cls, reference);
}

ProcessEvaluation bootstrap_process_eval(const BootstrapDraw& draw,
                                         const std::vector<BlockSums>& sums,
                                         const FunctionClass& cls) {
    if (draw.blocks.empty()) {
        throw Error(ErrorKind::EmptyResample, "bootstrap draw holds no blocks");
    }
    ProcessEvaluation ev;
    ev.normalization = std::sqrt(static_cast<double>(draw.total_length));
    for (std::size_t i = 0; i < cls.size(); ++i) {
        const double mu_hat = regen_mean(sums[i]);
        const double mu_star = bootstrap_statistic(draw, sums[i]).mean;
        ev.names.push_back(cls.member(i).name);
        ev.values.push_back(ev.normalization * (mu_star - mu_hat));
    }
    return ev;
}

ProcessEvaluation bootstrap_process_eval(const BootstrapDraw& draw, const BlockCollection& bc,
                                         const FunctionClass& cls) {
    return bootstrap_process_eval(draw, class_block_sums(bc, cls), cls);
}

double sup_statistic(const ProcessEvaluation& ev) {
    double s = 0.0;
    for (double v : ev.values) s = std::max(s, std::abs(v));
    return s;
}

std::vector<std::vector<double>> class_distances(const FunctionClass& cls,
                                                 std::span<const State> sample, int p) {
    check_norm(p);
    if (sample.empty()) {
        throw Error(ErrorKind::InvalidParameter, "distances need a nonempty sample");
    }
    const auto vecs = evaluation_vectors(cls, sample);
    std::vector<std::vector<double>> d(cls.size(), std::vector<double>(cls.size(), 0.0));
    for (std::size_t i = 0; i < cls.size(); ++i) {
        for (std::size_t j = i + 1; j < cls.size(); ++j) {
            d[i][j] = d[j][i] = lp_distance(vecs[i], vecs[j], p);
        }
    }
    return d;
}

double modulus(const ProcessEvaluation& ev, const std::vector<std::vector<double>>& distances,
               double delta) {
    double m = 0.0;
    for (std::size_t i = 0; i < ev.values.size(); ++i) {
        for (std::size_t j = i + 1; j < ev.values.size(); ++j) {
            if (distances[i][j] < delta) m = std::max(m, std::abs(ev.values[i] - ev.values[j]));
        }
    }
    return m;
}

EmpiricalDistribution BootstrapProcessSample::sup_distribution() const {
    std::vector<double> sups;
    sups.reserve(values.size());
    for (const auto& row : values) {
        double s = 0.0;
        for (double v : row) s = std::max(s, std::abs(v));
        sups.push_back(s);
    }
    return EmpiricalDistribution(std::move(sups), EmpiricalDistribution::Kind::Unstudentized);
}

BootstrapProcessSample bootstrap_process_sample(const std::vector<BlockSums>& sums,
                                                std::size_t replicates, std::size_t n,
                                                std::uint64_t seed) {
    if (sums.empty()) {
        throw Error(ErrorKind::InvalidParameter, "bootstrap_process_sample needs a class member");
    }
    if (sums.front().size() < 2) {
        throw Error(ErrorKind::InsufficientRegeneration, "bootstrap needs at least 2 blocks");
    }
    std::vector<double> mu_hat;
    for (const auto& s : sums) mu_hat.push_back(regen_mean(s));
    const auto& lengths = sums.front().lengths;
    BootstrapProcessSample out;
    out.values.resize(replicates);
    parallel_for(replicates, [&](std::size_t r) {
        Rng rng(derive_seed(seed, streams::bootstrap, r));
        const std::size_t count = lengths.size();
        const BootstrapDraw draw =
            resample_blocks_with(lengths, n, [&] { return rng.index(count); });
        const double root_n = std::sqrt(static_cast<double>(draw.total_length));
        auto& row = out.values[r];
        row.reserve(sums.size());
        for (std::size_t i = 0; i < sums.size(); ++i) {
            row.push_back(root_n * (bootstrap_statistic(draw, sums[i]).mean - mu_hat[i]));
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Covering numbers

std::vector<std::size_t> greedy_net(const FunctionClass& cls, std::span<const State> sample,
                                    double epsilon, int p) {
    check_norm(p);
    if (!(epsilon > 0.0)) {
        throw Error(ErrorKind::InvalidEpsilon, "epsilon must be positive");
    }
    if (cls.empty() || sample.empty()) {
        throw Error(ErrorKind::InvalidParameter, "covering needs a nonempty class and sample");
    }
    const auto vecs = evaluation_vectors(cls, sample);
    std::vector<std::size_t> centers{0};
    std::vector<double> nearest(cls.size());
    for (std::size_t i = 0; i < cls.size(); ++i) nearest[i] = lp_distance(vecs[i], vecs[0], p);
    for (;;) {
        const auto far = std::max_element(nearest.begin(), nearest.end());
        if (*far <= epsilon) break;
        const auto c = static_cast<std::size_t>(far - nearest.begin());
        centers.push_back(c);
        for (std::size_t i = 0; i < cls.size(); ++i) {
            nearest[i] = std::min(nearest[i], lp_distance(vecs[i], vecs[c], p));
        }
    }
    return centers;
}

std::size_t covering_number(const FunctionClass& cls, std::span<const State> sample,
                            double epsilon, int p) {
    return greedy_net(cls, sample, epsilon, p).size();
}

double entropy_integral(const FunctionClass& cls, std::span<const State> sample,
                        std::span<const double> epsilons) {
    if (epsilons.empty()) {
        throw Error(ErrorKind::InvalidGrid, "entropy_integral needs a nonempty epsilon grid");
    }
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (!(epsilons[i] > 0.0) || (i > 0 && !(epsilons[i] < epsilons[i - 1]))) {
            throw Error(ErrorKind::InvalidGrid, "epsilon grid must be positive and decreasing");
        }
    }
    std::vector<double> h;
    h.reserve(epsilons.size());
    for (double e : epsilons) {
        h.push_back(std::sqrt(std::log(static_cast<double>(covering_number(cls, sample, e)))));
    }
    double total = 0.0;
    for (std::size_t i = 1; i < epsilons.size(); ++i) {
        total += 0.5 * (h[i] + h[i - 1]) * (epsilons[i - 1] - epsilons[i]);
    }
    return total;
}

void write_covering_csv(std::ostream& os, const FunctionClass& cls, std::span<const State> sample,
                        std::span<const double> epsilons) {
    os << "epsilon,N,sqrt_log_N\n";
    for (double e : epsilons) {
        const std::size_t n = covering_number(cls, sample, e);
        os << e << ',' << n << ',' << std::sqrt(std::log(static_cast<double>(n))) << '\n';
    }
}

double envelope_block_moment(const BlockCollection& bc, const FunctionClass& cls, double power) {
    if (bc.size() == 0) {
        throw Error(ErrorKind::InsufficientRegeneration, "envelope moment needs a block");
    }
    const BlockSums env = block_sums(bc, cls.envelope());
    double acc = 0.0;
    for (double s : env.sums) acc += std::pow(std::abs(s), power);
    return acc / static_cast<double>(env.size());
}

std::vector<std::vector<double>> covariance_matrix(const std::vector<std::vector<double>>& rows) {
    if (rows.size() < 2) {
        throw Error(ErrorKind::InvalidParameter, "covariance needs at least two rows");
    }
    const std::size_t k = rows.front().size();
    std::vector<double> m(k, 0.0);
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < k; ++i) m[i] += r[i];
    }
    for (double& v : m) v /= static_cast<double>(rows.size());
    std::vector<std::vector<double>> c(k, std::vector<double>(k, 0.0));
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) c[i][j] += (r[i] - m[i]) * (r[j] - m[j]);
        }
    }
    for (auto& row : c) {
        for (double& v : row) v /= static_cast<double>(rows.size() - 1);
    }
    return c;
}

double relative_frobenius_error(const std::vector<std::vector<double>>& a,
                                const std::vector<std::vector<double>>& b) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        for (std::size_t j = 0; j < b[i].size(); ++j) {
            num += (a[i][j] - b[i][j]) * (a[i][j] - b[i][j]);
            den += b[i][j] * b[i][j];
        }
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace rbb

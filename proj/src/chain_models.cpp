#include "rbb/chain_models.hpp"

#include "rbb/errors.hpp"
#include "rbb/numerics.hpp"
#include "rbb/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rbb {

namespace {

constexpr double row_sum_tolerance = 1e-12;
constexpr double singular_tolerance = 1e-10;
constexpr double phi_mass_tolerance = 1e-8;
constexpr double degenerate_delta = 1e-6;
constexpr std::size_t reflected_truncation = 400;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::size_t finite_index(State x, std::size_t k) {
    const double r = std::round(x);
    if (r != x || r < 0.0 || r >= static_cast<double>(k)) {
        throw Error(ErrorKind::InvalidParameter,
                    "state " + std::to_string(x) + " is not one of the finite states");
    }
    return static_cast<std::size_t>(r);
}

std::size_t sample_discrete(const std::vector<double>& probs, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        acc += probs[j];
        if (u < acc) return j;
    }
    // u landed in the rounding gap above the last partial sum.
    for (std::size_t j = probs.size(); j-- > 0;) {
        if (probs[j] > 0.0) return j;
    }
    return probs.size() - 1;
}

double reflected_step(const ReflectedWalk& w, Rng& rng) {
    return std::round(w.step_mean + w.step_sd * rng.normal());
}

}  // namespace

std::vector<std::vector<double>> reflected_walk_matrix(const ReflectedWalk& w, std::size_t K) {
    const std::size_t k = K + 1;
    auto step_prob = [&](double j) {
        return normal_cdf((j + 0.5 - w.step_mean) / w.step_sd) -
               normal_cdf((j - 0.5 - w.step_mean) / w.step_sd);
    };
    std::vector<std::vector<double>> P(k, std::vector<double>(k, 0.0));
    for (std::size_t x = 0; x < k; ++x) {
        const double xd = static_cast<double>(x);
        // y = 0 collects every step <= -x.
        P[x][0] = normal_cdf((-xd + 0.5 - w.step_mean) / w.step_sd);
        for (std::size_t y = 1; y < K; ++y) {
            P[x][y] = step_prob(static_cast<double>(y) - xd);
        }
        P[x][K] = 1.0 - normal_cdf((static_cast<double>(K) - xd - 0.5 - w.step_mean) / w.step_sd);
    }
    return P;
}

std::vector<double> reflected_walk_stationary(const ReflectedWalk& w, std::size_t K) {
    return stationary_oracle(make_finite_state(reflected_walk_matrix(w, K), InitialLaw::point(0.0)));
}

namespace {

State draw_initial(const ChainModel& model, Rng& rng) {
    const InitialLaw& law = model.initial_law;
    switch (law.type) {
        case InitialLaw::Type::Point:
            return law.value;
        case InitialLaw::Type::Normal:
            return law.mean + law.sd * rng.normal();
        case InitialLaw::Type::Discrete:
            return static_cast<State>(sample_discrete(law.probs, rng));
        case InitialLaw::Type::Stationary:
            return std::visit(
                overloaded{
                    [&](const FiniteState&) {
                        return static_cast<State>(sample_discrete(stationary_oracle(model), rng));
                    },
                    [&](const LinearAR& ar) {
                        return std::sqrt(ar1_stationary_variance(ar)) * rng.normal();
                    },
                    [&](const ReflectedWalk& w) {
                        return static_cast<State>(
                            sample_discrete(reflected_walk_stationary(w, reflected_truncation), rng));
                    },
                },
                model.kind);
    }
    return 0.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// StateSet

StateSet StateSet::values(std::vector<State> points) {
    StateSet s;
    s.kind_ = Kind::Points;
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    s.points_ = std::move(points);
    return s;
}

StateSet StateSet::interval(State lo, State hi) {
    if (!(lo <= hi)) {
        throw Error(ErrorKind::InvalidParameter, "interval bounds out of order");
    }
    StateSet s;
    s.kind_ = Kind::Interval;
    s.lo_ = lo;
    s.hi_ = hi;
    return s;
}

StateSet StateSet::everything() {
    StateSet s;
    s.kind_ = Kind::All;
    return s;
}

StateSet StateSet::nothing() { return StateSet{}; }

bool StateSet::contains(State x) const noexcept {
    switch (kind_) {
        case Kind::Points:
            return std::binary_search(points_.begin(), points_.end(), x);
        case Kind::Interval:
            return x >= lo_ && x <= hi_;
        case Kind::All:
            return true;
        case Kind::None:
            return false;
    }
    return false;
}

std::string StateSet::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::Points:
            os << '{';
            for (std::size_t i = 0; i < points_.size(); ++i) os << (i ? "," : "") << points_[i];
            os << '}';
            break;
        case Kind::Interval:
            os << '[' << lo_ << ',' << hi_ << ']';
            break;
        case Kind::All:
            os << "all";
            break;
        case Kind::None:
            os << "none";
            break;
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// InitialLaw

InitialLaw InitialLaw::point(double v) {
    InitialLaw l;
    l.type = Type::Point;
    l.value = v;
    return l;
}

InitialLaw InitialLaw::normal(double m, double s) {
    InitialLaw l;
    l.type = Type::Normal;
    l.mean = m;
    l.sd = s;
    return l;
}

InitialLaw InitialLaw::discrete(std::vector<double> p) {
    InitialLaw l;
    l.type = Type::Discrete;
    l.probs = std::move(p);
    return l;
}

InitialLaw InitialLaw::stationary() { return InitialLaw{}; }

// ---------------------------------------------------------------------------
// SmallSetConfig

SmallSetConfig::SmallSetConfig(double half_width, double delta,
                               std::function<double(double)> minorant, std::string description)
    : half_width_(half_width),
      delta_(delta),
      minorant_(std::move(minorant)),
      description_(std::move(description)) {
    if (!(half_width_ > 0.0) || !std::isfinite(half_width_)) {
        throw Error(ErrorKind::InvalidModel, "small set half-width must be positive");
    }
    if (!(delta_ > 0.0 && delta_ < 1.0)) {
        throw Error(ErrorKind::InvalidModel, "small set delta must lie in (0,1)");
    }
    if (!minorant_) {
        throw Error(ErrorKind::InvalidModel, "small set minorant is empty");
    }
    const double mass =
        simpson([this](double y) { return minorant_(y) / delta_; }, -half_width_, half_width_);
    if (std::abs(mass - 1.0) > phi_mass_tolerance) {
        throw Error(ErrorKind::InvalidModel,
                    "phi does not integrate to one over S (mass " + std::to_string(mass) + ")");
    }
    for (std::size_t i = 0; i <= 100; ++i) {
        const double y = -half_width_ + 2.0 * half_width_ * static_cast<double>(i) / 100.0;
        if (!(minorant_(y) > 0.0)) {
            throw Error(ErrorKind::InvalidModel, "phi must be bounded away from zero on S");
        }
    }
}

SmallSetConfig SmallSetConfig::uniform(double half_width, double delta) {
    const double height = delta / (2.0 * half_width);
    return SmallSetConfig(half_width, delta, [height](double) { return height; },
                          "uniform phi on [-s,s]");
}

// ---------------------------------------------------------------------------
// ChainModel

void ChainModel::validate() const {
    std::visit(
        overloaded{
            [](const FiniteState& fs) {
                if (fs.matrix.empty()) {
                    throw Error(ErrorKind::InvalidModel, "transition matrix is empty");
                }
                for (const auto& row : fs.matrix) {
                    if (row.size() != fs.matrix.size()) {
                        throw Error(ErrorKind::InvalidModel, "transition matrix is not square");
                    }
                    double sum = 0.0;
                    for (double v : row) {
                        if (!(v >= 0.0) || !std::isfinite(v)) {
                            throw Error(ErrorKind::InvalidModel, "negative transition probability");
                        }
                        sum += v;
                    }
                    if (std::abs(sum - 1.0) > row_sum_tolerance) {
                        throw Error(ErrorKind::InvalidModel, "transition matrix row does not sum to 1");
                    }
                }
            },
            [](const LinearAR& ar) {
                if (!(std::abs(ar.rho) < 1.0)) {
                    throw Error(ErrorKind::InvalidModel, "LinearAR requires |rho| < 1");
                }
                if (!(ar.noise_sd > 0.0) || !std::isfinite(ar.noise_sd)) {
                    throw Error(ErrorKind::InvalidModel, "LinearAR requires noise_sd > 0");
                }
            },
            [](const ReflectedWalk& w) {
                if (!(w.step_mean < 0.0)) {
                    throw Error(ErrorKind::InvalidModel, "ReflectedWalk requires step_mean < 0");
                }
                if (!(w.step_sd > 0.0) || !std::isfinite(w.step_sd)) {
                    throw Error(ErrorKind::InvalidModel, "ReflectedWalk requires step_sd > 0");
                }
            },
        },
        kind);

    if (initial_law.type == InitialLaw::Type::Discrete) {
        double sum = 0.0;
        for (double p : initial_law.probs) {
            if (!(p >= 0.0)) throw Error(ErrorKind::InvalidModel, "negative initial probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > row_sum_tolerance) {
            throw Error(ErrorKind::InvalidModel, "initial law does not sum to 1");
        }
        if (const auto* fs = std::get_if<FiniteState>(&kind);
            fs && initial_law.probs.size() != fs->matrix.size()) {
            throw Error(ErrorKind::InvalidModel, "initial law size differs from state count");
        }
    }
    if (initial_law.type == InitialLaw::Type::Normal && !(initial_law.sd > 0.0)) {
        throw Error(ErrorKind::InvalidModel, "initial normal law needs sd > 0");
    }
    if (small_set && has_transition_density() && !verify_minorization(*this, *small_set)) {
        throw Error(ErrorKind::InvalidModel, "small set minorization fails on the check grid");
    }
}

std::string ChainModel::name() const {
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const FiniteState& fs) { os << "FiniteState(k=" << fs.matrix.size() << ")"; },
                   [&](const LinearAR& ar) {
                       os << "LinearAR(rho=" << ar.rho << ",sd=" << ar.noise_sd << ")";
                   },
                   [&](const ReflectedWalk& w) {
                       os << "ReflectedWalk(mean=" << w.step_mean << ",sd=" << w.step_sd << ")";
                   },
               },
               kind);
    return os.str();
}

bool ChainModel::has_transition_density() const noexcept {
    return !std::holds_alternative<ReflectedWalk>(kind);
}

ChainModel make_finite_state(std::vector<std::vector<double>> matrix, InitialLaw initial) {
    ChainModel m{FiniteState{std::move(matrix)}, std::move(initial), std::nullopt, std::nullopt};
    return m;
}

ChainModel make_linear_ar(double rho, double noise_sd, InitialLaw initial) {
    return ChainModel{LinearAR{rho, noise_sd}, std::move(initial), std::nullopt, std::nullopt};
}

ChainModel make_reflected_walk(double step_mean, double step_sd, InitialLaw initial) {
    return ChainModel{ReflectedWalk{step_mean, step_sd}, std::move(initial),
                      StateSet::singleton(0.0), std::nullopt};
}

Trajectory Trajectory::from_states(std::vector<State> xs) {
    if (xs.empty()) {
        throw Error(ErrorKind::InvalidParameter, "trajectory needs at least one state");
    }
    return Trajectory{std::make_shared<const std::vector<State>>(std::move(xs)), std::nullopt, 0};
}

// ---------------------------------------------------------------------------
// Operations

Trajectory simulate(const ChainModel& model, std::size_t n, std::uint64_t seed) {
    if (n < 2) {
        throw Error(ErrorKind::InvalidParameter, "simulate requires n >= 2");
    }
    model.validate();
    Rng rng(seed);
    std::vector<State> xs;
    xs.reserve(n + 1);
    xs.push_back(draw_initial(model, rng));

    std::visit(overloaded{
                   [&](const FiniteState& fs) {
                       const std::size_t k = fs.matrix.size();
                       std::size_t s = finite_index(xs.front(), k);
                       for (std::size_t i = 0; i < n; ++i) {
                           s = sample_discrete(fs.matrix[s], rng);
                           xs.push_back(static_cast<State>(s));
                       }
                   },
                   [&](const LinearAR& ar) {
                       for (std::size_t i = 0; i < n; ++i) {
                           xs.push_back(ar.rho * xs.back() + ar.noise_sd * rng.normal());
                       }
                   },
                   [&](const ReflectedWalk& w) {
                       for (std::size_t i = 0; i < n; ++i) {
                           xs.push_back(std::max(0.0, xs.back() + reflected_step(w, rng)));
                       }
                   },
               },
               model.kind);

    return Trajectory{std::make_shared<const std::vector<State>>(std::move(xs)), model, seed};
}

double transition_density(const ChainModel& model, State x, State y) {
    return std::visit(
        overloaded{
            [&](const FiniteState& fs) {
                const std::size_t k = fs.matrix.size();
                return fs.matrix[finite_index(x, k)][finite_index(y, k)];
            },
            [&](const LinearAR& ar) {
                return normal_pdf((y - ar.rho * x) / ar.noise_sd) / ar.noise_sd;
            },
            [](const ReflectedWalk&) -> double {
                throw Error(ErrorKind::Unsupported,
                            "ReflectedWalk has no transition density in this library");
            },
        },
        model.kind);
}

std::optional<double> transition_density_max(const ChainModel& model) {
    if (const auto* ar = std::get_if<LinearAR>(&model.kind)) {
        return inv_sqrt_2pi / ar->noise_sd;
    }
    if (const auto* fs = std::get_if<FiniteState>(&model.kind)) {
        double m = 0.0;
        for (const auto& row : fs->matrix) m = std::max(m, *std::max_element(row.begin(), row.end()));
        return m;
    }
    return std::nullopt;
}

SmallSetConfig ar1_minorization(double rho, double s, double noise_sd) {
    if (!(std::abs(rho) < 1.0)) {
        throw Error(ErrorKind::InvalidParameter, "ar1_minorization requires |rho| < 1");
    }
    if (!(s > 0.0) || !(noise_sd > 0.0)) {
        throw Error(ErrorKind::InvalidParameter, "ar1_minorization requires s > 0 and sd > 0");
    }
    // p(x, y) is unimodal in y - rho x, so the infimum over x in [-s, s] sits
    // at one of the endpoints. The expressions mirror transition_density so
    // that rho = 0 reproduces p exactly.
    auto inf_density = [rho, s, noise_sd](double y) {
        const double a = normal_pdf((y - rho * s) / noise_sd) / noise_sd;
        const double b = normal_pdf((y - rho * -s) / noise_sd) / noise_sd;
        return std::min(a, b);
    };
    const double delta = simpson(inf_density, -s, s);
    if (!(delta > degenerate_delta)) {
        throw Error(ErrorKind::DegenerateMinorization,
                    "minorization mass " + std::to_string(delta) + " is too small");
    }
    if (!(delta < 1.0)) {
        throw Error(ErrorKind::DegenerateMinorization,
                    "minorization mass rounds to 1; shrink the small set");
    }
    std::ostringstream desc;
    desc << "AR(1) infimum minorant on [-" << s << "," << s << "], rho=" << rho;
    return SmallSetConfig(s, delta, inf_density, desc.str());
}

bool verify_minorization(const ChainModel& model, const SmallSetConfig& cfg, std::size_t points,
                         double tol) {
    if (points < 2) points = 2;
    const double s = cfg.half_width();
    for (std::size_t i = 0; i < points; ++i) {
        const double x = -s + 2.0 * s * static_cast<double>(i) / static_cast<double>(points - 1);
        for (std::size_t j = 0; j < points; ++j) {
            const double y =
                -s + 2.0 * s * static_cast<double>(j) / static_cast<double>(points - 1);
            if (transition_density(model, x, y) < cfg.minorant(y) - tol) return false;
        }
    }
    return true;
}

std::vector<double> stationary_oracle(const ChainModel& model) {
    const auto* fs = std::get_if<FiniteState>(&model.kind);
    if (fs == nullptr) {
        throw Error(ErrorKind::Unsupported, "stationary_oracle needs a FiniteState model");
    }
    const auto k = static_cast<Eigen::Index>(fs->matrix.size());
    // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    Eigen::MatrixXd a(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            a(i, j) = fs->matrix[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] -
                      (i == j ? 1.0 : 0.0);
        }
    }
    a.row(k - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    b(k - 1) = 1.0;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(singular_tolerance);
    if (!lu.isInvertible()) {
        throw Error(ErrorKind::NotIrreducible, "stationary system is singular");
    }
    const Eigen::VectorXd pi = lu.solve(b);
    std::vector<double> out(pi.data(), pi.data() + pi.size());
    for (double& p : out) p = std::max(p, 0.0);
    return out;
}

double ar1_stationary_variance(const LinearAR& ar) {
    return ar.noise_sd * ar.noise_sd / (1.0 - ar.rho * ar.rho);
}

}  // namespace rbb

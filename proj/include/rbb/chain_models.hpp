#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace rbb {

/// All built-in state spaces are embedded in the real line. Finite chains use
/// the integers 0..k-1, the reflected walk uses the nonnegative integers.
using State = double;

/// A measurable subset of the state space: a finite set of points, a closed
/// interval, everything, or nothing.
class StateSet {
public:
    [[nodiscard]] static StateSet values(std::vector<State> points);
    [[nodiscard]] static StateSet singleton(State point) { return values({point}); }
    [[nodiscard]] static StateSet interval(State lo, State hi);
    [[nodiscard]] static StateSet everything();
    [[nodiscard]] static StateSet nothing();

    [[nodiscard]] bool contains(State x) const noexcept;
    [[nodiscard]] std::string describe() const;

private:
    enum class Kind { Points, Interval, All, None };
    Kind kind_ = Kind::None;
    std::vector<State> points_;
    State lo_ = 0.0;
    State hi_ = 0.0;
};

struct FiniteState {
    std::vector<std::vector<double>> matrix;  // row-stochastic
};

struct LinearAR {
    double rho = 0.0;
    double noise_sd = 1.0;
};

/// X' = max(0, X + W) with W = round(step_mean + step_sd * Z), Z standard
/// normal. The integer lattice makes {0} an accessible atom.
struct ReflectedWalk {
    double step_mean = -0.5;
    double step_sd = 1.0;
};

using ModelKind = std::variant<FiniteState, LinearAR, ReflectedWalk>;

struct InitialLaw {
    enum class Type { Point, Normal, Discrete, Stationary };
    Type type = Type::Stationary;
    double value = 0.0;          // Point
    double mean = 0.0;           // Normal
    double sd = 1.0;             // Normal
    std::vector<double> probs;   // Discrete, over states 0..k-1

    [[nodiscard]] static InitialLaw point(double v);
    [[nodiscard]] static InitialLaw normal(double m, double s);
    [[nodiscard]] static InitialLaw discrete(std::vector<double> p);
    [[nodiscard]] static InitialLaw stationary();
};

/// Small set S = [-half_width, half_width] with minorization
/// p(x, y) >= delta * phi(y) for x, y in S (one-step, m = 1).
///
/// The minorant delta*phi is stored directly rather than phi: the splitting
/// probabilities are minorant(y) / p(x, y) and storing the product avoids a
/// rounding step in the common case where the two coincide exactly.
class SmallSetConfig {
public:
    /// Validates delta in (0,1), integral of phi over S equal to one within
    /// 1e-8 (Simpson, 2048 subintervals) and inf phi > 0 on a 101-point grid.
    SmallSetConfig(double half_width, double delta, std::function<double(double)> minorant,
                   std::string description);

    [[nodiscard]] double half_width() const noexcept { return half_width_; }
    [[nodiscard]] double delta() const noexcept { return delta_; }
    [[nodiscard]] bool contains(State x) const noexcept {
        return x >= -half_width_ && x <= half_width_;
    }
    /// delta * phi(y); zero outside S.
    [[nodiscard]] double minorant(State y) const {
        return contains(y) ? minorant_(y) : 0.0;
    }
    [[nodiscard]] double phi(State y) const { return minorant(y) / delta_; }
    [[nodiscard]] const std::string& description() const noexcept { return description_; }

    /// Uniform phi on S with the given delta.
    [[nodiscard]] static SmallSetConfig uniform(double half_width, double delta);

private:
    double half_width_;
    double delta_;
    std::function<double(double)> minorant_;
    std::string description_;
};

struct ChainModel {
    ModelKind kind;
    InitialLaw initial_law = InitialLaw::stationary();
    std::optional<StateSet> atom;
    std::optional<SmallSetConfig> small_set;

    /// Throws Error(InvalidModel) when a parameter invariant is violated.
    void validate() const;
    [[nodiscard]] std::string name() const;
    [[nodiscard]] bool has_transition_density() const noexcept;
};

[[nodiscard]] ChainModel make_finite_state(std::vector<std::vector<double>> matrix,
                                           InitialLaw initial = InitialLaw::stationary());
[[nodiscard]] ChainModel make_linear_ar(double rho, double noise_sd = 1.0,
                                        InitialLaw initial = InitialLaw::stationary());
[[nodiscard]] ChainModel make_reflected_walk(double step_mean, double step_sd,
                                             InitialLaw initial = InitialLaw::point(0.0));

/// An observed path X_1..X_{n+1}. The states are shared, never mutated.
struct Trajectory {
    std::shared_ptr<const std::vector<State>> states;
    std::optional<ChainModel> model;
    std::uint64_t seed = 0;

    /// n, the number of transitions (one less than the number of states).
    [[nodiscard]] std::size_t n() const noexcept { return states->size() - 1; }
    /// 1-based access matching the X_1..X_{n+1} convention.
    [[nodiscard]] State at(std::size_t i) const { return (*states)[i - 1]; }

    [[nodiscard]] static Trajectory from_states(std::vector<State> xs);
};

/// Simulates n transitions (n + 1 states) of the chain. Deterministic in
/// (model, n, seed).
[[nodiscard]] Trajectory simulate(const ChainModel& model, std::size_t n, std::uint64_t seed);

/// True transition density p(x, y) with respect to Lebesgue (LinearAR) or
/// counting measure (FiniteState). ReflectedWalk raises Unsupported.
[[nodiscard]] double transition_density(const ChainModel& model, State x, State y);

/// Largest value of the true transition density, when known.
[[nodiscard]] std::optional<double> transition_density_max(const ChainModel& model);

/// Minorization for LinearAR on S = [-s, s]: the minorant is the pointwise
/// infimum over x in S of p(x, y), delta its mass over S.
/// Throws DegenerateMinorization when delta <= 1e-6.
[[nodiscard]] SmallSetConfig ar1_minorization(double rho, double s, double noise_sd = 1.0);

/// Checks p(x, y) >= delta * phi(y) - tol on a points x points grid over S x S.
[[nodiscard]] bool verify_minorization(const ChainModel& model, const SmallSetConfig& cfg,
                                       std::size_t points = 101, double tol = 1e-12);

/// Exact stationary law of a finite chain via a direct linear solve of
/// pi P = pi, sum(pi) = 1. Throws NotIrreducible when the system is singular.
[[nodiscard]] std::vector<double> stationary_oracle(const ChainModel& model);

/// Transition matrix of the reflected lattice walk on {0..truncation}; steps
/// past the truncation point land on it.
[[nodiscard]] std::vector<std::vector<double>> reflected_walk_matrix(const ReflectedWalk& walk,
                                                                     std::size_t truncation = 400);

/// Stationary law of the reflected lattice walk truncated to {0..truncation};
/// mass above the truncation point is folded onto it.
[[nodiscard]] std::vector<double> reflected_walk_stationary(const ReflectedWalk& walk,
                                                            std::size_t truncation = 400);

/// Stationary variance of LinearAR: noise_sd^2 / (1 - rho^2).
[[nodiscard]] double ar1_stationary_variance(const LinearAR& ar);

}  // namespace rbb

#include "rbb/splitting.hpp"

#include "rbb/errors.hpp"
#include "rbb/random.hpp"

#include <algorithm>
#include <ostream>
#include <string>

namespace rbb {

namespace {

constexpr double parameter_slack = 1e-12;

}  // namespace

std::size_t SplitPath::regeneration_count() const {
    std::size_t c = 0;
    for (std::size_t i = 1; i <= n(); ++i) {
        if (indicators[i - 1] != 0 && in_small_set(i)) ++c;
    }
    return c;
}

RegenerationSchedule SplitPath::schedule() const {
    RegenerationSchedule sched;
    for (std::size_t i = 1; i <= n(); ++i) {
        if (indicators[i - 1] != 0 && in_small_set(i)) sched.times.push_back(i);
    }
    return sched;
}

SplitPath draw_split_indicators(const Trajectory& traj, const DensityFunction& density,
                                SplitMode mode, const SmallSetConfig& cfg, std::uint64_t seed) {
    const std::size_t n = traj.n();
    const double delta = cfg.delta();
    Rng rng(seed);
    SplitPath sp{traj.states, {}, {}, cfg, mode, seed};
    sp.indicators.resize(n);
    sp.parameters.resize(n);
    for (std::size_t i = 1; i <= n; ++i) {
        const State x = traj.at(i);
        double param = delta;
        if (cfg.contains(x)) {
            const State next = traj.at(i + 1);
            const double floor = cfg.minorant(next);
            if (floor > 0.0) {
                const double p = density(x, next);
                if (!(p > 0.0)) {
                    throw Error(ErrorKind::InvalidParameter,
                                "transition density vanishes at a split point (i=" +
                                    std::to_string(i) + ")");
                }
                param = floor / p;
            } else {
                param = 0.0;
            }
        }
        if (!(param >= -parameter_slack && param <= 1.0 + parameter_slack)) {
            throw Error(ErrorKind::InvalidParameter,
                        "Bernoulli parameter " + std::to_string(param) + " outside [0,1] at i=" +
                            std::to_string(i));
        }
        param = std::clamp(param, 0.0, 1.0);
        sp.parameters[i - 1] = param;
        sp.indicators[i - 1] = rng.bernoulli(param) ? 1 : 0;
    }
    return sp;
}

SplitPath draw_split_indicators(const Trajectory& traj, const ChainModel& model,
                                const SmallSetConfig& cfg, std::uint64_t seed) {
    if (!model.has_transition_density()) {
        throw Error(ErrorKind::Unsupported, "exact splitting needs a known transition density");
    }
    return draw_split_indicators(
        traj, [&model](State x, State y) { return transition_density(model, x, y); },
        SplitMode::Exact, cfg, seed);
}

SplitPath draw_split_indicators(const Trajectory& traj, const TransitionDensityEstimate& estimate,
                                const SmallSetConfig& cfg, std::uint64_t seed) {
    return draw_split_indicators(
        traj, [&estimate](State x, State y) { return estimate.evaluate(x, y); },
        SplitMode::Approximate, cfg, seed);
}

BlockCollection pseudo_blocks(const SplitPath& sp) {
    const RegenerationSchedule sched = sp.schedule();
    if (sched.count() < 2) {
        throw Error(ErrorKind::InsufficientRegeneration,
                    "split chain visited S x {1} " + std::to_string(sched.count()) +
                        " time(s); need at least 2");
    }
    Trajectory view{sp.states, std::nullopt, sp.seed};
    return decompose_blocks(view, sched);
}

void write_split_csv(std::ostream& os, const SplitPath& sp) {
    os << "i,x_i,in_S,bernoulli_param,y_i\n";
    for (std::size_t i = 1; i <= sp.n(); ++i) {
        os << i << ',' << (*sp.states)[i - 1] << ',' << (sp.in_small_set(i) ? 1 : 0) << ','
           << sp.parameters[i - 1] << ',' << static_cast<int>(sp.indicators[i - 1]) << '\n';
    }
}

}  // namespace rbb

#include "rbb/harness.hpp"
#include "rbb/numerics.hpp"
#include "rbb/random.hpp"
#include "rbb/splitting.hpp"

#include "support.hpp"

#include <sstream>

using namespace rbb;
using rbb::test::path;

namespace {

double positive(State x) { return x > 0.0 ? 1.0 : 0.0; }

SplitPath exact_split(double rho, std::size_t n, std::uint64_t seed) {
    const ChainModel m = make_linear_ar(rho);
    const Trajectory t = simulate(m, n, derive_seed(seed, streams::chain, 0));
    return draw_split_indicators(t, m, ar1_minorization(rho, 1.0), derive_seed(seed, streams::split, 0));
}

}  // namespace

TEST_CASE("white noise: split parameter is the indicator of the next state in S") {
    const SplitPath sp = exact_split(0.0, 5000, 1);
    for (std::size_t i = 1; i <= sp.n(); ++i) {
        const State next = (*sp.states)[i];
        if (sp.in_small_set(i)) {
            const double expected = sp.cfg.contains(next) ? 1.0 : 0.0;
            CHECK(sp.parameters[i - 1] == expected);
            CHECK(sp.indicators[i - 1] == static_cast<std::uint8_t>(expected));
        } else {
            CHECK(sp.parameters[i - 1] == sp.cfg.delta());
        }
    }
}

TEST_CASE("parameters lie in [0, 1] and splitting is deterministic") {
    const SplitPath a = exact_split(0.5, 3000, 2);
    const SplitPath b = exact_split(0.5, 3000, 2);
    CHECK(a.indicators == b.indicators);
    CHECK(a.parameters == b.parameters);
    for (double p : a.parameters) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("tiny delta leaves no regenerations") {
    const ChainModel m = make_linear_ar(0.0);
    const Trajectory t = simulate(m, 1000, 3);
    const SplitPath sp = draw_split_indicators(t, m, SmallSetConfig::uniform(1.0, 1e-6), 4);
    CHECK(sp.regeneration_count() == 0);
    CHECK_THROWS_KIND(pseudo_blocks(sp), ErrorKind::InsufficientRegeneration);
}

TEST_CASE("regeneration rate matches delta times the stationary mass of S") {
    // P(X_i in S, Y_i = 1) = integral over S of pi(x) delta phi(y) dy dx = delta pi(S).
    const double delta = 2.0 * (normal_cdf(1.5) - normal_cdf(0.5));
    const double pi_s = 2.0 * normal_cdf(1.0 / std::sqrt(4.0 / 3.0)) - 1.0;
    const double exact = delta * pi_s;

    const SplitPath long_run = exact_split(0.5, 1000000, 5);
    const double long_rate = static_cast<double>(long_run.regeneration_count()) / 1e6;
    CHECK(std::abs(long_rate - exact) / exact < 0.02);

    const SplitPath sp = exact_split(0.5, 10000, 6);
    const double rate = static_cast<double>(sp.regeneration_count()) / 1e4;
    CHECK(std::abs(rate - long_rate) / long_rate < 0.2);
}

TEST_CASE("pseudo-blocks from given indicators") {
    const Trajectory t = path({0.1, 0.2, 0.3, 0.1, 0.5});
    SplitPath sp{t.states, {1, 0, 1, 0}, {0.5, 0.5, 0.5, 0.5}, SmallSetConfig::uniform(1.0, 0.5)};
    CHECK(sp.schedule().times == std::vector<std::size_t>{1, 3});
    const BlockCollection bc = pseudo_blocks(sp);
    REQUIRE(bc.size() == 1);
    CHECK(std::vector<State>(bc.block_states(0).begin(), bc.block_states(0).end()) ==
          std::vector<State>{0.2, 0.3});
    CHECK(bc.interior_length() == 2);

    SplitPath none{t.states, {0, 0, 0, 0}, {0.5, 0.5, 0.5, 0.5}, SmallSetConfig::uniform(1.0, 0.5)};
    CHECK_THROWS_KIND(pseudo_blocks(none), ErrorKind::InsufficientRegeneration);

    // Y_i = 1 off S is not a regeneration.
    const Trajectory off = path({0.1, 2.0, 0.3, 0.1, 0.5});
    SplitPath sp_off{off.states, {1, 1, 1, 0}, {0.5, 0.5, 0.5, 0.5}, SmallSetConfig::uniform(1.0, 0.5)};
    CHECK(sp_off.schedule().times == std::vector<std::size_t>{1, 3});
}

TEST_CASE("exact pseudo-block sums are uncorrelated") {
    int good = 0;
    const int seeds = 200;
    for (int s = 0; s < seeds; ++s) {
        const BlockSums sums = block_sums(pseudo_blocks(exact_split(0.0, 5000, 100 + s)), positive);
        if (std::abs(lag1_autocorrelation(sums.sums)) < 3.0 / std::sqrt(static_cast<double>(sums.size()))) ++good;
    }
    CHECK(good >= 0.95 * seeds);
}

TEST_CASE("odd and even pseudo-blocks share one law") {
    int good = 0;
    const int seeds = 200;
    for (int s = 0; s < seeds; ++s) {
        const BlockSums sums = block_sums(pseudo_blocks(exact_split(0.5, 5000, 400 + s)), positive);
        std::vector<double> odd, even;
        for (std::size_t j = 0; j < sums.size(); ++j) (j % 2 == 0 ? odd : even).push_back(sums.sums[j]);
        std::sort(odd.begin(), odd.end());
        std::sort(even.begin(), even.end());
        if (ks_distance(odd, even) < ks_critical_value_5pct(odd.size(), even.size())) ++good;
    }
    CHECK(good >= 0.95 * seeds);
}

TEST_CASE("pseudo-block occupation matches the stationary law on quantile bins") {
    const BlockCollection bc = pseudo_blocks(exact_split(0.5, 100000, 7));
    const double sd = std::sqrt(4.0 / 3.0);
    const std::vector<double> z = {-50.0, -0.8416212335729143 * sd, -0.2533471031357997 * sd,
                                   0.2533471031357997 * sd, 0.8416212335729143 * sd, 50.0};
    for (std::size_t k = 0; k + 1 < z.size(); ++k) {
        CHECK(std::abs(occupation_estimate(bc, StateSet::interval(z[k], z[k + 1])) - 0.2) < 0.02);
    }
}

TEST_CASE("approximate splitting yields valid pseudo-blocks") {
    const ChainModel m = make_linear_ar(0.5);
    const Trajectory t = simulate(m, 20000, 8);
    const SmallSetConfig cfg = ar1_minorization(0.5, 1.0);
    const SplitPath sp = draw_split_indicators(t, estimate_transition_density(t, std::nullopt, cfg), cfg, 9);
    CHECK(sp.mode == SplitMode::Approximate);
    const BlockCollection bc = pseudo_blocks(sp);
    CHECK(std::abs(occupation_estimate(bc, StateSet::interval(-50.0, 0.0)) - 0.5) < 0.05);
}

TEST_CASE("exact splitting needs a density") {
    const ChainModel w = make_reflected_walk(-0.5, 1.0);
    const Trajectory t = simulate(w, 100, 1);
    CHECK_THROWS_KIND(draw_split_indicators(t, w, SmallSetConfig::uniform(1.0, 0.5), 1),
                      ErrorKind::Unsupported);
}

TEST_CASE("parameters above one are rejected") {
    const Trajectory t = path({0.0, 0.0, 0.0});
    const DensityFunction tiny = [](State, State) { return 0.01; };
    CHECK_THROWS_KIND(draw_split_indicators(t, tiny, SplitMode::Approximate,
                                            SmallSetConfig::uniform(1.0, 0.5), 1),
                      ErrorKind::InvalidParameter);
}

TEST_CASE("split CSV") {
    const Trajectory t = path({0.1, 2.0, 0.3});
    SplitPath sp{t.states, {1, 0}, {0.25, 0.5}, SmallSetConfig::uniform(1.0, 0.5)};
    std::ostringstream os;
    write_split_csv(os, sp);
    CHECK(os.str() == "i,x_i,in_S,bernoulli_param,y_i\n1,0.1,1,0.25,1\n2,2,0,0.5,0\n");
}

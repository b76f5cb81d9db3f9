#include "rbb/numerics.hpp"
#include "rbb/random.hpp"
#include "rbb/regeneration.hpp"

#include "support.hpp"

#include <sstream>

using namespace rbb;
using rbb::test::path;
using rbb::test::two_state;

namespace {

const StateSet zero = StateSet::singleton(0.0);

std::vector<State> concatenate(const BlockCollection& bc) {
    std::vector<State> out;
    auto add = [&](std::span<const State> s) { out.insert(out.end(), s.begin(), s.end()); };
    add(bc.states_of(bc.head()));
    for (std::size_t j = 0; j < bc.size(); ++j) add(bc.block_states(j));
    add(bc.states_of(bc.tail()));
    return out;
}

BlockCollection two_state_blocks(std::size_t n, std::uint64_t seed) {
    const Trajectory t = simulate(two_state(), n, seed);
    return decompose_blocks(t, find_regenerations(t, zero));
}

}  // namespace

TEST_CASE("regeneration times are read off the path") {
    CHECK(find_regenerations(path({0, 0, 0, 0, 0}), zero).times ==
          std::vector<std::size_t>{1, 2, 3, 4, 5});
    CHECK(find_regenerations(path({1, 1, 1}), zero).count() == 0);
    CHECK(find_regenerations(path({0, 1, 0, 0, 1}), zero).times ==
          std::vector<std::size_t>{1, 3, 4});
}

TEST_CASE("blocks between consecutive visits") {
    const Trajectory t = path({0, 1, 0, 0, 1});
    const BlockCollection bc = decompose_blocks(t, find_regenerations(t, zero));
    REQUIRE(bc.size() == 2);
    CHECK(std::vector<State>(bc.block_states(0).begin(), bc.block_states(0).end()) ==
          std::vector<State>{1, 0});
    CHECK(std::vector<State>(bc.block_states(1).begin(), bc.block_states(1).end()) ==
          std::vector<State>{0});
    CHECK(bc.blocks()[0].length == 2);
    CHECK(bc.blocks()[1].length == 1);
    CHECK(bc.interior_length() == 3);
    CHECK(bc.head().length == 1);
    CHECK(bc.tail().length == 1);
}

TEST_CASE("all-zero path gives unit blocks and an empty tail") {
    const Trajectory t = path({0, 0, 0, 0, 0});
    const BlockCollection bc = decompose_blocks(t, find_regenerations(t, zero));
    CHECK(bc.size() == 4);
    for (const Block& b : bc.blocks()) CHECK(b.length == 1);
    CHECK(bc.tail().length == 0);
    CHECK(bc.states_of(bc.tail()).empty());
}

TEST_CASE("one regeneration is not enough") {
    const Trajectory t = path({1, 0, 1});
    CHECK_THROWS_KIND(decompose_blocks(t, find_regenerations(t, zero)),
                      ErrorKind::InsufficientRegeneration);
}

TEST_CASE("head, blocks and tail reconstruct the trajectory") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Trajectory t = simulate(two_state(), 200 + seed, seed);
        const auto sched = find_regenerations(t, zero);
        if (sched.count() < 2) continue;
        const BlockCollection bc = decompose_blocks(t, sched);
        CHECK(concatenate(bc) == *t.states);
        CHECK(bc.interior_length() == sched.times.back() - sched.times.front());
        for (std::size_t j = 0; j < bc.size(); ++j) CHECK(zero.contains(bc.block_states(j).back()));
    }
}

TEST_CASE("occupation estimates") {
    const BlockCollection bc = two_state_blocks(100000, 21);
    CHECK(occupation_estimate(bc, StateSet::everything()) == 1.0);
    CHECK(occupation_estimate(bc, StateSet::nothing()) == 0.0);
    CHECK(std::abs(occupation_estimate(bc, StateSet::singleton(1.0)) - 1.0 / 3.0) < 0.01);
    // A partition: counts add up exactly, estimates to within rounding.
    const std::size_t c0 = occupation_count(bc, StateSet::singleton(0.0));
    const std::size_t c1 = occupation_count(bc, StateSet::singleton(1.0));
    CHECK(c0 + c1 == bc.interior_length());
    CHECK(occupation_estimate(bc, StateSet::singleton(0.0)) +
              occupation_estimate(bc, StateSet::singleton(1.0)) ==
          doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("regenerative mean") {
    const BlockCollection bc = two_state_blocks(100000, 22);
    CHECK(regen_mean(bc, [](State) { return 2.5; }) == 2.5);
    CHECK(regen_mean(bc, [](State) { return 0.1; }) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(std::abs(regen_mean(bc, test::indicator_one) - 1.0 / 3.0) < 0.01);

    const Trajectory single = path({0, 0});
    const BlockCollection one = decompose_blocks(single, find_regenerations(single, zero));
    REQUIRE(one.size() == 1);
    CHECK(regen_mean(one, [](State x) { return x; }) == 0.0);
}

TEST_CASE("regenerative variance") {
    const BlockCollection bc = two_state_blocks(10000, 23);
    CHECK(regen_variance(bc, [](State) { return 5.0; }) == 0.0);

    const Trajectory t = path({0, 1, 0, 1, 0});
    const BlockCollection equal = decompose_blocks(t, find_regenerations(t, zero));
    REQUIRE(equal.size() == 2);
    CHECK(regen_variance(equal, test::indicator_one) == 0.0);

    const Trajectory single = path({0, 0});
    const BlockCollection one = decompose_blocks(single, find_regenerations(single, zero));
    CHECK_THROWS_KIND(regen_variance(one, test::indicator_one), ErrorKind::InsufficientRegeneration);
}

TEST_CASE("block enumeration oracle for the two-state chain") {
    const auto m = test::block_moments({{0.5, 0.5}, {1.0, 0.0}}, 0, {0.0, 1.0});
    CHECK(m.mean_length == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(m.mean == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(m.sigma2 == doctest::Approx(2.0 / 27.0).epsilon(1e-14));
}

TEST_CASE("variance estimate is consistent at n = 10^6") {
    const BlockCollection bc = two_state_blocks(1000000, 24);
    const double s2 = regen_variance(bc, test::indicator_one);
    CHECK(std::abs(s2 - 2.0 / 27.0) < 0.01);
    CHECK(std::abs(s2 - 2.0 / 27.0) / (2.0 / 27.0) < 0.15);
}

TEST_CASE("Kac occupation estimates are consistent across seeds") {
    int good = 0;
    const int seeds = 200;
    for (int s = 0; s < seeds; ++s) {
        const BlockCollection bc = two_state_blocks(10000, derive_seed(99, streams::chain, s));
        const double est = occupation_estimate(bc, StateSet::singleton(1.0));
        const double sd = std::sqrt(regen_variance(bc, test::indicator_one));
        if (std::abs(est - 1.0 / 3.0) < 3.0 * sd / std::sqrt(static_cast<double>(bc.size()))) ++good;
    }
    CHECK(good >= 0.95 * seeds);
}

TEST_CASE("atomic block sums are uncorrelated") {
    int good = 0;
    const int seeds = 200;
    for (int s = 0; s < seeds; ++s) {
        const BlockCollection bc = two_state_blocks(10000, derive_seed(98, streams::chain, s));
        const BlockSums sums = block_sums(bc, test::indicator_one);
        const double r = lag1_autocorrelation(sums.sums);
        if (std::abs(r) < 3.0 / std::sqrt(static_cast<double>(sums.size()))) ++good;
    }
    CHECK(good >= 0.95 * seeds);
}

TEST_CASE("block CSV export") {
    const Trajectory t = path({0, 1, 0, 0, 1});
    const BlockCollection bc = decompose_blocks(t, find_regenerations(t, zero));
    std::ostringstream os;
    write_blocks_csv(os, bc, test::indicator_one);
    CHECK(os.str() == "block_index,start_time,length,f_sum\n1,2,2,1\n2,4,1,0\n");
}

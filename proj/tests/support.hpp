#pragma once

// Shared fixtures and independent oracles for the test programs. Nothing here
// calls into the library's own oracle code, so each check has a second route
// to the number it compares against.

#include "rbb/chain_models.hpp"
#include "rbb/errors.hpp"
#include "rbb/regeneration.hpp"

#include "doctest.h"

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace rbb::test {

/// P = [[0.5, 0.5], [1, 0]] with atom {0}: pi = (2/3, 1/3), E_A tau = 3/2.
inline ChainModel two_state(InitialLaw initial = InitialLaw::stationary()) {
    ChainModel m = make_finite_state({{0.5, 0.5}, {1.0, 0.0}}, initial);
    m.atom = StateSet::singleton(0.0);
    return m;
}

inline double indicator_one(State x) { return x == 1.0 ? 1.0 : 0.0; }

/// Solves a x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
        }
        std::swap(a[c], a[p]);
        std::swap(b[c], b[p]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double k = a[r][c] / a[c][c];
            for (std::size_t j = c; j < n; ++j) a[r][j] -= k * a[c][j];
            b[r] -= k * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
        x[i] = s / a[i][i];
    }
    return x;
}

/// Moments of one regeneration block of a finite chain started in `atom`,
/// from first-passage equations: E l, E f(B), and the asymptotic variance
/// E (f(B) - mu l)^2 / E l.
struct BlockMoments {
    double mean_length = 0.0;
    double mean = 0.0;  // E f(B) / E l
    double sigma2 = 0.0;
};

inline BlockMoments block_moments(const std::vector<std::vector<double>>& p, std::size_t atom,
                                  const std::vector<double>& f) {
    const std::size_t k = p.size();
    // Expected remaining sum of a per-step reward r over the steps X_1..X_tau
    // started from x, where tau is the first return to the atom (the reward at
    // the returning step is included).
    auto passage = [&](const std::vector<double>& r) {
        std::vector<std::vector<double>> a(k, std::vector<double>(k, 0.0));
        std::vector<double> b(k, 0.0);
        for (std::size_t x = 0; x < k; ++x) {
            a[x][x] = 1.0;
            for (std::size_t y = 0; y < k; ++y) {
                b[x] += p[x][y] * r[y];
                if (y != atom) a[x][y] -= p[x][y];
            }
        }
        return solve(a, b);
    };
    const std::vector<double> ones(k, 1.0);
    const double el = passage(ones)[atom];
    const double ef = passage(f)[atom];
    const double mu = ef / el;
    std::vector<double> g(k);
    for (std::size_t x = 0; x < k; ++x) g[x] = f[x] - mu;
    const std::vector<double> h = passage(g);  // H(x) = E_x sum g
    // Second moment G(x) = sum_y p(x,y) [g(y)^2 + 2 g(y) H'(y) + G'(y)], with
    // H' and G' zero once the atom is reached.
    std::vector<double> r(k);
    for (std::size_t y = 0; y < k; ++y) {
        const double hy = y == atom ? 0.0 : h[y];
        r[y] = g[y] * g[y] + 2.0 * g[y] * hy;
    }
    const double eg2 = passage(r)[atom];
    return BlockMoments{el, mu, eg2 / el};
}

inline Trajectory path(std::vector<State> xs) { return Trajectory::from_states(std::move(xs)); }

#define CHECK_THROWS_KIND(expr, expected_kind)                    \
    do {                                                          \
        bool rbb_test_thrown = false;                             \
        try {                                                     \
            (void)(expr);                                         \
        } catch (const ::rbb::Error& rbb_test_e) {                \
            rbb_test_thrown = true;                               \
            CHECK(rbb_test_e.kind() == (expected_kind));          \
        }                                                         \
        CHECK_MESSAGE(rbb_test_thrown, "expected an rbb::Error"); \
    } while (false)

}  // namespace rbb::test

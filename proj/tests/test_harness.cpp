#include "rbb/harness.hpp"
#include "rbb/numerics.hpp"
#include "rbb/random.hpp"

#include "support.hpp"
#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rbb;
using rbb::test::indicator_one;
using rbb::test::two_state;

namespace {

ExperimentConfig small_clt(std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.model = two_state();
    cfg.n_grid = {200, 400};
    cfg.chains = 40;
    cfg.replicates = 30;
    cfg.function = {"one", indicator_one};
    cfg.seed = seed;
    return cfg;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("KS distance examples") {
    const std::vector<double> a = {0.1, 0.5, 0.9};
    CHECK(ks_distance(a, a) == 0.0);
    CHECK(ks_distance(std::vector<double>{0.0}, std::vector<double>{1.0}) == 1.0);
    CHECK(ks_distance(std::vector<double>{0.0, 2.0}, std::vector<double>{1.0}) == 0.5);
    // Ties across samples are handled at the jump.
    CHECK(ks_distance(std::vector<double>{1.0, 1.0, 2.0}, std::vector<double>{1.0, 2.0, 2.0}) ==
          doctest::Approx(1.0 / 3.0));
    const auto uniform = [](double x) { return std::clamp(x, 0.0, 1.0); };
    CHECK(ks_distance(std::vector<double>{0.5}, uniform) == 0.5);
    CHECK(ks_distance(std::vector<double>{0.25, 0.75}, uniform) == doctest::Approx(0.25));
    CHECK_THROWS_KIND(ks_distance(std::vector<double>{}, a), ErrorKind::EmptyDistribution);
    CHECK_THROWS_KIND(ks_distance(std::vector<double>{}, uniform), ErrorKind::EmptyDistribution);

    const EmpiricalDistribution d({0.0, 1.0}, EmpiricalDistribution::Kind::Unstudentized);
    CHECK(ks_distance(d, d) == 0.0);
    CHECK(ks_critical_value_5pct(500, 500) == doctest::Approx(1.358 * std::sqrt(2.0 / 500.0)));
}

TEST_CASE("KS of normal draws against the normal CDF") {
    int small = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        Rng rng(derive_seed(77, streams::monte_carlo, s));
        std::vector<double> z(10000);
        for (double& v : z) v = rng.normal();
        std::sort(z.begin(), z.end());
        if (ks_distance(z, normal_cdf) < 0.02) ++small;
    }
    CHECK(small >= 99);
}

TEST_CASE("reference means and asymptotic variances") {
    CHECK(reference_mean(two_state(), indicator_one) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    const ChainModel ar = make_linear_ar(0.5);
    CHECK(std::abs(reference_mean(ar, [](State x) { return x; })) < 1e-12);
    CHECK(reference_mean(ar, [](State x) { return x * x; }) == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
    CHECK_FALSE(asymptotic_covariance(ar, {[](State x) { return x; }}).has_value());

    const auto oracle = test::block_moments({{0.5, 0.5}, {1.0, 0.0}}, 0, {0.0, 1.0});
    CHECK(*asymptotic_variance(two_state(), indicator_one) == doctest::Approx(oracle.sigma2).epsilon(1e-12));
    CHECK(*asymptotic_variance(two_state(), indicator_one) == doctest::Approx(2.0 / 27.0).epsilon(1e-12));
}

TEST_CASE("asymptotic covariance against block moments on a three-state chain") {
    const std::vector<std::vector<double>> p = {{0.2, 0.5, 0.3}, {0.6, 0.1, 0.3}, {0.3, 0.3, 0.4}};
    ChainModel m = make_finite_state(p);
    const std::vector<double> f = {1.0, -2.0, 0.5};
    const std::vector<double> g = {0.0, 3.0, 1.0};
    std::vector<double> fg(3);
    for (int i = 0; i < 3; ++i) fg[i] = f[i] + g[i];
    const auto as_fn = [](std::vector<double> v) {
        return StateFunction([v](State x) { return v[static_cast<std::size_t>(x)]; });
    };
    const auto cov = *asymptotic_covariance(m, {as_fn(f), as_fn(g)});
    for (std::size_t atom = 0; atom < 3; ++atom) {
        const double vf = test::block_moments(p, atom, f).sigma2;
        const double vg = test::block_moments(p, atom, g).sigma2;
        const double vfg = test::block_moments(p, atom, fg).sigma2;
        CHECK(cov[0][0] == doctest::Approx(vf).epsilon(1e-10));
        CHECK(cov[1][1] == doctest::Approx(vg).epsilon(1e-10));
        CHECK(cov[0][1] == doctest::Approx(0.5 * (vfg - vf - vg)).epsilon(1e-10));
    }
    CHECK(cov[0][1] == cov[1][0]);
}

TEST_CASE("configuration validation") {
    ExperimentConfig cfg = small_clt(1);
    CHECK_NOTHROW(cfg.validate());
    auto broken = [&](auto edit) {
        ExperimentConfig c = small_clt(1);
        edit(c);
        CHECK_THROWS_KIND(c.validate(), ErrorKind::InvalidConfig);
    };
    broken([](ExperimentConfig& c) { c.chains = 0; });
    broken([](ExperimentConfig& c) { c.replicates = 0; });
    broken([](ExperimentConfig& c) { c.n_grid = {}; });
    broken([](ExperimentConfig& c) { c.n_grid = {500, 500}; });
    broken([](ExperimentConfig& c) { c.n_grid = {500, 100}; });
    broken([](ExperimentConfig& c) { c.level = 1.0; });
    broken([](ExperimentConfig& c) { c.model.atom.reset(); });
    broken([](ExperimentConfig& c) { c.mode = ChainMode::ExactSplit; });
}

TEST_CASE("seed derivation") {
    const ChainSeeds a = chain_seeds(5, 0);
    const ChainSeeds b = chain_seeds(5, 1);
    CHECK(a.chain != b.chain);
    CHECK(a.chain != a.split);
    CHECK(a.split != a.bootstrap);
    CHECK(a.chain == derive_seed(5, streams::chain, 0));
    CHECK(monte_carlo_base(9, 0) != meta_base(9, 0));
    CHECK(monte_carlo_base(9, 0) != monte_carlo_base(9, 1));
}

TEST_CASE("single chain, single replicate smoke run") {
    ExperimentConfig cfg = small_clt(3);
    cfg.n_grid = {300};
    cfg.chains = 1;
    cfg.replicates = 1;
    const ExperimentReport r = run_clt_experiment(cfg);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].attempted == 1);
    // Two singletons: the distance is 0 or 1.
    const double d = r.rows[0].metric("delta");
    CHECK((d == 0.0 || d == 1.0));
    CHECK(std::isnan(r.rows[0].metric("no_such_metric")));
    CHECK(nlohmann::json::parse(r.to_json()).is_object());
}

TEST_CASE("reports are reproducible and independent of the worker count") {
    ::setenv("RBB_THREADS", "1", 1);
    const std::string one = run_clt_experiment(small_clt(4)).to_json(false);
    ::setenv("RBB_THREADS", "4", 1);
    const std::string four = run_clt_experiment(small_clt(4)).to_json(false);
    const std::string again = run_clt_experiment(small_clt(4)).to_json(false);
    ::unsetenv("RBB_THREADS");
    CHECK(one == four);
    CHECK(four == again);
    CHECK(one != run_clt_experiment(small_clt(5)).to_json(false));

    const auto j = nlohmann::json::parse(one);
    CHECK(j.at("experiment") == "clt");
    CHECK(j.at("seed") == 4);
    CHECK_FALSE(j.at("rows").at(0).contains("runtime_seconds"));
}

TEST_CASE("failed chains are counted and flag the report") {
    ExperimentConfig cfg = small_clt(6);
    cfg.n_grid = {3, 400};
    cfg.replicates = 10;
    const ExperimentReport r = run_clt_experiment(cfg);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[0].attempted == cfg.chains);
    CHECK(r.rows[0].failures > 0);
    CHECK(r.rows[0].failures == r.rows[0].metric("failed_insufficient_regeneration") +
                                    r.rows[0].metric("failed_empty_resample") +
                                    r.rows[0].metric("failed_zero_variance"));
    CHECK(r.rows[1].failures == 0);
    CHECK(r.flagged());
    CHECK(r.failure_rate() == doctest::Approx(static_cast<double>(r.rows[0].failures) / (2.0 * cfg.chains)));

    const ExperimentReport ok = run_clt_experiment(small_clt(6));
    CHECK_FALSE(ok.flagged());
}

TEST_CASE("report files") {
    const ExperimentReport r = run_clt_experiment(small_clt(7));
    const auto dir = std::filesystem::temp_directory_path() / "rbb_report_test";
    std::filesystem::remove_all(dir);
    write_report(r, dir);
    CHECK(std::filesystem::exists(dir / "report.json"));
    CHECK(std::filesystem::exists(dir / "clt_n200.csv"));
    CHECK(std::filesystem::exists(dir / "clt_n400.csv"));
    const std::string plot = slurp(dir / "plot.csv");
    CHECK(plot.rfind("n,failures", 0) == 0);
    CHECK(plot.find("\n200,") != std::string::npos);
    CHECK(plot.find("runtime") == std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("uniform and functional experiments run end to end") {
    ExperimentConfig cfg = small_clt(8);
    cfg.n_grid = {500};
    cfg.meta_replicates = 3;
    cfg.function_class = FunctionClass::half_line_indicators({-0.5, 0.25, 0.5, 0.75, 1.5});
    const ExperimentReport u = run_uniform_experiment(cfg);
    const double pass = u.rows[0].metric("pass_rate");
    CHECK(pass >= 0.0);
    CHECK(pass <= 1.0);
    CHECK(u.rows[0].metric("critical_value") == doctest::Approx(ks_critical_value_5pct(40, 30)));

    cfg.functional = SmoothFunctional::square({"one", indicator_one});
    const ExperimentReport f = run_functional_experiment(cfg);
    CHECK(f.rows[0].metric("coverage") >= 0.0);
    CHECK(f.rows[0].metric("coverage") <= 1.0);

    ExperimentConfig missing = small_clt(8);
    CHECK_THROWS_KIND(run_uniform_experiment(missing), ErrorKind::InvalidConfig);
    CHECK_THROWS_KIND(run_functional_experiment(missing), ErrorKind::InvalidConfig);
}

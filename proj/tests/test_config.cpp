#include "rbb/config.hpp"
#include "rbb/numerics.hpp"

#include "support.hpp"

#include <filesystem>
#include <fstream>

using namespace rbb;

namespace {

RunConfig parse(const std::string& s) { return parse_config(s); }

void rejects(const std::string& s) { CHECK_THROWS_KIND(parse_config(s), ErrorKind::InvalidConfig); }

}  // namespace

TEST_CASE("finite-state configuration") {
    const RunConfig c = parse(R"({
        "model": {"kind": "finite_state", "matrix": [[0.5, 0.5], [1, 0]], "atom": [0]},
        "n": 5000, "seed": 42,
        "statistic": {"function": {"type": "indicator", "values": [1]}},
        "bootstrap": {"replicates": 200, "level": 0.95, "studentization": "bootstrap"}
    })");
    CHECK(c.n == 5000);
    CHECK(c.seed == 42);
    CHECK(c.mode == ChainMode::Atomic);
    CHECK(c.model.atom->contains(0.0));
    CHECK(c.function.f(1.0) == 1.0);
    CHECK(c.function.f(0.0) == 0.0);
    CHECK(c.replicates == 200);
    CHECK(c.level == 0.95);
    CHECK(c.studentization == Studentization::Bootstrap);
    CHECK(c.experiment.n_grid == std::vector<std::size_t>{5000});
    CHECK(c.experiment.seed == 42);
    CHECK_FALSE(c.experiment.sigma2.has_value());
}

TEST_CASE("linear AR configuration") {
    const RunConfig c = parse(R"({
        "model": {"kind": "linear_ar", "rho": 0.5, "small_set": {"half_width": 1.0}},
        "mode": "approx_split", "bandwidth": "auto"
    })");
    CHECK(c.mode == ChainMode::ApproxSplit);
    CHECK_FALSE(c.bandwidth.has_value());
    REQUIRE(c.model.small_set.has_value());
    CHECK(c.model.small_set->delta() ==
          doctest::Approx(2.0 * (normal_cdf(1.5) - normal_cdf(0.5))).epsilon(1e-8));
    // Identity on an AR(1): sigma^2 = v (1 + rho) / (1 - rho) = 4.
    CHECK(*c.experiment.sigma2 == doctest::Approx(4.0));
    CHECK(c.function.name == "identity");

    const RunConfig d = parse(R"({
        "model": {"kind": "linear_ar", "rho": 0.5, "small_set": {"half_width": 1.0}},
        "bandwidth": 0.3})");
    CHECK(d.mode == ChainMode::ExactSplit);
    CHECK(*d.bandwidth == 0.3);

    const RunConfig u = parse(R"({
        "model": {"kind": "linear_ar", "rho": 0.0,
                  "small_set": {"half_width": 1.0, "construction": "uniform", "delta": 0.3}}})");
    CHECK(u.model.small_set->delta() == 0.3);
}

TEST_CASE("experiment section") {
    const RunConfig c = parse(R"({
        "model": {"kind": "finite_state", "matrix": [[0.5, 0.5], [1, 0]],
                  "atom": {"interval": [-0.5, 0.5]}, "initial_law": {"type": "point", "value": 1}},
        "experiment": {"n_grid": [500, 5000], "chains": 100, "replicates": 50,
                       "meta_replicates": 10, "level": 0.8,
                       "class": {"type": "half_line_indicators", "thresholds": [0.5, 1.5]},
                       "functional": {"type": "square", "functions": [{"type": "indicator", "values": [1]}]},
                       "reference": 0.25, "sigma2": 0.5}
    })");
    const ExperimentConfig& e = c.experiment;
    CHECK(e.n_grid == std::vector<std::size_t>{500, 5000});
    CHECK(e.chains == 100);
    CHECK(e.replicates == 50);
    CHECK(e.meta_replicates == 10);
    CHECK(e.level == 0.8);
    CHECK(e.function_class->size() == 2);
    CHECK(e.functional->name() == "square(indicator{1})");
    CHECK(*e.reference == 0.25);
    CHECK(*e.sigma2 == 0.5);
    CHECK_NOTHROW(e.validate());
}

TEST_CASE("function and class kinds") {
    const std::string model = R"("model": {"kind": "linear_ar", "rho": 0.2})";
    CHECK(parse("{" + model + R"(, "statistic": {"function": {"type": "half_line", "threshold": 0.5}}})")
              .function.f(0.5) == 1.0);
    CHECK(parse("{" + model + R"(, "statistic": {"function": {"type": "power", "exponent": 2}}})")
              .function.f(3.0) == 9.0);
    CHECK(parse("{" + model + R"(, "statistic": {"function": {"type": "constant", "value": 2}}})")
              .function.f(-7.0) == 2.0);
    const RunConfig smooth =
        parse("{" + model + R"(, "experiment": {"class": {"type": "scaled_smooth", "params": [0.5, 1]}}})");
    CHECK(smooth.experiment.function_class->kind() == FunctionClass::Kind::ScaledSmooth);
    const RunConfig list = parse("{" + model + R"(, "experiment": {"class": {"type": "finite_list",
        "functions": [{"type": "identity"}, {"type": "constant", "value": -3}]}}})");
    CHECK(list.experiment.function_class->envelope()(1.0) == 3.0);
    CHECK(list.experiment.function_class->envelope()(-5.0) == 5.0);
    // A non-identity function leaves sigma2 to the oracle.
    CHECK_FALSE(parse("{" + model + R"(, "statistic": {"function": {"type": "power", "exponent": 2}}})")
                    .experiment.sigma2.has_value());
}

TEST_CASE("malformed configurations") {
    rejects("not json");
    rejects("[1, 2]");
    rejects("{}");
    rejects(R"({"model": {"kind": "banana"}})");
    rejects(R"({"model": {"kind": "finite_state", "matrix": [[0.5, 0.6], [1, 0]]}})");
    rejects(R"({"model": {"kind": "linear_ar", "rho": 1.5}})");
    rejects(R"({"model": {"kind": "linear_ar", "rho": "half"}})");
    rejects(R"({"model": {"kind": "linear_ar", "rho": 0.5}, "n": 1})");
    rejects(R"({"model": {"kind": "linear_ar", "rho": 0.5}, "mode": "magic"})");
    rejects(R"({"model": {"kind": "linear_ar", "rho": 0.5}, "bandwidth": -1})");
    rejects(R"({"model": {"kind": "linear_ar", "rho": 0.5}, "bandwidth": "wide"})");
    rejects(R"({"model": {"kind": "linear_ar", "rho": 0.5}, "seed": -3})");
    rejects(R"({"model": {"kind": "linear_ar", "rho": 0.5}, "bootstrap": {"level": 1.2}})");
    rejects(R"({"model": {"kind": "linear_ar", "rho": 0.5}, "bootstrap": {"studentization": "x"}})");
    rejects(R"({"model": {"kind": "finite_state", "matrix": [[1]], "small_set": {"half_width": 1}}})");
    rejects(R"({"model": {"kind": "linear_ar", "rho": 0.5, "small_set": {"half_width": 12}}})");
    rejects(R"({"model": {"kind": "linear_ar", "rho": 0.5},
                "statistic": {"function": {"type": "nope"}}})");
    rejects(R"({"model": {"kind": "linear_ar", "rho": 0.5},
                "experiment": {"class": {"type": "scaled_smooth", "params": [-1]}}})");
    rejects(R"({"model": {"kind": "linear_ar", "rho": 0.5},
                "experiment": {"functional": {"type": "difference", "functions": [{"type": "identity"}]}}})");
    CHECK_THROWS_KIND(load_config("/nonexistent/config.json"), ErrorKind::InvalidConfig);
}

TEST_CASE("loading from a file") {
    const auto path = std::filesystem::temp_directory_path() / "rbb_config_test.json";
    {
        std::ofstream out(path);
        out << R"({"model": {"kind": "reflected_walk", "step_mean": -0.5, "step_sd": 1, "atom": [0]}, "n": 300})";
    }
    const RunConfig c = load_config(path);
    CHECK(c.n == 300);
    CHECK(std::holds_alternative<ReflectedWalk>(c.model.kind));
    std::filesystem::remove(path);
}

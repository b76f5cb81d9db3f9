#include "rbb/config.hpp"

#include "rbb/errors.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace rbb {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); }

const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) bad(where + ": missing \"" + key + "\"");
    return j.at(key);
}

double number(const json& j, const std::string& what) {
    if (!j.is_number()) bad(what + " must be a number");
    return j.get<double>();
}

double number_or(const json& j, const char* key, double fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    return number(j.at(key), where + "." + key);
}

std::size_t count(const json& j, const std::string& what) {
    if (!j.is_number_integer() || j.get<long long>() < 0) bad(what + " must be a nonnegative integer");
    return j.get<std::size_t>();
}

std::string text(const json& j, const std::string& what) {
    if (!j.is_string()) bad(what + " must be a string");
    return j.get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& what) {
    if (!j.is_array()) bad(what + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) out.push_back(number(v, what));
    return out;
}

InitialLaw parse_initial(const json& j) {
    const std::string type = text(require(j, "type", "initial_law"), "initial_law.type");
    if (type == "point") return InitialLaw::point(number(require(j, "value", "initial_law"), "value"));
    if (type == "normal") {
        return InitialLaw::normal(number_or(j, "mean", 0.0, "initial_law"),
                                  number_or(j, "sd", 1.0, "initial_law"));
    }
    if (type == "discrete") return InitialLaw::discrete(numbers(require(j, "probs", "initial_law"), "probs"));
    if (type == "stationary") return InitialLaw::stationary();
    bad("unknown initial_law.type \"" + type + "\"");
}

StateSet parse_set(const json& j, const std::string& where) {
    if (j.is_array()) return StateSet::values(numbers(j, where));
    if (j.is_object() && j.contains("interval")) {
        const auto iv = numbers(j.at("interval"), where + ".interval");
        if (iv.size() != 2) bad(where + ".interval needs two numbers");
        return StateSet::interval(iv[0], iv[1]);
    }
    bad(where + " must be an array of states or {\"interval\": [lo, hi]}");
}

ChainModel parse_model(const json& j) {
    const std::string kind = text(require(j, "kind", "model"), "model.kind");
    std::optional<InitialLaw> initial;
    if (j.contains("initial_law")) initial = parse_initial(j.at("initial_law"));

    ChainModel model;
    if (kind == "finite_state") {
        const json& m = require(j, "matrix", "model");
        if (!m.is_array()) bad("model.matrix must be an array of rows");
        std::vector<std::vector<double>> rows;
        for (const auto& r : m) rows.push_back(numbers(r, "model.matrix row"));
        model = make_finite_state(std::move(rows), initial.value_or(InitialLaw::stationary()));
    } else if (kind == "linear_ar") {
        model = make_linear_ar(number(require(j, "rho", "model"), "model.rho"),
                               number_or(j, "noise_sd", 1.0, "model"),
                               initial.value_or(InitialLaw::stationary()));
    } else if (kind == "reflected_walk") {
        model = make_reflected_walk(number_or(j, "step_mean", -0.5, "model"),
                                    number_or(j, "step_sd", 1.0, "model"),
                                    initial.value_or(InitialLaw::point(0.0)));
    } else {
        bad("unknown model.kind \"" + kind + "\"");
    }

    if (j.contains("atom")) model.atom = parse_set(j.at("atom"), "model.atom");
    if (j.contains("small_set")) {
        const json& s = j.at("small_set");
        const double half = number(require(s, "half_width", "small_set"), "small_set.half_width");
        const std::string how =
            s.contains("construction") ? text(s.at("construction"), "small_set.construction") : "ar1";
        try {
            if (how == "ar1") {
                const auto* ar = std::get_if<LinearAR>(&model.kind);
                if (!ar) bad("small_set construction \"ar1\" needs a linear_ar model");
                model.small_set = ar1_minorization(ar->rho, half, ar->noise_sd);
            } else if (how == "uniform") {
                model.small_set = SmallSetConfig::uniform(
                    half, number(require(s, "delta", "small_set"), "small_set.delta"));
            } else {
                bad("unknown small_set.construction \"" + how + "\"");
            }
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::InvalidConfig) throw;
            bad(std::string("small_set: ") + e.what());
        }
    }
    try {
        model.validate();
    } catch (const Error& e) {
        bad(std::string("model: ") + e.what());
    }
    return model;
}

struct ParsedFunction {
    NamedFunction fn;
    bool identity = false;
};

std::string format_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

ParsedFunction parse_function(const json& j) {
    const std::string type = text(require(j, "type", "function"), "function.type");
    if (type == "identity") return {{"identity", [](State x) { return x; }}, true};
    if (type == "indicator") {
        const StateSet set = j.contains("set") ? parse_set(j.at("set"), "function.set")
                                               : parse_set(require(j, "values", "function"),
                                                           "function.values");
        return {{"indicator" + set.describe(),
                 [set](State x) { return set.contains(x) ? 1.0 : 0.0; }}};
    }
    if (type == "half_line") {
        const double t = number(require(j, "threshold", "function"), "function.threshold");
        return {{"le_" + format_number(t), [t](State x) { return x <= t ? 1.0 : 0.0; }}};
    }
    if (type == "power") {
        const double p = number(require(j, "exponent", "function"), "function.exponent");
        return {{"power_" + format_number(p), [p](State x) { return std::pow(x, p); }}};
    }
    if (type == "constant") {
        const double c = number(require(j, "value", "function"), "function.value");
        return {{"constant_" + format_number(c), [c](State) { return c; }}};
    }
    bad("unknown function.type \"" + type + "\"");
}

FunctionClass parse_class(const json& j) {
    const std::string type = text(require(j, "type", "class"), "class.type");
    if (type == "half_line_indicators") {
        return FunctionClass::half_line_indicators(numbers(require(j, "thresholds", "class"), "class.thresholds"));
    }
    if (type == "scaled_smooth") {
        try {
            return FunctionClass::scaled_smooth(numbers(require(j, "params", "class"), "class.params"));
        } catch (const Error& e) {
            bad(std::string("class: ") + e.what());
        }
    }
    if (type == "finite_list") {
        const json& fs = require(j, "functions", "class");
        if (!fs.is_array() || fs.empty()) bad("class.functions must be a nonempty array");
        std::vector<NamedFunction> members;
        for (const auto& f : fs) members.push_back(parse_function(f).fn);
        std::optional<double> bound;
        if (j.contains("bound")) bound = number(j.at("bound"), "class.bound");
        StateFunction envelope;
        if (j.contains("envelope")) {
            envelope = parse_function(j.at("envelope")).fn.f;
        } else {
            // Pointwise max of the members.
            envelope = [members](State x) {
                double m = 0.0;
                for (const auto& f : members) m = std::max(m, std::abs(f.f(x)));
                return m;
            };
        }
        return FunctionClass::finite_list(std::move(members), std::move(envelope), bound);
    }
    bad("unknown class.type \"" + type + "\"");
}

SmoothFunctional parse_functional(const json& j) {
    const std::string type = text(require(j, "type", "functional"), "functional.type");
    const json& fs = require(j, "functions", "functional");
    if (!fs.is_array() || fs.empty()) bad("functional.functions must be a nonempty array");
    std::vector<NamedFunction> inner;
    for (const auto& f : fs) inner.push_back(parse_function(f).fn);
    auto arity = [&](std::size_t k) {
        if (inner.size() != k) {
            bad("functional \"" + type + "\" takes " + std::to_string(k) + " function(s)");
        }
    };
    if (type == "identity") {
        arity(1);
        return SmoothFunctional::identity(inner[0]);
    }
    if (type == "square") {
        arity(1);
        return SmoothFunctional::square(inner[0]);
    }
    if (type == "difference") {
        arity(2);
        return SmoothFunctional::difference(inner[0], inner[1]);
    }
    if (type == "constant") {
        arity(1);
        return SmoothFunctional::constant(inner[0], number(require(j, "value", "functional"), "functional.value"));
    }
    bad("unknown functional.type \"" + type + "\"");
}

ChainMode parse_mode(const std::string& s) {
    if (s == "atomic") return ChainMode::Atomic;
    if (s == "exact_split") return ChainMode::ExactSplit;
    if (s == "approx_split") return ChainMode::ApproxSplit;
    bad("unknown mode \"" + s + "\"");
}

Studentization parse_studentization(const std::string& s) {
    if (s == "none") return Studentization::None;
    if (s == "original") return Studentization::Original;
    if (s == "bootstrap") return Studentization::Bootstrap;
    bad("unknown studentization \"" + s + "\"");
}

std::optional<double> parse_bandwidth(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "auto") return std::nullopt;
        bad("bandwidth must be \"auto\" or a positive number");
    }
    const double h = number(j, "bandwidth");
    if (!(h > 0.0)) bad("bandwidth must be positive");
    return h;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        bad(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) bad("configuration must be a JSON object");

    RunConfig cfg;
    cfg.model = parse_model(require(j, "model", "config"));
    if (j.contains("n")) cfg.n = count(j.at("n"), "n");
    if (cfg.n < 2) bad("n must be at least 2");
    cfg.mode = j.contains("mode") ? parse_mode(text(j.at("mode"), "mode"))
                                  : (cfg.model.atom ? ChainMode::Atomic : ChainMode::ExactSplit);
    if (j.contains("bandwidth")) cfg.bandwidth = parse_bandwidth(j.at("bandwidth"));
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) bad("seed must be a nonnegative integer");
        cfg.seed = j.at("seed").get<std::uint64_t>();
    }

    bool identity = true;
    if (j.contains("statistic")) {
        const json& st = j.at("statistic");
        if (st.contains("function")) {
            ParsedFunction pf = parse_function(st.at("function"));
            cfg.function = std::move(pf.fn);
            identity = pf.identity;
        }
    }
    if (!cfg.function.f) cfg.function = NamedFunction{"identity", [](State x) { return x; }};

    if (j.contains("bootstrap")) {
        const json& b = j.at("bootstrap");
        if (b.contains("replicates")) cfg.replicates = count(b.at("replicates"), "bootstrap.replicates");
        cfg.level = number_or(b, "level", cfg.level, "bootstrap");
        if (b.contains("studentization")) {
            cfg.studentization = parse_studentization(text(b.at("studentization"), "bootstrap.studentization"));
        }
    }
    if (cfg.replicates == 0) bad("bootstrap.replicates must be positive");
    if (!(cfg.level > 0.0 && cfg.level < 1.0)) bad("bootstrap.level must lie in (0,1)");

    ExperimentConfig& e = cfg.experiment;
    e.model = cfg.model;
    e.mode = cfg.mode;
    e.bandwidth = cfg.bandwidth;
    e.function = cfg.function;
    e.seed = cfg.seed;
    e.level = cfg.level;
    e.n_grid = {cfg.n};
    if (j.contains("experiment")) {
        const json& x = j.at("experiment");
        if (x.contains("n_grid")) {
            e.n_grid.clear();
            if (!x.at("n_grid").is_array()) bad("experiment.n_grid must be an array");
            for (const auto& v : x.at("n_grid")) e.n_grid.push_back(count(v, "experiment.n_grid"));
        }
        if (x.contains("chains")) e.chains = count(x.at("chains"), "experiment.chains");
        if (x.contains("replicates")) e.replicates = count(x.at("replicates"), "experiment.replicates");
        if (x.contains("meta_replicates")) {
            e.meta_replicates = count(x.at("meta_replicates"), "experiment.meta_replicates");
        }
        e.level = number_or(x, "level", e.level, "experiment");
        if (x.contains("class")) e.function_class = parse_class(x.at("class"));
        if (x.contains("functional")) e.functional = parse_functional(x.at("functional"));
        if (x.contains("reference")) e.reference = number(x.at("reference"), "experiment.reference");
        if (x.contains("sigma2")) e.sigma2 = number(x.at("sigma2"), "experiment.sigma2");
    }
    // LinearAR with f(x) = x has the closed form v (1 + rho) / (1 - rho).
    if (!e.sigma2 && identity) {
        if (const auto* ar = std::get_if<LinearAR>(&cfg.model.kind)) {
            e.sigma2 = ar1_stationary_variance(*ar) * (1.0 + ar->rho) / (1.0 - ar->rho);
        }
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) bad("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace rbb

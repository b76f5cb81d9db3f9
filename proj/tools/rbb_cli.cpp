// Command-line front end: simulate, split, bootstrap and the Monte Carlo
// experiments, all driven by one JSON config.

#include "rbb/arbb.hpp"
#include "rbb/config.hpp"
#include "rbb/density_estimation.hpp"
#include "rbb/errors.hpp"
#include "rbb/frechet.hpp"
#include "rbb/harness.hpp"
#include "rbb/random.hpp"
#include "rbb/regeneration.hpp"
#include "rbb/splitting.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
};

rbb::RunConfig load(const Options& opt) {
    rbb::RunConfig cfg = rbb::load_config(opt.config);
    if (opt.seed) {
        cfg.seed = *opt.seed;
        cfg.experiment.seed = *opt.seed;
    }
    return cfg;
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream out(dir / name);
    if (!out) {
        throw rbb::Error(rbb::ErrorKind::InvalidConfig, "cannot write " + (dir / name).string());
    }
    return out;
}

rbb::Trajectory simulate_from(const rbb::RunConfig& cfg) {
    return rbb::simulate(cfg.model, cfg.n, rbb::derive_seed(cfg.seed, rbb::streams::chain, 0));
}

std::uint64_t split_seed(const rbb::RunConfig& cfg) {
    return rbb::derive_seed(cfg.seed, rbb::streams::split, 0);
}

int run_simulate(const Options& opt) {
    const rbb::RunConfig cfg = load(opt);
    const rbb::Trajectory traj = simulate_from(cfg);
    auto out = open_out(opt.out, "trajectory.csv");
    out << "i,x_i\n";
    out.precision(17);
    for (std::size_t i = 1; i <= traj.n() + 1; ++i) out << i << ',' << traj.at(i) << '\n';
    std::size_t regenerations = 0;
    if (cfg.model.atom) {
        const auto sched = rbb::find_regenerations(traj, *cfg.model.atom);
        regenerations = sched.count();
        if (sched.count() >= 2) {
            auto blocks = open_out(opt.out, "blocks.csv");
            rbb::write_blocks_csv(blocks, rbb::decompose_blocks(traj, sched), cfg.function.f);
        }
    }
    std::cout << "simulated " << cfg.model.name() << " n=" << traj.n();
    if (cfg.model.atom) std::cout << " atom visits=" << regenerations;
    std::cout << '\n';
    return 0;
}

int run_split(const Options& opt) {
    const rbb::RunConfig cfg = load(opt);
    if (!cfg.model.small_set) {
        throw rbb::Error(rbb::ErrorKind::InvalidConfig, "split needs model.small_set");
    }
    const rbb::SmallSetConfig& ss = *cfg.model.small_set;
    const rbb::Trajectory traj = simulate_from(cfg);
    rbb::SplitPath sp = [&] {
        if (cfg.mode == rbb::ChainMode::ApproxSplit) {
            const auto est = rbb::estimate_transition_density(traj, cfg.bandwidth, ss);
            auto grid_out = open_out(opt.out, "density_grid.csv");
            rbb::write_density_grid_csv(
                grid_out, est, cfg.model,
                rbb::square_grid(-ss.half_width(), ss.half_width(), 21));
            return rbb::draw_split_indicators(traj, est, ss, split_seed(cfg));
        }
        return rbb::draw_split_indicators(traj, cfg.model, ss, split_seed(cfg));
    }();
    auto out = open_out(opt.out, "split.csv");
    rbb::write_split_csv(out, sp);
    std::cout << "split " << cfg.model.name() << " n=" << sp.n()
              << " regenerations=" << sp.regeneration_count() << '\n';
    if (sp.regeneration_count() >= 2) {
        auto blocks = open_out(opt.out, "blocks.csv");
        rbb::write_blocks_csv(blocks, rbb::pseudo_blocks(sp), cfg.function.f);
    }
    return 0;
}

int run_bootstrap(const Options& opt) {
    const rbb::RunConfig cfg = load(opt);
    const rbb::Trajectory traj = simulate_from(cfg);
    const rbb::BlockCollection bc = rbb::experiment_blocks(cfg.experiment, traj, split_seed(cfg));
    const rbb::BlockSums sums = rbb::block_sums(bc, cfg.function.f);
    const double mu_hat = rbb::regen_mean(sums);
    const double sigma_hat = std::sqrt(rbb::regen_variance(sums));
    const auto dist =
        rbb::arbb_distribution(sums, cfg.replicates, cfg.n, cfg.studentization,
                               rbb::derive_seed(cfg.seed, rbb::streams::bootstrap, 0));
    const double scale = cfg.studentization == rbb::Studentization::None ? 1.0 : sigma_hat;
    const rbb::Interval ci = rbb::confidence_interval(dist, cfg.level, mu_hat, scale,
                                                      static_cast<double>(sums.total_length));
    {
        auto out = open_out(opt.out, "distribution.csv");
        rbb::write_distribution_csv(out, dist);
    }
    const std::string record =
        rbb::ci_record_json(cfg.function.name, cfg.level, ci, cfg.n, cfg.replicates, cfg.seed);
    {
        auto out = open_out(opt.out, "ci.json");
        out << record << '\n';
    }
    std::cout << record << '\n';

    if (cfg.experiment.functional) {
        const rbb::SmoothFunctional& t = *cfg.experiment.functional;
        const auto fb = rbb::bootstrap_functional_distribution(
            t, bc, cfg.replicates, cfg.n, rbb::derive_seed(cfg.seed, rbb::streams::bootstrap, 1));
        const double value = rbb::functional_value(t, bc);
        const rbb::Interval fci = rbb::confidence_interval(
            fb.distribution, cfg.level, value, 1.0, static_cast<double>(bc.interior_length()));
        const std::string frecord =
            rbb::functional_record_json(t, value, cfg.level, fci, cfg.replicates);
        auto out = open_out(opt.out, "functional.json");
        out << frecord << '\n';
        std::cout << frecord << '\n';
    }
    return 0;
}

int run_experiment(const Options& opt, const std::string& which) {
    const rbb::RunConfig cfg = load(opt);
    rbb::ExperimentReport report;
    if (which == "clt") {
        report = rbb::run_clt_experiment(cfg.experiment);
    } else if (which == "uniform") {
        report = rbb::run_uniform_experiment(cfg.experiment);
    } else {
        report = rbb::run_functional_experiment(cfg.experiment);
    }
    rbb::write_report(report, opt.out);
    for (const auto& row : report.rows) {
        std::cout << "n=" << row.n;
        for (const auto& [k, v] : row.metrics) std::cout << ' ' << k << '=' << v;
        std::cout << '\n';
    }
    for (const auto& f : report.flags) std::cerr << "flagged: " << f << '\n';
    return report.flagged() ? 2 : 0;
}

void add_common(CLI::App* cmd, Options& opt) {
    cmd->add_option("--config", opt.config, "JSON configuration file")->required();
    cmd->add_option("--seed", opt.seed, "Master seed (overrides the config)");
    cmd->add_option("--out", opt.out, "Output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regenerative block bootstrap for Markov chains"};
    app.require_subcommand(1);

    Options opt;
    auto* simulate = app.add_subcommand("simulate", "Simulate a chain and write trajectory.csv");
    add_common(simulate, opt);
    auto* split = app.add_subcommand("split", "Nummelin splitting; writes split.csv and blocks.csv");
    add_common(split, opt);
    auto* bootstrap = app.add_subcommand("bootstrap", "ARBB distribution and confidence interval");
    add_common(bootstrap, opt);
    auto* experiment = app.add_subcommand("experiment", "Monte Carlo validation experiments");
    experiment->require_subcommand(1);
    std::string which;
    for (const char* name : {"clt", "uniform", "functional"}) {
        auto* sub = experiment->add_subcommand(name, std::string(name) + " experiment");
        add_common(sub, opt);
        sub->callback([&which, name] { which = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*simulate) return run_simulate(opt);
        if (*split) return run_split(opt);
        if (*bootstrap) return run_bootstrap(opt);
        return run_experiment(opt, which);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

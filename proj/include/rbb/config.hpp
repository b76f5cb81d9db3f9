#pragma once

#include "rbb/arbb.hpp"
#include "rbb/chain_models.hpp"
#include "rbb/empirical_process.hpp"
#include "rbb/frechet.hpp"
#include "rbb/harness.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace rbb {

/// Everything the command-line tool reads from one JSON document. The schema
/// is described in docs/config.md. Malformed or inconsistent input raises
/// Error(InvalidConfig).
struct RunConfig {
    ChainModel model;
    std::size_t n = 1000;
    ChainMode mode = ChainMode::Atomic;
    std::optional<double> bandwidth;
    NamedFunction function;
    std::size_t replicates = 999;
    double level = 0.9;
    Studentization studentization = Studentization::Original;
    std::uint64_t seed = 0;
    ExperimentConfig experiment;
};

[[nodiscard]] RunConfig parse_config(const std::string& json_text);
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);

}  // namespace rbb

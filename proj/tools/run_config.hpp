#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sagnac/phase_model.hpp"
#include "sagnac/simulator.hpp"

namespace sagnac::cli {

/// Everything a reproducible run needs. Every field is validated against its
/// module invariants on load; unknown keys are rejected by full path.
struct RunConfig {
    InstrumentConfig instrument;
    PhysicalConstants constants;
    EnvironmentState environment;
    Schedule schedule;
    NoiseSpec noise;
    SystematicsModels models;
    std::vector<AuxChannelSpec> aux_channels;
    std::uint64_t seed = 0;
};

RunConfig parse_run_config(const nlohmann::json& root);
RunConfig load_run_config(const std::filesystem::path& path);

} // namespace sagnac::cli

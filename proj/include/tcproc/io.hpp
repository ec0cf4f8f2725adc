#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcproc/core_model.hpp"
#include "tcproc/procedure.hpp"
#include "tcproc/stochvol.hpp"

namespace tcproc {

using json = nlohmann::json;

/// Fully resolved problem definition: either parsed from a JSON document or
/// produced by a named preset.
struct ProblemConfig {
    std::string name = "custom";
    DiffusionSpec diffusion;
    ControlSetSpec control_set;
    PenaltySpec penalty;
    PayoffSpec payoff;
    GridSpec grid;
    Vec start;
    std::optional<MarketSpec> market;
    json source;  // canonical document for hashing/reproduction
};

/// Parses a config document; throws ConfigError naming the offending field path.
ProblemConfig load_config(const json& doc);
ProblemConfig load_config_file(const std::filesystem::path& path);

/// Named presets shipped with the library.
ProblemConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Fixed 17-significant-digit decimal formatting for reproducible diffs.
std::string format_value(double v);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

void write_value_field_csv(const std::filesystem::path& path, const ValueField& vf);

std::uint64_t fnv1a_hash(const std::string& data);
std::uint64_t hash_file(const std::filesystem::path& path);

struct ExperimentManifest {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string preset_name;
    std::string version = "0.1.0";
    std::vector<std::string> outputs;
    double wall_seconds = 0.0;
};

void write_manifest(const std::filesystem::path& path, const ExperimentManifest& m);

}  // namespace tcproc

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "meerts/harness.hpp"

namespace meerts::io {

enum class OutputFormat { csv, json };

std::string_view output_format_name(OutputFormat f);
std::optional<OutputFormat> parse_output_format(std::string_view name);

struct SweepSpec {
    SweepParameter parameter = SweepParameter::sigma;
    std::vector<double> values;
    /// Scenarios swept in turn; empty means the config's own scenario.
    std::vector<ScenarioSpec> scenarios;
};

/// A fully resolved experiment. Everything needed to reproduce a run is here.
struct ExperimentConfig {
    ScenarioSpec scenario;
    std::vector<Algorithm> algorithms;
    MeeConfig mee;
    std::uint64_t seed = 1;
    std::string output_dir = "results";
    OutputFormat format = OutputFormat::csv;
    bool timing = false;
    std::optional<SweepSpec> sweep;
};

/// Algorithms run when the config does not list any.
std::vector<Algorithm> default_algorithms(const ScenarioSpec& spec);

/**
 * Parses a config document (YAML; JSON manifests are accepted as well).
 * Errors are ConfigError with a "source:line:column: field: message" prefix.
 */
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Resolved config in the config schema, with the scenario written inline.
/// Feeding it back to parse_config reproduces the same ExperimentConfig.
nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);

nlohmann::ordered_json scenario_to_json(const ScenarioSpec& spec);
nlohmann::ordered_json noise_to_json(const NoiseSpec& spec);

}  // namespace meerts::io

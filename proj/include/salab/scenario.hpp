#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "salab/config.hpp"

namespace salab {

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ScenarioResult {
    std::vector<std::vector<SaRun>> runs; // [variant][replica]
    std::vector<Check> checks;
    std::vector<std::string> warnings;
    nlohmann::json summary;
    bool ok = true;

    bool all_pass() const;
};

/// Runs every replica of every variant (replicas in a worker pool, one RNG
/// stream each), executes the requested analysis passes, and when
/// `write_files` is set emits trajectory CSVs, per-pass CSVs and summary.json
/// under config.output. Deterministic given the master seed.
ScenarioResult run_scenario(const ExperimentConfig& config, bool write_files = true);

/// Shipped scenario names with one-line descriptions.
std::vector<std::pair<std::string, std::string>> list_presets();

/// Parsed config of a shipped preset; throws UnknownPreset.
ExperimentConfig preset_config(const std::string& name);
/// Raw JSON text of a shipped preset.
std::string preset_text(const std::string& name);

} // namespace salab

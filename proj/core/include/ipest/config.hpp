#pragma once

#include <string>

#include "ipest/harness.hpp"

namespace ipest {

/// Parses the JSON experiment schema documented in docs/config.md. Unknown
/// keys are rejected so that typos do not silently fall back to defaults.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

/// Canonical JSON form of a config (all defaults filled in).
std::string experiment_config_to_json(const ExperimentConfig& config);

}  // namespace ipest

#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "lsf/sim.hpp"

namespace lsf::io {

/// Build a scenario from its JSON document. Missing blocks take defaults; unknown
/// keys and out-of-range values raise ConfigError naming the offending path.
Scenario scenario_from_json(const nlohmann::json& doc);

/// Fully expanded document (every default written out). Round-trips through
/// scenario_from_json.
nlohmann::json scenario_to_json(const Scenario& sc);

/// Throws ConfigError with the path when the file is missing or malformed.
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace lsf::io

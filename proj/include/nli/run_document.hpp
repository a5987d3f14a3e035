#pragma once

// JSON run documents: RunConfig with snake_case keys whose names carry units.
// Unknown keys are rejected and every required key must be present; errors
// are ErrorKind::config and name the offending key path.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "nli/simulator.hpp"

namespace nli::io {

sim::RunConfig parse_run_document(const nlohmann::json& doc);

// Throws io when unreadable, config when malformed or invalid.
sim::RunConfig load_run_document(const std::filesystem::path& path);

nlohmann::json to_run_document(const sim::RunConfig& c);

} // namespace nli::io

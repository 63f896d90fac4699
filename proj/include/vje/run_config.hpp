#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "vje/config.hpp"

namespace vje {

using Json = nlohmann::json;

// Strict readers: unknown keys are a ConfigError naming the full key path;
// missing keys keep their defaults. format_version is mandatory at the top level.
RunConfig run_config_from_json(const Json& j);
RunConfig load_run_config(const std::filesystem::path& path);

Json to_json(const RunConfig& c);
Json to_json(const ModelConfig& c);
Json to_json(const VjeConfig& c);
Json to_json(const SyntheticDataConfig& c);
Json to_json(const OptimConfig& c);

ModelConfig model_config_from_json(const Json& j, const std::string& path = "model");

}  // namespace vje

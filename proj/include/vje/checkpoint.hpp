#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "vje/model.hpp"
#include "vje/run_config.hpp"

namespace vje {

struct CheckpointMeta {
  Json config;  // echo of whatever the writer passed, usually the resolved run config
  std::uint64_t epoch = 0;
  std::uint64_t rng_counter = 0;
};

// {"format_version":1,"params":{name:{"shape":[..],"data":[..]}},"config":..,"epoch":n,"rng_counter":k}
// Doubles are written in shortest round-trip form, so save -> load -> save is byte-identical.
std::string checkpoint_to_string(const Model& model, const CheckpointMeta& meta);
void save_checkpoint(const std::filesystem::path& path, const Model& model, const CheckpointMeta& meta);

// Loads into a model built from its own config; every parameter must be present
// with the expected shape. Errors are CheckpointError with a distinct Kind.
CheckpointMeta checkpoint_from_string(const std::string& text, Model& model);
CheckpointMeta load_checkpoint(const std::filesystem::path& path, Model& model);

}  // namespace vje

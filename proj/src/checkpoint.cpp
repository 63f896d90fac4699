#include "vje/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "vje/error.hpp"

namespace vje {

using Kind = CheckpointError::Kind;

std::string checkpoint_to_string(const Model& model, const CheckpointMeta& meta) {
  Json params = Json::object();
  for (const auto& p : model.params()) {
    params[p.name] = Json{{"shape", p.value.shape()}, {"data", p.value.values()}};
  }
  Json doc{{"format_version", kFormatVersion},
           {"params", std::move(params)},
           {"config", meta.config},
           {"epoch", meta.epoch},
           {"rng_counter", meta.rng_counter}};
  return doc.dump(1) + "\n";
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError(Kind::io, "cannot write checkpoint " + path.string());
  out << checkpoint_to_string(model, meta);
  if (!out) throw CheckpointError(Kind::io, "write failed for " + path.string());
}

CheckpointMeta checkpoint_from_string(const std::string& text, Model& model) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw CheckpointError(Kind::malformed_json, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("format_version") || !doc.contains("params") ||
      !doc["params"].is_object()) {
    throw CheckpointError(Kind::malformed_json, "checkpoint lacks format_version or params");
  }
  if (!doc["format_version"].is_number_integer() || doc["format_version"].get<int>() != kFormatVersion) {
    throw CheckpointError(Kind::version_mismatch,
                          "checkpoint format_version " + doc["format_version"].dump() + ", expected " +
                              std::to_string(kFormatVersion));
  }
  const Json& params = doc["params"];

  std::string missing;
  for (const auto& p : model.params()) {
    if (!params.contains(p.name)) missing += (missing.empty() ? "" : ", ") + p.name;
  }
  if (!missing.empty()) throw CheckpointError(Kind::missing_param, "checkpoint is missing parameters: " + missing);
  for (const auto& [name, v] : params.items()) {
    if (!model.params().contains(name)) throw CheckpointError(Kind::unknown_param, "unknown parameter " + name);
  }

  // Validate everything before touching the model.
  std::vector<Vector> values;
  for (const auto& p : model.params()) {
    const Json& e = params[p.name];
    std::vector<std::size_t> shape;
    Vector data;
    try {
      shape = e.at("shape").get<std::vector<std::size_t>>();
      data = e.at("data").get<Vector>();
    } catch (const nlohmann::json::exception& ex) {
      throw CheckpointError(Kind::malformed_json, "parameter " + p.name + ": " + ex.what());
    }
    if (shape != p.value.shape()) {
      throw CheckpointError(Kind::shape_mismatch, "parameter " + p.name + " has shape " + shape_str(shape) +
                                                      ", model expects " + p.value.shape_str());
    }
    if (data.size() != p.value.size()) {
      throw CheckpointError(Kind::shape_mismatch, "parameter " + p.name + " has " + std::to_string(data.size()) +
                                                      " values, shape needs " + std::to_string(p.value.size()));
    }
    values.push_back(std::move(data));
  }
  std::size_t i = 0;
  for (auto& p : model.params()) p.value.values() = std::move(values[i++]);

  CheckpointMeta meta;
  meta.config = doc.value("config", Json::object());
  try {
    meta.epoch = doc.value("epoch", std::uint64_t{0});
    meta.rng_counter = doc.value("rng_counter", std::uint64_t{0});
  } catch (const nlohmann::json::exception& ex) {
    throw CheckpointError(Kind::malformed_json, std::string("checkpoint metadata: ") + ex.what());
  }
  return meta;
}

CheckpointMeta load_checkpoint(const std::filesystem::path& path, Model& model) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(Kind::io, "cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str(), model);
}

}  // namespace vje

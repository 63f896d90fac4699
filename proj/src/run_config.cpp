#include "vje/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "vje/distributions.hpp"
#include "vje/error.hpp"

namespace vje {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& msg) { throw ConfigError(key + ": " + msg); }

void require(bool ok, const std::string& key, const std::string& msg) {
  if (!ok) bad(key, msg);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

void EncoderConfig::validate() const {
  require(input_dim >= 1, "model.encoder.input_dim", "must be >= 1");
  for (std::size_t h : hidden_dims) require(h >= 1, "model.encoder.hidden_dims", "widths must be >= 1");
  require(embed_dim >= 2, "model.encoder.embed_dim", "must be >= 2");
  require(activation == "relu", "model.encoder.activation", "only \"relu\" is supported");
}

void InferenceNetConfig::validate() const {
  require(embed_dim >= 2, "model.inference.embed_dim", "must be >= 2");
  require(bottleneck_dim >= 1 && bottleneck_dim < embed_dim, "model.inference.bottleneck_dim",
          "must be in [1, embed_dim)");
  require(depth >= 1, "model.inference.depth", "must be >= 1");
}

void ModelConfig::validate() const {
  encoder.validate();
  inference.validate();
  require(inference.embed_dim == encoder.embed_dim, "model.inference.embed_dim",
          "must equal model.encoder.embed_dim (the inference net reads z directly)");
}

void LossTerms::validate() const {
  require(dir || rad || kl, "vje.terms", "at least one of dir, rad, kl must be enabled");
}

void VjeConfig::validate() const {
  require(nu > 0.0 && finite(nu), "vje.nu", "must be positive and finite");
  require(beta >= 0.0 && finite(beta), "vje.beta", "must be >= 0 and finite");
  require(embed_dim >= 2, "vje.embed_dim", "must be >= 2");
  require(mc_samples >= 1, "vje.mc_samples", "must be >= 1");
  require(eps_norm > 0.0 && finite(eps_norm), "vje.eps_norm", "must be positive");
  require(var_floor == dist::kVarFloor, "vje.var_floor", "only 1e-6 is supported");
  terms.validate();
}

void SyntheticDataConfig::validate() const {
  require(n_classes >= 1, "data.n_classes", "must be >= 1");
  require(samples_per_class >= 1, "data.samples_per_class", "must be >= 1");
  require(test_samples_per_class >= 1, "data.test_samples_per_class", "must be >= 1");
  require(input_dim >= 1, "data.input_dim", "must be >= 1");
  require(class_separation >= 0.0 && finite(class_separation), "data.class_separation", "must be >= 0");
  require(view_noise_sigma >= 0.0 && finite(view_noise_sigma), "data.view_noise_sigma", "must be >= 0");
  require(view_mask_prob >= 0.0 && view_mask_prob < 1.0, "data.view_mask_prob", "must be in [0, 1)");
}

void OptimConfig::validate() const {
  require(lr0 > 0.0 && finite(lr0), "optim.lr0", "must be positive");
  require(momentum >= 0.0 && momentum < 1.0, "optim.momentum", "must be in [0, 1)");
  require(weight_decay >= 0.0 && finite(weight_decay), "optim.weight_decay", "must be >= 0");
  require(total_epochs >= 1, "optim.total_epochs", "must be >= 1");
  require(warmup_epochs <= total_epochs, "optim.warmup_epochs", "must not exceed total_epochs");
  require(batch_size >= 1, "optim.batch_size", "must be >= 1");
}

void RunConfig::validate() const {
  require(format_version == kFormatVersion, "format_version", "unsupported version " + std::to_string(format_version));
  data.validate();
  model.validate();
  vje.validate();
  optim.validate();
  require(data.input_dim == model.encoder.input_dim, "model.encoder.input_dim", "must equal data.input_dim");
  require(vje.embed_dim == model.encoder.embed_dim, "vje.embed_dim", "must equal model.encoder.embed_dim");
}

// ---------------------------------------------------------------------------
// JSON

namespace {

class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad(path_.empty() ? "config" : path_, "expected an object");
  }

  // Call after the last get/child: rejects anything that was not read.
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) bad(key(k), "unknown key");
    }
  }

  template <class T>
  void get(const std::string& k, T& out) {
    seen_.insert(k);
    auto it = j_.find(k);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (!it->is_number_unsigned()) bad(key(k), "expected a non-negative integer");
      } else if constexpr (std::is_same_v<T, int>) {
        if (!it->is_number_integer()) bad(key(k), "expected an integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) bad(key(k), "expected a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) bad(key(k), "expected true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) bad(key(k), "expected a string");
      }
      out = it->get<T>();
    } catch (const nlohmann::json::exception& e) {
      bad(key(k), e.what());
    }
  }

  const Json* child(const std::string& k) {
    seen_.insert(k);
    auto it = j_.find(k);
    return it == j_.end() ? nullptr : &*it;
  }

  bool has(const std::string& k) const { return j_.contains(k); }
  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

EncoderConfig encoder_from(const Json& j, const std::string& path) {
  EncoderConfig c;
  Reader r(j, path);
  r.get("input_dim", c.input_dim);
  if (const Json* h = r.child("hidden_dims")) {
    if (!h->is_array()) bad(r.key("hidden_dims"), "expected an array");
    c.hidden_dims.clear();
    for (const auto& v : *h) {
      if (!v.is_number_unsigned()) bad(r.key("hidden_dims"), "expected non-negative integers");
      c.hidden_dims.push_back(v.get<std::size_t>());
    }
  }
  r.get("embed_dim", c.embed_dim);
  r.get("activation", c.activation);
  r.finish();
  return c;
}

InferenceNetConfig inference_from(const Json& j, const std::string& path) {
  InferenceNetConfig c;
  Reader r(j, path);
  r.get("embed_dim", c.embed_dim);
  r.get("bottleneck_dim", c.bottleneck_dim);
  r.get("depth", c.depth);
  r.finish();
  return c;
}

VjeConfig vje_from(const Json& j, const std::string& path) {
  VjeConfig c;
  Reader r(j, path);
  r.get("nu", c.nu);
  r.get("beta", c.beta);
  r.get("embed_dim", c.embed_dim);
  r.get("mc_samples", c.mc_samples);
  r.get("eps_norm", c.eps_norm);
  r.get("var_floor", c.var_floor);
  if (const Json* t = r.child("terms")) {
    Reader tr(*t, r.key("terms"));
    tr.get("dir", c.terms.dir);
    tr.get("rad", c.terms.rad);
    tr.get("kl", c.terms.kl);
    tr.finish();
  }
  r.finish();
  return c;
}

SyntheticDataConfig data_from(const Json& j, const std::string& path) {
  SyntheticDataConfig c;
  Reader r(j, path);
  r.get("n_classes", c.n_classes);
  r.get("samples_per_class", c.samples_per_class);
  r.get("test_samples_per_class", c.test_samples_per_class);
  r.get("input_dim", c.input_dim);
  r.get("class_separation", c.class_separation);
  r.get("view_noise_sigma", c.view_noise_sigma);
  r.get("view_mask_prob", c.view_mask_prob);
  r.get("seed", c.seed);
  r.finish();
  return c;
}

OptimConfig optim_from(const Json& j, const std::string& path) {
  OptimConfig c;
  Reader r(j, path);
  r.get("lr0", c.lr0);
  r.get("momentum", c.momentum);
  r.get("weight_decay", c.weight_decay);
  r.get("warmup_epochs", c.warmup_epochs);
  r.get("total_epochs", c.total_epochs);
  r.get("batch_size", c.batch_size);
  r.finish();
  return c;
}

}  // namespace

ModelConfig model_config_from_json(const Json& j, const std::string& path) {
  ModelConfig c;
  Reader r(j, path);
  if (const Json* e = r.child("encoder")) c.encoder = encoder_from(*e, r.key("encoder"));
  if (const Json* i = r.child("inference")) c.inference = inference_from(*i, r.key("inference"));
  r.finish();
  return c;
}

RunConfig run_config_from_json(const Json& j) {
  RunConfig c;
  {
    Reader r(j, "");
    if (!r.has("format_version")) bad("format_version", "missing required key");
    r.get("format_version", c.format_version);
    r.get("seed", c.seed);
    r.get("out_dir", c.out_dir);
    r.get("checkpoint_every", c.checkpoint_every);
    if (const Json* d = r.child("data")) c.data = data_from(*d, "data");
    if (const Json* m = r.child("model")) c.model = model_config_from_json(*m, "model");
    if (const Json* v = r.child("vje")) c.vje = vje_from(*v, "vje");
    if (const Json* o = r.child("optim")) c.optim = optim_from(*o, "optim");
    r.finish();
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

Json to_json(const ModelConfig& c) {
  return Json{{"encoder",
               {{"input_dim", c.encoder.input_dim},
                {"hidden_dims", c.encoder.hidden_dims},
                {"embed_dim", c.encoder.embed_dim},
                {"activation", c.encoder.activation}}},
              {"inference",
               {{"embed_dim", c.inference.embed_dim},
                {"bottleneck_dim", c.inference.bottleneck_dim},
                {"depth", c.inference.depth}}}};
}

Json to_json(const VjeConfig& c) {
  return Json{{"nu", c.nu},
              {"beta", c.beta},
              {"embed_dim", c.embed_dim},
              {"mc_samples", c.mc_samples},
              {"eps_norm", c.eps_norm},
              {"var_floor", c.var_floor},
              {"terms", {{"dir", c.terms.dir}, {"rad", c.terms.rad}, {"kl", c.terms.kl}}}};
}

Json to_json(const SyntheticDataConfig& c) {
  return Json{{"n_classes", c.n_classes},
              {"samples_per_class", c.samples_per_class},
              {"test_samples_per_class", c.test_samples_per_class},
              {"input_dim", c.input_dim},
              {"class_separation", c.class_separation},
              {"view_noise_sigma", c.view_noise_sigma},
              {"view_mask_prob", c.view_mask_prob},
              {"seed", c.seed}};
}

Json to_json(const OptimConfig& c) {
  return Json{{"lr0", c.lr0},
              {"momentum", c.momentum},
              {"weight_decay", c.weight_decay},
              {"warmup_epochs", c.warmup_epochs},
              {"total_epochs", c.total_epochs},
              {"batch_size", c.batch_size}};
}

Json to_json(const RunConfig& c) {
  return Json{{"format_version", c.format_version},
              {"seed", c.seed},
              {"out_dir", c.out_dir},
              {"checkpoint_every", c.checkpoint_every},
              {"data", to_json(c.data)},
              {"model", to_json(c.model)},
              {"vje", to_json(c.vje)},
              {"optim", to_json(c.optim)}};
}

}  // namespace vje

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vje/autodiff.hpp"
#include "vje/config.hpp"
#include "vje/distributions.hpp"
#include "vje/numerics.hpp"
#include "vje/tensor.hpp"

namespace vje {

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
};

// Ordered, named parameter storage. Gradients only ever accumulate; the training
// loop calls zero_grad.
class ParamStore {
 public:
  std::size_t add(std::string name, Tensor value);

  std::size_t size() const noexcept { return params_.size(); }
  Param& operator[](std::size_t i) { return params_[i]; }
  const Param& operator[](std::size_t i) const { return params_[i]; }
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::vector<std::string> names() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  // grad += scale * g for every entry present in the map.
  void accumulate(const ad::GradientMap& grads, double scale = 1.0);
  std::size_t num_values() const;
  bool all_finite() const;

 private:
  std::vector<Param> params_;
  std::map<std::string, std::size_t> index_;
};

struct PosteriorVars {
  ad::Var mu;
  ad::Var sigma2;
};

// Parameters bound as named leaves on one tape, in ParamStore order.
struct BoundParams {
  std::vector<ad::Var> vars;
};

class Model {
 public:
  // All weights and biases zero, layer-norm gains one.
  explicit Model(ModelConfig cfg);
  static Model initialized(const ModelConfig& cfg, Rng& rng);

  const ModelConfig& config() const noexcept { return cfg_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }
  std::size_t embed_dim() const noexcept { return cfg_.encoder.embed_dim; }

  // He-uniform for relu layers, LeCun-uniform for linear outputs, zero biases,
  // var-head bias softplus^-1(1 - floor) so the initial posterior variance is 1.
  void init(Rng& rng);

  BoundParams bind(ad::Tape& tape) const;
  ad::Var encode(ad::Tape& tape, const BoundParams& p, std::span<const double> x) const;
  PosteriorVars infer(ad::Tape& tape, const BoundParams& p, ad::Var z) const;

  // Tape-free forward passes for scoring and evaluation.
  Vector encode(std::span<const double> x) const;
  dist::PosteriorParams infer(std::span<const double> z) const;

 private:
  struct Linear {
    std::size_t weight;
    std::size_t bias;
    std::size_t in;
    std::size_t out;
  };
  struct NormLinear {
    Linear lin;
    std::size_t gain;
    std::size_t shift;
  };

  Linear add_linear(const std::string& prefix, std::size_t in, std::size_t out);

  ModelConfig cfg_;
  ParamStore params_;
  std::vector<Linear> enc_;
  std::vector<NormLinear> inf_;
  Linear mu_head_{};
  Linear var_head_{};
};

// s = mu + sqrt(sigma2) * eps
ad::Var sample_latent(ad::Tape& tape, const PosteriorVars& q, std::span<const double> eps);

}  // namespace vje

#include "vje/model.hpp"

#include <cmath>
#include <string>

#include "vje/error.hpp"
#include "vje/kernels.hpp"

namespace vje {

std::size_t ParamStore::add(std::string name, Tensor value) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name " + name);
  index_.emplace(name, params_.size());
  Tensor grad = Tensor::zeros_like(value);
  params_.push_back({std::move(name), std::move(value), std::move(grad)});
  return params_.size() - 1;
}

Param& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter " + name);
  return params_[it->second];
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter " + name);
  return params_[it->second];
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.name);
  return out;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) std::fill(p.grad.data().begin(), p.grad.data().end(), 0.0);
}

void ParamStore::accumulate(const ad::GradientMap& grads, double scale) {
  for (const auto& [name, g] : grads) {
    auto it = index_.find(name);
    if (it == index_.end()) continue;
    Param& p = params_[it->second];
    if (!p.grad.same_shape(g)) {
      throw ShapeError("gradient for " + name + " has shape " + g.shape_str() + ", expected " + p.grad.shape_str());
    }
    kernels::axpy(scale, g.ptr(), p.grad.ptr(), g.size());
  }
}

std::size_t ParamStore::num_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

bool ParamStore::all_finite() const {
  for (const auto& p : params_) {
    if (!p.value.all_finite()) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::size_t in = cfg_.encoder.input_dim;
  std::size_t i = 0;
  for (std::size_t h : cfg_.encoder.hidden_dims) {
    enc_.push_back(add_linear("encoder.layer" + std::to_string(i++), in, h));
    in = h;
  }
  enc_.push_back(add_linear("encoder.layer" + std::to_string(i), in, cfg_.encoder.embed_dim));

  const auto& ic = cfg_.inference;
  in = ic.embed_dim;
  for (std::size_t k = 0; k < ic.depth; ++k) {
    const std::size_t out = (k + 1 == ic.depth) ? ic.embed_dim : ic.bottleneck_dim;
    const std::string prefix = "inference.layer" + std::to_string(k);
    NormLinear nl{add_linear(prefix, in, out), 0, 0};
    nl.gain = params_.add(prefix + ".ln.gain", Tensor::vector(Vector(out, 1.0)));
    nl.shift = params_.add(prefix + ".ln.bias", Tensor::zeros({out}));
    inf_.push_back(nl);
    in = out;
  }
  mu_head_ = add_linear("inference.mu_head", in, ic.embed_dim);
  var_head_ = add_linear("inference.var_head", in, ic.embed_dim);
}

Model::Linear Model::add_linear(const std::string& prefix, std::size_t in, std::size_t out) {
  Linear l{};
  l.in = in;
  l.out = out;
  l.weight = params_.add(prefix + ".weight", Tensor::zeros({out, in}));
  l.bias = params_.add(prefix + ".bias", Tensor::zeros({out}));
  return l;
}

Model Model::initialized(const ModelConfig& cfg, Rng& rng) {
  Model m(cfg);
  m.init(rng);
  return m;
}

namespace {

void fill_uniform(Tensor& w, double bound, Rng& rng) {
  for (double& v : w.data()) v = bound * (2.0 * rng.uniform() - 1.0);
}

}  // namespace

void Model::init(Rng& rng) {
  for (std::size_t i = 0; i < enc_.size(); ++i) {
    const bool relu_follows = i + 1 < enc_.size();
    const double fan_in = static_cast<double>(enc_[i].in);
    fill_uniform(params_[enc_[i].weight].value, std::sqrt((relu_follows ? 6.0 : 3.0) / fan_in), rng);
  }
  for (const auto& nl : inf_) {
    fill_uniform(params_[nl.lin.weight].value, std::sqrt(6.0 / static_cast<double>(nl.lin.in)), rng);
  }
  for (const Linear* h : {&mu_head_, &var_head_}) {
    fill_uniform(params_[h->weight].value, std::sqrt(3.0 / static_cast<double>(h->in)), rng);
  }
  const double b0 = softplus_inverse(1.0 - dist::kVarFloor);
  for (double& v : params_[var_head_.bias].value.data()) v = b0;
}

BoundParams Model::bind(ad::Tape& tape) const {
  BoundParams b;
  b.vars.reserve(params_.size());
  for (const auto& p : params_) b.vars.push_back(tape.variable(p.value, p.name));
  return b;
}

namespace {

void check_input(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ShapeError(std::string(what) + ": expected length " + std::to_string(want) + ", got " +
                     std::to_string(got));
  }
}

}  // namespace

ad::Var Model::encode(ad::Tape& tape, const BoundParams& p, std::span<const double> x) const {
  check_input(x.size(), cfg_.encoder.input_dim, "encode");
  ad::Var h = tape.constant(Tensor::vector(Vector(x.begin(), x.end())));
  for (std::size_t i = 0; i < enc_.size(); ++i) {
    h = ad::matvec(p.vars[enc_[i].weight], h) + p.vars[enc_[i].bias];
    if (i + 1 < enc_.size()) h = ad::relu(h);
  }
  return h;
}

PosteriorVars Model::infer(ad::Tape& tape, const BoundParams& p, ad::Var z) const {
  (void)tape;
  check_input(z.value().size(), cfg_.inference.embed_dim, "infer");
  ad::Var h = z;
  for (const auto& nl : inf_) {
    h = ad::matvec(p.vars[nl.lin.weight], h) + p.vars[nl.lin.bias];
    h = ad::layernorm(h) * p.vars[nl.gain] + p.vars[nl.shift];
    h = ad::relu(h);
  }
  PosteriorVars q;
  q.mu = ad::matvec(p.vars[mu_head_.weight], h) + p.vars[mu_head_.bias];
  ad::Var pre = ad::matvec(p.vars[var_head_.weight], h) + p.vars[var_head_.bias];
  q.sigma2 = ad::add_scalar(ad::softplus(pre), dist::kVarFloor);
  return q;
}

namespace {

Vector linear(const Tensor& w, const Tensor& b, const Vector& x) {
  Vector y(w.rows());
  kernels::matvec(w.ptr(), x.data(), y.data(), w.rows(), w.cols());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b[i];
  return y;
}

void relu_inplace(Vector& v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
}

}  // namespace

Vector Model::encode(std::span<const double> x) const {
  check_input(x.size(), cfg_.encoder.input_dim, "encode");
  Vector h(x.begin(), x.end());
  for (std::size_t i = 0; i < enc_.size(); ++i) {
    h = linear(params_[enc_[i].weight].value, params_[enc_[i].bias].value, h);
    if (i + 1 < enc_.size()) relu_inplace(h);
  }
  return h;
}

dist::PosteriorParams Model::infer(std::span<const double> z) const {
  check_input(z.size(), cfg_.inference.embed_dim, "infer");
  Vector h(z.begin(), z.end());
  for (const auto& nl : inf_) {
    h = linear(params_[nl.lin.weight].value, params_[nl.lin.bias].value, h);
    // Must match the tape layernorm bit for bit.
    const auto d = static_cast<double>(h.size());
    double mean = 0.0;
    for (double v : h) mean += v;
    mean /= d;
    double var = 0.0;
    for (double v : h) var += (v - mean) * (v - mean);
    var /= d;
    const double r = 1.0 / std::sqrt(var + ad::kLayerNormEps);
    const Tensor& g = params_[nl.gain].value;
    const Tensor& s = params_[nl.shift].value;
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = (h[i] - mean) * r * g[i] + s[i];
    relu_inplace(h);
  }
  dist::PosteriorParams q;
  q.mu = linear(params_[mu_head_.weight].value, params_[mu_head_.bias].value, h);
  q.sigma2 = linear(params_[var_head_.weight].value, params_[var_head_.bias].value, h);
  for (double& v : q.sigma2) v = softplus_floor(v, dist::kVarFloor);
  return q;
}

ad::Var sample_latent(ad::Tape& tape, const PosteriorVars& q, std::span<const double> eps) {
  if (eps.size() != q.mu.value().size()) {
    throw ShapeError("sample_latent: noise length " + std::to_string(eps.size()) + " vs latent " +
                     std::to_string(q.mu.value().size()));
  }
  ad::Var e = tape.constant(Tensor::vector(Vector(eps.begin(), eps.end())));
  return q.mu + ad::sqrt(q.sigma2) * e;
}

}  // namespace vje

#include "vje/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "vje/error.hpp"
#include "vje/kernels.hpp"

namespace vje::ad {

std::string_view op_name(Op op) {
  switch (op) {
    case Op::leaf: return "leaf";
    case Op::constant: return "constant";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::div: return "div";
    case Op::matvec: return "matvec";
    case Op::relu: return "relu";
    case Op::layernorm: return "layernorm";
    case Op::softplus: return "softplus";
    case Op::log: return "log";
    case Op::log1p: return "log1p";
    case Op::exp: return "exp";
    case Op::sqrt: return "sqrt";
    case Op::sum: return "sum";
    case Op::dot: return "dot";
    case Op::l2norm: return "l2norm";
    case Op::normalize: return "normalize";
    case Op::scalar_pow: return "scalar_pow";
    case Op::stop_gradient: return "stop_gradient";
  }
  return "unknown";
}

int op_arity(Op op) {
  switch (op) {
    case Op::leaf:
    case Op::constant:
      return 0;
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div:
    case Op::matvec:
    case Op::dot:
      return 2;
    default:
      return 1;
  }
}

const Tensor& Var::value() const {
  if (!tape_) throw std::logic_error("Var::value on an unbound Var");
  return tape_->value_of(id_);
}

// ---------------------------------------------------------------------------
// Tape

Var Tape::variable(Tensor value, std::string name) {
  Var v = record(Op::leaf, std::move(value), {});
  nodes_.back().needs_grad = true;
  if (!name.empty()) {
    nodes_.back().name = std::move(name);
    params_.push_back(v.id());
  }
  return v;
}

Var Tape::constant(Tensor value) { return record(Op::constant, std::move(value), {}); }

Var Tape::record(Op op, Tensor value, std::initializer_list<Var> parents, double attr, double aux) {
  Node n{op, false, {-1, -1}, attr, aux, std::move(value), Tensor{}, false, {}};
  int k = 0;
  for (Var p : parents) {
    n.parents[k++] = static_cast<std::int32_t>(p.id());
    n.needs_grad = n.needs_grad || nodes_[p.id()].needs_grad;
  }
  if (op == Op::stop_gradient) n.needs_grad = false;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

void Tape::check_owner(Var v, std::string_view op) const {
  if (v.tape_ != this) throw std::logic_error(std::string(op) + ": Var belongs to a different tape");
}

std::vector<std::string> Tape::param_names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (auto id : params_) out.push_back(nodes_[id].name);
  return out;
}

Tensor& Tape::grad_slot(std::uint32_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor::zeros_like(n.value);
    n.has_grad = true;
  }
  return n.grad;
}

Tensor Tape::grad(Var v) const {
  check_owner(v, "grad");
  const Node& n = nodes_[v.id()];
  return n.has_grad ? n.grad : Tensor::zeros_like(n.value);
}

GradientMap Tape::backward(Var loss) {
  check_owner(loss, "backward");
  if (loss.value().rank() != 0) {
    throw ShapeError("backward: loss must be a scalar, got shape " + loss.value().shape_str());
  }
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor{};
  }
  grad_slot(loss.id())[0] = 1.0;
  for (std::int64_t i = loss.id(); i >= 0; --i) {
    const auto id = static_cast<std::uint32_t>(i);
    if (nodes_[id].has_grad && nodes_[id].needs_grad) propagate(id);
  }
  GradientMap out;
  for (auto id : params_) out.emplace(nodes_[id].name, nodes_[id].has_grad ? nodes_[id].grad : Tensor::zeros_like(nodes_[id].value));
  return out;
}

namespace {

// Accumulates g (shaped like the node output) into a parent slot that may be a
// broadcast scalar.
void accumulate(Tensor& slot, const Tensor& g, const std::function<double(std::size_t)>& local) {
  if (slot.size() == g.size()) {
    for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i] * local(i);
  } else {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * local(i);
    slot[0] += s;
  }
}

inline double at(const Tensor& t, std::size_t i) { return t.size() == 1 ? t[0] : t[i]; }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

void Tape::propagate(std::uint32_t id) {
  // Copy what we need: grad_slot may reallocate nothing, but parents' slots are
  // distinct nodes so references into nodes_ stay valid (no push_back here).
  const Node& n = nodes_[id];
  const Tensor& g = n.grad;
  const auto pa = n.parents[0];
  const auto pb = n.parents[1];
  auto wants = [&](std::int32_t p) { return p >= 0 && nodes_[p].needs_grad; };
  auto val = [&](std::int32_t p) -> const Tensor& { return nodes_[p].value; };

  switch (n.op) {
    case Op::leaf:
    case Op::constant:
    case Op::stop_gradient:
      return;
    case Op::add:
      if (wants(pa)) accumulate(grad_slot(pa), g, [](std::size_t) { return 1.0; });
      if (wants(pb)) accumulate(grad_slot(pb), g, [](std::size_t) { return 1.0; });
      return;
    case Op::sub:
      if (wants(pa)) accumulate(grad_slot(pa), g, [](std::size_t) { return 1.0; });
      if (wants(pb)) accumulate(grad_slot(pb), g, [](std::size_t) { return -1.0; });
      return;
    case Op::mul: {
      const Tensor& a = val(pa);
      const Tensor& b = val(pb);
      if (wants(pa)) accumulate(grad_slot(pa), g, [&](std::size_t i) { return at(b, i); });
      if (wants(pb)) accumulate(grad_slot(pb), g, [&](std::size_t i) { return at(a, i); });
      return;
    }
    case Op::div: {
      const Tensor& a = val(pa);
      const Tensor& b = val(pb);
      if (wants(pa)) accumulate(grad_slot(pa), g, [&](std::size_t i) { return 1.0 / at(b, i); });
      if (wants(pb)) {
        accumulate(grad_slot(pb), g, [&](std::size_t i) {
          const double bi = at(b, i);
          return -at(a, i) / (bi * bi);
        });
      }
      return;
    }
    case Op::matvec: {
      const Tensor& w = val(pa);
      const Tensor& x = val(pb);
      if (wants(pa)) kernels::outer_acc(g.ptr(), x.ptr(), grad_slot(pa).ptr(), w.rows(), w.cols());
      if (wants(pb)) kernels::matvec_t_acc(w.ptr(), g.ptr(), grad_slot(pb).ptr(), w.rows(), w.cols());
      return;
    }
    case Op::relu: {
      const Tensor& x = val(pa);
      Tensor& s = grad_slot(pa);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (x[i] > 0.0) s[i] += g[i];
      }
      return;
    }
    case Op::layernorm: {
      // y = (x - m) r;  dx = r (g - mean(g) - y mean(g y))
      const Tensor& y = n.value;
      const double r = n.aux;
      const auto d = static_cast<double>(g.size());
      double mg = 0.0;
      double mgy = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        mg += g[i];
        mgy += g[i] * y[i];
      }
      mg /= d;
      mgy /= d;
      Tensor& s = grad_slot(pa);
      for (std::size_t i = 0; i < g.size(); ++i) s[i] += r * (g[i] - mg - y[i] * mgy);
      return;
    }
    case Op::softplus: {
      const Tensor& x = val(pa);
      accumulate(grad_slot(pa), g, [&](std::size_t i) { return sigmoid(x[i]); });
      return;
    }
    case Op::log: {
      const Tensor& x = val(pa);
      accumulate(grad_slot(pa), g, [&](std::size_t i) { return 1.0 / x[i]; });
      return;
    }
    case Op::log1p: {
      const Tensor& x = val(pa);
      accumulate(grad_slot(pa), g, [&](std::size_t i) { return 1.0 / (1.0 + x[i]); });
      return;
    }
    case Op::exp: {
      const Tensor& y = n.value;
      accumulate(grad_slot(pa), g, [&](std::size_t i) { return y[i]; });
      return;
    }
    case Op::sqrt: {
      const Tensor& y = n.value;
      accumulate(grad_slot(pa), g, [&](std::size_t i) { return 0.5 / y[i]; });
      return;
    }
    case Op::sum: {
      Tensor& s = grad_slot(pa);
      for (std::size_t i = 0; i < s.size(); ++i) s[i] += g[0];
      return;
    }
    case Op::dot: {
      const Tensor& a = val(pa);
      const Tensor& b = val(pb);
      if (wants(pa)) kernels::axpy(g[0], b.ptr(), grad_slot(pa).ptr(), b.size());
      if (wants(pb)) kernels::axpy(g[0], a.ptr(), grad_slot(pb).ptr(), a.size());
      return;
    }
    case Op::l2norm: {
      const double norm = n.value[0];
      if (norm > 0.0) kernels::axpy(g[0] / norm, val(pa).ptr(), grad_slot(pa).ptr(), val(pa).size());
      return;
    }
    case Op::normalize: {
      const Tensor& y = n.value;
      const double norm = n.aux;
      const double eps = n.attr;
      Tensor& s = grad_slot(pa);
      if (norm >= eps) {
        const double yg = kernels::dot(y.ptr(), g.ptr(), g.size());
        for (std::size_t i = 0; i < g.size(); ++i) s[i] += (g[i] - y[i] * yg) / norm;
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) s[i] += g[i] / eps;
      }
      return;
    }
    case Op::scalar_pow: {
      const Tensor& x = val(pa);
      const double p = n.attr;
      accumulate(grad_slot(pa), g, [&](std::size_t i) { return p * std::pow(x[i], p - 1.0); });
      return;
    }
  }
}

// ---------------------------------------------------------------------------
// Ops

namespace {

Tape& owner(std::initializer_list<Var> vs, std::string_view op) {
  Tape* t = nullptr;
  for (Var v : vs) {
    if (!v.valid()) throw std::logic_error(std::string(op) + ": unbound Var");
    if (t && &v.tape() != t) throw std::logic_error(std::string(op) + ": operands on different tapes");
    t = &v.tape();
  }
  return *t;
}

void check_broadcast(Op op, const Tensor& a, const Tensor& b) {
  if (a.same_shape(b) || a.rank() == 0 || b.rank() == 0) return;
  throw ShapeError(std::string(op_name(op)) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

template <class F>
Var binary(Op op, Var a, Var b, F f) {
  Tape& t = owner({a, b}, op_name(op));
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  check_broadcast(op, av, bv);
  Tensor out = av.size() >= bv.size() ? Tensor::zeros_like(av) : Tensor::zeros_like(bv);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(at(av, i), at(bv, i));
  return t.record(op, std::move(out), {a, b});
}

template <class F>
Var unary(Op op, Var x, F f) {
  Tape& t = owner({x}, op_name(op));
  Tensor out = Tensor::zeros_like(x.value());
  const Tensor& xv = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  return t.record(op, std::move(out), {x});
}

void require_vector(Op op, const Tensor& t) {
  if (t.rank() != 1) throw ShapeError(std::string(op_name(op)) + ": expected a vector, got " + t.shape_str());
}

}  // namespace

Var add(Var a, Var b) { return binary(Op::add, a, b, [](double x, double y) { return x + y; }); }
Var sub(Var a, Var b) { return binary(Op::sub, a, b, [](double x, double y) { return x - y; }); }
Var mul(Var a, Var b) { return binary(Op::mul, a, b, [](double x, double y) { return x * y; }); }
Var div(Var a, Var b) { return binary(Op::div, a, b, [](double x, double y) { return x / y; }); }

Var matvec(Var w, Var x) {
  Tape& t = owner({w, x}, "matvec");
  const Tensor& wv = w.value();
  const Tensor& xv = x.value();
  if (wv.rank() != 2 || xv.rank() != 1 || wv.cols() != xv.size()) {
    throw ShapeError("matvec: shape mismatch " + wv.shape_str() + " x " + xv.shape_str());
  }
  Tensor out = Tensor::zeros({wv.rows()});
  kernels::matvec(wv.ptr(), xv.ptr(), out.ptr(), wv.rows(), wv.cols());
  return t.record(Op::matvec, std::move(out), {w, x});
}

Var relu(Var x) { return unary(Op::relu, x, [](double v) { return v > 0.0 ? v : 0.0; }); }

Var layernorm(Var x, double eps) {
  Tape& t = owner({x}, "layernorm");
  const Tensor& xv = x.value();
  require_vector(Op::layernorm, xv);
  const auto d = static_cast<double>(xv.size());
  const double mean = std::accumulate(xv.data().begin(), xv.data().end(), 0.0) / d;
  double var = 0.0;
  for (double v : xv.data()) var += (v - mean) * (v - mean);
  var /= d;
  const double r = 1.0 / std::sqrt(var + eps);
  Tensor out = Tensor::zeros_like(xv);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (xv[i] - mean) * r;
  return t.record(Op::layernorm, std::move(out), {x}, eps, r);
}

Var softplus(Var x) {
  return unary(Op::softplus, x, [](double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); });
}

Var log(Var x) { return unary(Op::log, x, [](double v) { return std::log(v); }); }
Var log1p(Var x) { return unary(Op::log1p, x, [](double v) { return std::log1p(v); }); }
Var exp(Var x) { return unary(Op::exp, x, [](double v) { return std::exp(v); }); }
Var sqrt(Var x) { return unary(Op::sqrt, x, [](double v) { return std::sqrt(v); }); }

Var sum(Var x) {
  Tape& t = owner({x}, "sum");
  const auto& d = x.value().data();
  return t.record(Op::sum, Tensor::scalar(std::accumulate(d.begin(), d.end(), 0.0)), {x});
}

Var dot(Var a, Var b) {
  Tape& t = owner({a, b}, "dot");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 1 || !av.same_shape(bv)) {
    throw ShapeError("dot: shape mismatch " + av.shape_str() + " vs " + bv.shape_str());
  }
  return t.record(Op::dot, Tensor::scalar(kernels::dot(av.ptr(), bv.ptr(), av.size())), {a, b});
}

Var l2norm(Var x) {
  Tape& t = owner({x}, "l2norm");
  const Tensor& xv = x.value();
  return t.record(Op::l2norm, Tensor::scalar(std::sqrt(kernels::dot(xv.ptr(), xv.ptr(), xv.size()))), {x});
}

Var normalize(Var x, double eps) {
  Tape& t = owner({x}, "normalize");
  if (!(eps > 0.0)) throw DomainError("normalize: eps must be positive");
  const Tensor& xv = x.value();
  require_vector(Op::normalize, xv);
  const double norm = std::sqrt(kernels::dot(xv.ptr(), xv.ptr(), xv.size()));
  const double inv = 1.0 / std::max(norm, eps);
  Tensor out = Tensor::zeros_like(xv);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * inv;
  return t.record(Op::normalize, std::move(out), {x}, eps, norm);
}

Var scalar_pow(Var x, double p) {
  Tape& t = owner({x}, "scalar_pow");
  Tensor out = Tensor::zeros_like(x.value());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::pow(x.value()[i], p);
  return t.record(Op::scalar_pow, std::move(out), {x}, p);
}

Var stop_gradient(Var x) {
  Tape& t = owner({x}, "stop_gradient");
  return t.record(Op::stop_gradient, x.value(), {x});
}

Var apply(Op op, std::span<const Var> in, double attr) {
  if (static_cast<int>(in.size()) != op_arity(op) || op_arity(op) == 0) {
    throw ShapeError(std::string("apply: ") + std::string(op_name(op)) + " takes " +
                     std::to_string(op_arity(op)) + " inputs, got " + std::to_string(in.size()));
  }
  switch (op) {
    case Op::add: return add(in[0], in[1]);
    case Op::sub: return sub(in[0], in[1]);
    case Op::mul: return mul(in[0], in[1]);
    case Op::div: return div(in[0], in[1]);
    case Op::matvec: return matvec(in[0], in[1]);
    case Op::relu: return relu(in[0]);
    case Op::layernorm: return layernorm(in[0], attr > 0.0 ? attr : kLayerNormEps);
    case Op::softplus: return softplus(in[0]);
    case Op::log: return log(in[0]);
    case Op::log1p: return log1p(in[0]);
    case Op::exp: return exp(in[0]);
    case Op::sqrt: return sqrt(in[0]);
    case Op::sum: return sum(in[0]);
    case Op::dot: return dot(in[0], in[1]);
    case Op::l2norm: return l2norm(in[0]);
    case Op::normalize: return normalize(in[0], attr);
    case Op::scalar_pow: return scalar_pow(in[0], attr);
    case Op::stop_gradient: return stop_gradient(in[0]);
    case Op::leaf:
    case Op::constant:
      break;
  }
  throw std::logic_error("apply: unreachable");
}

Var scale(Var x, double c) { return mul(x.tape().constant(c), x); }
Var add_scalar(Var x, double c) { return add(x, x.tape().constant(c)); }

}  // namespace vje::ad

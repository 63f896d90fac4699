#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vje/tensor.hpp"

// Define-by-run reverse-mode differentiation. A Tape records nodes in creation
// order, which is already a topological order, so backward is a single reverse
// sweep. Nodes marked stop_gradient forward their value and never pass an
// adjoint to their parent.
namespace vje::ad {

enum class Op : std::uint8_t {
  leaf,
  constant,
  add,
  sub,
  mul,
  div,
  matvec,
  relu,
  layernorm,
  softplus,
  log,
  log1p,
  exp,
  sqrt,
  sum,
  dot,
  l2norm,
  normalize,
  scalar_pow,
  stop_gradient,
};

std::string_view op_name(Op op);
// Number of Var inputs each op takes (0 for leaf/constant).
int op_arity(Op op);

inline constexpr double kLayerNormEps = 1e-5;

class Tape;

class Var {
 public:
  Var() = default;

  Tape& tape() const { return *tape_; }
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }
  const Tensor& value() const;
  double item() const { return value().item(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

using GradientMap = std::map<std::string, Tensor>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that receives an adjoint. A non-empty name registers it as a parameter.
  Var variable(Tensor value, std::string name = {});
  Var constant(Tensor value);
  Var constant(double v) { return constant(Tensor::scalar(v)); }

  // Clears and recomputes every adjoint from a scalar loss. Returns d loss / d p
  // for every named parameter leaf; unreachable parameters get exact zeros.
  GradientMap backward(Var loss);

  // Adjoint of any node from the last backward call (zeros when unreached).
  Tensor grad(Var v) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  Op op(Var v) const { return nodes_.at(v.id()).op; }
  std::vector<std::string> param_names() const;

  // Internal node construction used by the op functions.
  Var record(Op op, Tensor value, std::initializer_list<Var> parents, double attr = 0.0, double aux = 0.0);
  const Tensor& value_of(std::uint32_t id) const { return nodes_[id].value; }

 private:
  struct Node {
    Op op;
    bool needs_grad;
    std::int32_t parents[2];
    double attr;  // op constant: eps, exponent
    double aux;   // forward byproduct: inverse std, norm
    Tensor value;
    Tensor grad;
    bool has_grad;
    std::string name;
  };

  void check_owner(Var v, std::string_view op) const;
  Tensor& grad_slot(std::uint32_t id);
  void propagate(std::uint32_t id);

  std::deque<Node> nodes_;  // deque: Var::value() references survive later records
  std::vector<std::uint32_t> params_;
};

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
// W is [rows, cols], x is [cols].
Var matvec(Var w, Var x);
Var relu(Var x);
// (x - mean) / sqrt(var + eps), biased variance, no affine part.
Var layernorm(Var x, double eps = kLayerNormEps);
Var softplus(Var x);
Var log(Var x);
Var log1p(Var x);
Var exp(Var x);
Var sqrt(Var x);
Var sum(Var x);
Var dot(Var a, Var b);
Var l2norm(Var x);
// x / max(||x||, eps)
Var normalize(Var x, double eps);
Var scalar_pow(Var x, double p);
Var stop_gradient(Var x);

// Generic entry point: attr carries eps (layernorm, normalize) or the exponent (scalar_pow).
Var apply(Op op, std::span<const Var> inputs, double attr = 0.0);

// Convenience wrappers built from the ops above.
Var scale(Var x, double c);
Var add_scalar(Var x, double c);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }

}  // namespace vje::ad

#pragma once

// Tape-based reverse-mode differentiation over dense double tensors.
//
// A Graph is an append-only list of nodes. Every operation evaluates eagerly
// and caches its value, so the tape is also the forward trace. Leaves are
// either trainable (gradients are reported for them) or constants (gradient
// propagation stops there).

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "metalstm/tensor.hpp"

namespace metalstm::ad {

class Graph;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Op : std::uint8_t {
  Leaf,
  MatVec,
  MatMul,
  Add,
  Sub,
  Mul,
  Concat,
  Slice,
  Relu,
  Sigmoid,
  Log,
  Clamp,
  Sum,
  Mean,
  ScalarMul,
};

const char* op_name(Op op);

/// Handle to a node in a Graph. Cheap to copy; only valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  std::uint32_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
};

/// Gradients of a scalar root with respect to the trainable leaves of a graph.
class GradientMap {
 public:
  /// Gradient for a trainable leaf; zeros when the leaf is unreachable from the root.
  const Tensor& at(Var leaf) const;
  bool contains(Var leaf) const;

 private:
  friend class Graph;
  std::vector<std::uint32_t> leaf_ids_;
  std::vector<Tensor> grads_;
};

struct Node {
  Op op = Op::Leaf;
  bool requires_grad = false;
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  std::vector<std::uint32_t> inputs;  // concat only
  std::size_t offset = 0;             // slice
  double p0 = 0.0;                    // clamp lo, scalar_mul factor
  double p1 = 0.0;                    // clamp hi
  Tensor value;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var leaf(Tensor value);
  Var constant(Tensor value);

  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  /// Low-level append used by the primitive operations. Inputs must already
  /// be in this graph.
  Var append(Node node);

  /// Reverse sweep from a one-element root. Accumulation order is fixed by
  /// node order, so repeated calls are bit-identical.
  GradientMap backward(Var root) const;

 private:
  std::vector<Node> nodes_;
};

Var matvec(Var a, Var x);
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
/// Contiguous range of the flattened input, viewed with the given shape.
Var slice(Var x, std::size_t offset, Shape shape);
Var relu(Var x);
Var sigmoid(Var x);
Var log(Var x);
/// Hard clip to [lo, hi]; the gradient is zero where the input lies outside.
Var clamp(Var x, double lo, double hi);
Var sum(Var x);
Var mean(Var x);
Var scalar_mul(Var x, double c);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

/// Overflow-free logistic function.
double stable_sigmoid(double x);

/// Builds the loss on a fresh graph from trainable leaves holding `leaves`.
using LossBuilder = std::function<Var(Graph&, std::span<const Var>)>;

/// Compares reverse-mode gradients with central differences at every leaf
/// coordinate. Returns max |a-b| / max(|a|, |b|, 1e-8).
double grad_check(const LossBuilder& loss_fn, std::span<const Tensor> leaves, double step);

}  // namespace metalstm::ad

#include "metalstm/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace metalstm::ad {

namespace {

[[noreturn]] void shape_fail(Op op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op_name(op)) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

Graph& graph_of(Var a) {
  if (a.graph == nullptr) throw std::invalid_argument("operation on a detached Var");
  return *a.graph;
}

Graph& graph_of(Var a, Var b) {
  if (a.graph != b.graph) throw std::invalid_argument("operands belong to different graphs");
  return graph_of(a);
}

Node unary_node(Op op, Var x, Tensor value) {
  Node n;
  n.op = op;
  n.a = x.id;
  n.requires_grad = x.graph->requires_grad(x);
  n.value = std::move(value);
  return n;
}

Node binary_node(Op op, Var a, Var b, Tensor value) {
  Node n;
  n.op = op;
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = a.graph->requires_grad(a) || a.graph->requires_grad(b);
  n.value = std::move(value);
  return n;
}

template <typename F>
Var elementwise(Op op, Var a, Var b, F f) {
  Graph& g = graph_of(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.shape() != B.shape()) shape_fail(op, A.shape(), B.shape());
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(A[i], B[i]);
  return g.append(binary_node(op, a, b, Tensor(A.shape(), std::move(out))));
}

template <typename F>
Var map(Op op, Var x, F f) {
  Graph& g = graph_of(x);
  const Tensor& X = x.value();
  std::vector<double> out(X.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(X[i]);
  return g.append(unary_node(op, x, Tensor(X.shape(), std::move(out))));
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::MatVec: return "matvec";
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "elementwise_mul";
    case Op::Concat: return "concat";
    case Op::Slice: return "slice";
    case Op::Relu: return "relu";
    case Op::Sigmoid: return "sigmoid";
    case Op::Log: return "log";
    case Op::Clamp: return "clamp";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::ScalarMul: return "scalar_mul";
  }
  return "?";
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

const Tensor& Var::value() const { return graph->value(*this); }

const Tensor& GradientMap::at(Var leaf) const {
  auto it = std::lower_bound(leaf_ids_.begin(), leaf_ids_.end(), leaf.id);
  if (it == leaf_ids_.end() || *it != leaf.id) {
    throw std::invalid_argument("node " + std::to_string(leaf.id) + " is not a trainable leaf");
  }
  return grads_[static_cast<std::size_t>(it - leaf_ids_.begin())];
}

bool GradientMap::contains(Var leaf) const {
  return std::binary_search(leaf_ids_.begin(), leaf_ids_.end(), leaf.id);
}

Var Graph::append(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::leaf(Tensor value) {
  Node n;
  n.requires_grad = true;
  n.value = std::move(value);
  return append(std::move(n));
}

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return append(std::move(n));
}

Var matvec(Var a, Var x) {
  Graph& g = graph_of(a, x);
  const Tensor& A = a.value();
  const Tensor& v = x.value();
  if (A.rank() != 2 || v.rank() != 1 || A.shape()[1] != v.size()) shape_fail(Op::MatVec, A.shape(), v.shape());
  const std::size_t m = A.shape()[0];
  const std::size_t n = A.shape()[1];
  std::vector<double> out(m);
  const double* pa = A.data().data();
  const double* pv = v.data().data();
  for (std::size_t r = 0; r < m; ++r) {
    double acc = 0.0;
    const double* row = pa + r * n;
    for (std::size_t c = 0; c < n; ++c) acc += row[c] * pv[c];
    out[r] = acc;
  }
  return g.append(binary_node(Op::MatVec, a, x, Tensor({m}, std::move(out))));
}

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() != 2 || B.rank() != 2 || A.shape()[1] != B.shape()[0]) shape_fail(Op::MatMul, A.shape(), B.shape());
  const std::size_t m = A.shape()[0], k = A.shape()[1], n = B.shape()[1];
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * B[p * n + j];
    }
  }
  return g.append(binary_node(Op::MatMul, a, b, Tensor({m, n}, std::move(out))));
}

Var add(Var a, Var b) { return elementwise(Op::Add, a, b, [](double u, double v) { return u + v; }); }
Var sub(Var a, Var b) { return elementwise(Op::Sub, a, b, [](double u, double v) { return u - v; }); }
Var mul(Var a, Var b) { return elementwise(Op::Mul, a, b, [](double u, double v) { return u * v; }); }

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Graph& g = graph_of(parts.front());
  Node n;
  n.op = Op::Concat;
  std::vector<double> out;
  for (const Var& p : parts) {
    if (p.graph != &g) throw std::invalid_argument("operands belong to different graphs");
    const auto d = p.value().data();
    out.insert(out.end(), d.begin(), d.end());
    n.inputs.push_back(p.id);
    n.requires_grad = n.requires_grad || g.requires_grad(p);
  }
  const std::size_t len = out.size();
  n.value = Tensor({len}, std::move(out));
  return g.append(std::move(n));
}

Var concat(std::initializer_list<Var> parts) { return concat(std::span<const Var>(parts.begin(), parts.size())); }

Var slice(Var x, std::size_t offset, Shape shape) {
  Graph& g = graph_of(x);
  const Tensor& X = x.value();
  const std::size_t len = numel(shape);
  if (offset + len > X.size()) {
    throw ShapeError("slice: range [" + std::to_string(offset) + ", " + std::to_string(offset + len) +
                     ") exceeds input of shape " + shape_str(X.shape()));
  }
  const auto d = X.data();
  std::vector<double> out(d.begin() + static_cast<std::ptrdiff_t>(offset),
                          d.begin() + static_cast<std::ptrdiff_t>(offset + len));
  Node n = unary_node(Op::Slice, x, Tensor(std::move(shape), std::move(out)));
  n.offset = offset;
  return g.append(std::move(n));
}

Var relu(Var x) {
  return map(Op::Relu, x, [](double v) { return v > 0.0 ? v : 0.0; });
}

Var sigmoid(Var x) { return map(Op::Sigmoid, x, stable_sigmoid); }

Var log(Var x) {
  return map(Op::Log, x, [](double v) { return std::log(v); });
}

Var clamp(Var x, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("clamp: lo must be below hi");
  Graph& g = graph_of(x);
  const Tensor& X = x.value();
  std::vector<double> out(X.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(X[i], lo, hi);
  Node n = unary_node(Op::Clamp, x, Tensor(X.shape(), std::move(out)));
  n.p0 = lo;
  n.p1 = hi;
  return g.append(std::move(n));
}

Var sum(Var x) {
  Graph& g = graph_of(x);
  double acc = 0.0;
  for (double v : x.value().data()) acc += v;
  return g.append(unary_node(Op::Sum, x, Tensor::scalar(acc)));
}

Var mean(Var x) {
  Graph& g = graph_of(x);
  const Tensor& X = x.value();
  if (X.size() == 0) throw ShapeError("mean: empty input");
  double acc = 0.0;
  for (double v : X.data()) acc += v;
  return g.append(unary_node(Op::Mean, x, Tensor::scalar(acc / static_cast<double>(X.size()))));
}

Var scalar_mul(Var x, double c) {
  Graph& g = graph_of(x);
  const Tensor& X = x.value();
  std::vector<double> out(X.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * X[i];
  Node n = unary_node(Op::ScalarMul, x, Tensor(X.shape(), std::move(out)));
  n.p0 = c;
  return g.append(std::move(n));
}

GradientMap Graph::backward(Var root) const {
  if (root.graph != this) throw std::invalid_argument("backward: root belongs to another graph");
  if (nodes_[root.id].value.size() != 1) {
    throw ShapeError("backward: root must be scalar, got shape " + shape_str(nodes_[root.id].value.shape()));
  }

  std::vector<std::vector<double>> grads(static_cast<std::size_t>(root.id) + 1);
  auto grad_of = [&](std::uint32_t id) -> std::vector<double>& {
    auto& gv = grads[id];
    if (gv.empty()) gv.assign(nodes_[id].value.size(), 0.0);
    return gv;
  };
  grads[root.id].assign(1, 1.0);

  for (std::size_t idx = root.id + 1; idx-- > 0;) {
    const Node& n = nodes_[idx];
    if (!n.requires_grad || grads[idx].empty() || n.op == Op::Leaf) continue;
    const std::vector<double>& g = grads[idx];
    const auto wants = [&](std::uint32_t id) { return nodes_[id].requires_grad; };

    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::MatVec: {
        const Tensor& A = nodes_[n.a].value;
        const Tensor& x = nodes_[n.b].value;
        const std::size_t m = A.shape()[0], cols = A.shape()[1];
        if (wants(n.a)) {
          auto& ga = grad_of(n.a);
          for (std::size_t r = 0; r < m; ++r) {
            const double gr = g[r];
            double* row = ga.data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
          }
        }
        if (wants(n.b)) {
          auto& gx = grad_of(n.b);
          for (std::size_t r = 0; r < m; ++r) {
            const double gr = g[r];
            const double* row = A.data().data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) gx[c] += row[c] * gr;
          }
        }
        break;
      }
      case Op::MatMul: {
        const Tensor& A = nodes_[n.a].value;
        const Tensor& B = nodes_[n.b].value;
        const std::size_t m = A.shape()[0], k = A.shape()[1], cols = B.shape()[1];
        if (wants(n.a)) {
          auto& ga = grad_of(n.a);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              double acc = 0.0;
              for (std::size_t j = 0; j < cols; ++j) acc += g[i * cols + j] * B[p * cols + j];
              ga[i * k + p] += acc;
            }
        }
        if (wants(n.b)) {
          auto& gb = grad_of(n.b);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              const double aip = A[i * k + p];
              for (std::size_t j = 0; j < cols; ++j) gb[p * cols + j] += aip * g[i * cols + j];
            }
        }
        break;
      }
      case Op::Add:
      case Op::Sub: {
        const double sign = n.op == Op::Add ? 1.0 : -1.0;
        if (wants(n.a)) {
          auto& ga = grad_of(n.a);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (wants(n.b)) {
          auto& gb = grad_of(n.b);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign * g[i];
        }
        break;
      }
      case Op::Mul: {
        const Tensor& A = nodes_[n.a].value;
        const Tensor& B = nodes_[n.b].value;
        if (wants(n.a)) {
          auto& ga = grad_of(n.a);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
        }
        if (wants(n.b)) {
          auto& gb = grad_of(n.b);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
        }
        break;
      }
      case Op::Concat: {
        std::size_t off = 0;
        for (std::uint32_t in : n.inputs) {
          const std::size_t len = nodes_[in].value.size();
          if (wants(in)) {
            auto& gi = grad_of(in);
            for (std::size_t i = 0; i < len; ++i) gi[i] += g[off + i];
          }
          off += len;
        }
        break;
      }
      case Op::Slice: {
        auto& ga = grad_of(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[n.offset + i] += g[i];
        break;
      }
      case Op::Relu: {
        const Tensor& X = nodes_[n.a].value;
        auto& ga = grad_of(n.a);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (X[i] > 0.0) ga[i] += g[i];
        break;
      }
      case Op::Sigmoid: {
        auto& ga = grad_of(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double s = n.value[i];
          ga[i] += g[i] * s * (1.0 - s);
        }
        break;
      }
      case Op::Log: {
        const Tensor& X = nodes_[n.a].value;
        auto& ga = grad_of(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / X[i];
        break;
      }
      case Op::Clamp: {
        const Tensor& X = nodes_[n.a].value;
        auto& ga = grad_of(n.a);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (X[i] >= n.p0 && X[i] <= n.p1) ga[i] += g[i];
        break;
      }
      case Op::Sum:
      case Op::Mean: {
        auto& ga = grad_of(n.a);
        const double scale = n.op == Op::Sum ? g[0] : g[0] / static_cast<double>(ga.size());
        for (double& v : ga) v += scale;
        break;
      }
      case Op::ScalarMul: {
        auto& ga = grad_of(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.p0 * g[i];
        break;
      }
    }
  }

  GradientMap out;
  for (std::uint32_t id = 0; id < nodes_.size(); ++id) {
    const Node& n = nodes_[id];
    if (n.op != Op::Leaf || !n.requires_grad) continue;
    out.leaf_ids_.push_back(id);
    if (id < grads.size() && !grads[id].empty()) {
      out.grads_.emplace_back(n.value.shape(), std::move(grads[id]));
    } else {
      out.grads_.emplace_back(n.value.shape(), 0.0);
    }
  }
  return out;
}

double grad_check(const LossBuilder& loss_fn, std::span<const Tensor> leaves, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grad_check: step must be positive");

  std::vector<Tensor> analytic;
  {
    Graph g;
    std::vector<Var> vars;
    vars.reserve(leaves.size());
    for (const Tensor& t : leaves) vars.push_back(g.leaf(t));
    const Var root = loss_fn(g, vars);
    const GradientMap grads = g.backward(root);
    for (const Var& v : vars) analytic.push_back(grads.at(v));
  }

  std::vector<Tensor> probe(leaves.begin(), leaves.end());
  auto evaluate = [&]() {
    Graph g;
    std::vector<Var> vars;
    vars.reserve(probe.size());
    for (const Tensor& t : probe) vars.push_back(g.constant(t));
    const double v = loss_fn(g, vars).value().item();
    if (!std::isfinite(v)) throw std::runtime_error("grad_check: non-finite loss at perturbed point");
    return v;
  };

  double worst = 0.0;
  for (std::size_t l = 0; l < probe.size(); ++l) {
    for (std::size_t i = 0; i < probe[l].size(); ++i) {
      const double orig = probe[l][i];
      probe[l][i] = orig + step;
      const double fp = evaluate();
      probe[l][i] = orig - step;
      const double fm = evaluate();
      probe[l][i] = orig;
      const double numeric = (fp - fm) / (2.0 * step);
      const double exact = analytic[l][i];
      const double denom = std::max({std::abs(numeric), std::abs(exact), 1e-8});
      worst = std::max(worst, std::abs(numeric - exact) / denom);
    }
  }
  return worst;
}

}  // namespace metalstm::ad

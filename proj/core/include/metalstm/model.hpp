#pragma once

// One-hidden-layer perceptron whose parameters live in a flat vector:
//   o = sigmoid(W2 * relu(W1 * x + b1) + b2)
// Flat layout, row-major: [W1 (n_hidden x n_in), b1 (n_hidden), W2 (1 x n_hidden), b2 (1)].

#include <cstddef>
#include <span>
#include <vector>

#include "metalstm/autodiff.hpp"
#include "metalstm/tensor.hpp"

namespace metalstm {

struct ModelShape {
  std::size_t n_in = 5;
  std::size_t n_hidden = 32;
  std::size_t n_out = 1;

  void validate() const;
  bool operator==(const ModelShape&) const = default;
};

std::size_t param_count(const ModelShape& shape);

struct ModelLayers {
  Tensor w1;
  Tensor b1;
  Tensor w2;
  Tensor b2;
};

ModelLayers unpack(std::span<const double> theta, const ModelShape& shape);
std::vector<double> pack(const ModelLayers& layers);

/// Differentiable forward pass; `theta` is a flat parameter node, `x` an input node.
ad::Var model_forward(ad::Var theta, ad::Var x, const ModelShape& shape);

/// Graph-free forward pass for scoring.
double model_forward(std::span<const double> theta, std::span<const double> x, const ModelShape& shape);

}  // namespace metalstm

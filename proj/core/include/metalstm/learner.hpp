#pragma once

// Gated learner that rewrites the model parameters once per timestep.
//
//   x*      = relu-FC stack over [x_t, y_t * flag, flag, o_t]
//   z       = Wz x* + bz           (linear candidate)
//   i       = sigmoid(Wi x* + bi)
//   f       = sigmoid(Wf x* + bf)
//   theta'  = i * z + f * theta
//
// The cell state is the flat model parameter vector; there is no output gate.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "metalstm/autodiff.hpp"
#include "metalstm/model.hpp"
#include "metalstm/tensor.hpp"

namespace metalstm {

struct LearnerShape {
  std::size_t input_dim = 8;
  std::vector<std::size_t> fc_sizes{128, 256};
  std::size_t model_dim = 225;

  static LearnerShape for_model(const ModelShape& model, std::vector<std::size_t> fc_sizes);
  void validate() const;
  bool operator==(const LearnerShape&) const = default;
};

std::size_t alpha_count(const LearnerShape& shape, bool include_theta1);

struct LearnerParams {
  std::vector<Tensor> fc_weights;  // layer l: fc_sizes[l] x fan_in
  std::vector<Tensor> fc_biases;
  Tensor wz, bz;
  Tensor wi, bi;
  Tensor wf, bf;
  Tensor theta1;

  /// Every array in the fixed order used for flattening and serialization.
  std::vector<const Tensor*> arrays() const;
  std::vector<Tensor*> arrays();
  /// Section names matching arrays(): fc0.w, fc0.b, ..., gate.z.w, ..., theta1.
  std::vector<std::string> array_names() const;

  std::size_t size() const;
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  /// Shape implied by the stored arrays; throws if they are inconsistent.
  LearnerShape shape() const;

  bool operator==(const LearnerParams&) const = default;
};

/// Glorot-uniform weights, bz = 0, bi = -3, bf = +3, theta1 ~ U(-0.1, 0.1).
LearnerParams init_alpha(const LearnerShape& shape, std::uint64_t seed);

/// Learner parameters placed in a graph, either as trainable leaves or constants.
struct LearnerVars {
  std::vector<ad::Var> fc_weights;
  std::vector<ad::Var> fc_biases;
  ad::Var wz, bz, wi, bi, wf, bf;
  ad::Var theta1;

  std::vector<ad::Var> all() const;
};

LearnerVars bind(ad::Graph& graph, const LearnerParams& params, bool trainable);

struct GateValues {
  ad::Var candidate;
  ad::Var input_gate;
  ad::Var forget_gate;
};

/// One learner update. `features` is the constant [x_t, y_t * flag, flag] prefix,
/// `prediction` the model output o_t for the same sample.
ad::Var learner_step(const LearnerVars& alpha, ad::Var features, ad::Var prediction, ad::Var theta,
                     GateValues* gates = nullptr);

/// Convenience wrapper taking the raw sample. Requires y_masked == 0 when flag == 0.
ad::Var learner_step(const LearnerVars& alpha, std::span<const double> x, double y_masked, double flag,
                     ad::Var prediction, ad::Var theta, GateValues* gates = nullptr);

}  // namespace metalstm

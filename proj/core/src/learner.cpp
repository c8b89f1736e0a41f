#include "metalstm/learner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "metalstm/rng.hpp"

namespace metalstm {

LearnerShape LearnerShape::for_model(const ModelShape& model, std::vector<std::size_t> fc_sizes) {
  LearnerShape s;
  s.input_dim = model.n_in + 3;
  s.fc_sizes = std::move(fc_sizes);
  s.model_dim = param_count(model);
  s.validate();
  return s;
}

void LearnerShape::validate() const {
  if (input_dim < 4) throw std::invalid_argument("learner shape: input_dim must be n_in + 3 >= 4");
  if (fc_sizes.empty()) throw std::invalid_argument("learner shape: at least one FC layer required");
  for (auto w : fc_sizes)
    if (w < 1) throw std::invalid_argument("learner shape: FC widths must be >= 1");
  if (model_dim < 1) throw std::invalid_argument("learner shape: model_dim must be >= 1");
}

std::size_t alpha_count(const LearnerShape& shape, bool include_theta1) {
  shape.validate();
  std::size_t count = 0;
  std::size_t fan_in = shape.input_dim;
  for (auto w : shape.fc_sizes) {
    count += fan_in * w + w;
    fan_in = w;
  }
  count += 3 * (fan_in * shape.model_dim + shape.model_dim);
  if (include_theta1) count += shape.model_dim;
  return count;
}

std::vector<const Tensor*> LearnerParams::arrays() const {
  std::vector<const Tensor*> out;
  for (std::size_t l = 0; l < fc_weights.size(); ++l) {
    out.push_back(&fc_weights[l]);
    out.push_back(&fc_biases[l]);
  }
  for (const Tensor* t : {&wz, &bz, &wi, &bi, &wf, &bf, &theta1}) out.push_back(t);
  return out;
}

std::vector<Tensor*> LearnerParams::arrays() {
  std::vector<Tensor*> out;
  for (std::size_t l = 0; l < fc_weights.size(); ++l) {
    out.push_back(&fc_weights[l]);
    out.push_back(&fc_biases[l]);
  }
  for (Tensor* t : {&wz, &bz, &wi, &bi, &wf, &bf, &theta1}) out.push_back(t);
  return out;
}

std::vector<std::string> LearnerParams::array_names() const {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < fc_weights.size(); ++l) {
    out.push_back("fc" + std::to_string(l) + ".w");
    out.push_back("fc" + std::to_string(l) + ".b");
  }
  for (const char* n : {"gate.z.w", "gate.z.b", "gate.i.w", "gate.i.b", "gate.f.w", "gate.f.b", "theta1"}) {
    out.emplace_back(n);
  }
  return out;
}

std::size_t LearnerParams::size() const {
  std::size_t n = 0;
  for (const Tensor* t : arrays()) n += t->size();
  return n;
}

std::vector<double> LearnerParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(size());
  for (const Tensor* t : arrays()) flat.insert(flat.end(), t->data().begin(), t->data().end());
  return flat;
}

void LearnerParams::assign(std::span<const double> flat) {
  if (flat.size() != size()) {
    throw std::invalid_argument("learner params: expected " + std::to_string(size()) + " values, got " +
                                std::to_string(flat.size()));
  }
  std::size_t pos = 0;
  for (Tensor* t : arrays()) {
    std::copy(flat.begin() + pos, flat.begin() + pos + t->size(), t->data().begin());
    pos += t->size();
  }
}

LearnerShape LearnerParams::shape() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("learner params inconsistent: " + what); };
  if (fc_weights.empty() || fc_weights.size() != fc_biases.size()) fail("FC layer lists");
  LearnerShape s;
  s.fc_sizes.clear();
  if (fc_weights[0].rank() != 2) fail("fc0.w rank");
  s.input_dim = fc_weights[0].shape()[1];
  std::size_t fan_in = s.input_dim;
  for (std::size_t l = 0; l < fc_weights.size(); ++l) {
    const Tensor& w = fc_weights[l];
    if (w.rank() != 2 || w.shape()[1] != fan_in) fail("fc" + std::to_string(l) + ".w shape");
    if (fc_biases[l].shape() != Shape{w.shape()[0]}) fail("fc" + std::to_string(l) + ".b shape");
    s.fc_sizes.push_back(w.shape()[0]);
    fan_in = w.shape()[0];
  }
  s.model_dim = theta1.size();
  const Shape gate_w{s.model_dim, fan_in};
  const Shape gate_b{s.model_dim};
  if (theta1.shape() != gate_b) fail("theta1 shape");
  if (wz.shape() != gate_w || wi.shape() != gate_w || wf.shape() != gate_w) fail("gate weight shape");
  if (bz.shape() != gate_b || bi.shape() != gate_b || bf.shape() != gate_b) fail("gate bias shape");
  s.validate();
  return s;
}

LearnerParams init_alpha(const LearnerShape& shape, std::uint64_t seed) {
  shape.validate();
  Rng rng(seed);
  auto glorot = [&](std::size_t rows, std::size_t cols) {
    const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor t({rows, cols});
    for (double& v : t.data()) v = rng.uniform(-s, s);
    return t;
  };

  LearnerParams p;
  std::size_t fan_in = shape.input_dim;
  for (auto w : shape.fc_sizes) {
    p.fc_weights.push_back(glorot(w, fan_in));
    p.fc_biases.emplace_back(Shape{w}, 0.0);
    fan_in = w;
  }
  const std::size_t m = shape.model_dim;
  p.wz = glorot(m, fan_in);
  p.bz = Tensor({m}, 0.0);
  p.wi = glorot(m, fan_in);
  p.bi = Tensor({m}, -3.0);
  p.wf = glorot(m, fan_in);
  p.bf = Tensor({m}, 3.0);
  p.theta1 = Tensor({m});
  for (double& v : p.theta1.data()) v = rng.uniform(-0.1, 0.1);
  return p;
}

std::vector<ad::Var> LearnerVars::all() const {
  std::vector<ad::Var> out;
  for (std::size_t l = 0; l < fc_weights.size(); ++l) {
    out.push_back(fc_weights[l]);
    out.push_back(fc_biases[l]);
  }
  for (ad::Var v : {wz, bz, wi, bi, wf, bf, theta1}) out.push_back(v);
  return out;
}

LearnerVars bind(ad::Graph& graph, const LearnerParams& params, bool trainable) {
  params.shape();
  auto put = [&](const Tensor& t) { return trainable ? graph.leaf(t) : graph.constant(t); };
  LearnerVars v;
  for (std::size_t l = 0; l < params.fc_weights.size(); ++l) {
    v.fc_weights.push_back(put(params.fc_weights[l]));
    v.fc_biases.push_back(put(params.fc_biases[l]));
  }
  v.wz = put(params.wz);
  v.bz = put(params.bz);
  v.wi = put(params.wi);
  v.bi = put(params.bi);
  v.wf = put(params.wf);
  v.bf = put(params.bf);
  v.theta1 = put(params.theta1);
  return v;
}

ad::Var learner_step(const LearnerVars& alpha, ad::Var features, ad::Var prediction, ad::Var theta,
                     GateValues* gates) {
  if (prediction.size() != 1) throw ad::ShapeError("learner step: prediction must hold one value");
  if (theta.size() != alpha.theta1.size()) {
    throw ad::ShapeError("learner step: cell state has " + std::to_string(theta.size()) + " entries, expected " +
                         std::to_string(alpha.theta1.size()));
  }
  const std::size_t want_in = alpha.fc_weights.front().shape()[1];
  if (features.size() + 1 != want_in) {
    throw ad::ShapeError("learner step: input has " + std::to_string(features.size() + 1) + " entries, expected " +
                         std::to_string(want_in));
  }

  const ad::Var o = prediction.shape().size() == 1 ? prediction : ad::slice(prediction, 0, {1});
  ad::Var h = ad::concat({features, o});
  for (std::size_t l = 0; l < alpha.fc_weights.size(); ++l) {
    h = ad::relu(ad::matvec(alpha.fc_weights[l], h) + alpha.fc_biases[l]);
  }
  const ad::Var z = ad::matvec(alpha.wz, h) + alpha.bz;
  const ad::Var i = ad::sigmoid(ad::matvec(alpha.wi, h) + alpha.bi);
  const ad::Var f = ad::sigmoid(ad::matvec(alpha.wf, h) + alpha.bf);
  if (gates != nullptr) *gates = {z, i, f};
  return i * z + f * theta;
}

ad::Var learner_step(const LearnerVars& alpha, std::span<const double> x, double y_masked, double flag,
                     ad::Var prediction, ad::Var theta, GateValues* gates) {
  if (flag != 0.0 && flag != 1.0) throw std::invalid_argument("learner step: flag must be 0 or 1");
  if (flag == 0.0 && y_masked != 0.0) throw std::invalid_argument("learner step: target must be masked when flag is 0");
  std::vector<double> feats(x.begin(), x.end());
  feats.push_back(y_masked);
  feats.push_back(flag);
  const ad::Var features = prediction.graph->constant(Tensor::vector(std::move(feats)));
  return learner_step(alpha, features, prediction, theta, gates);
}

}  // namespace metalstm

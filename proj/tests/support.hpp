#pragma once

#include <span>
#include <vector>

#include "metalstm/autodiff.hpp"
#include "metalstm/datagen.hpp"
#include "metalstm/episode.hpp"
#include "metalstm/learner.hpp"
#include "metalstm/model.hpp"

namespace metalstm::testing {

inline ModelShape tiny_model() { return ModelShape{2, 4, 1}; }

inline LearnerShape tiny_learner(std::vector<std::size_t> fc = {8, 8}) {
  return LearnerShape::for_model(tiny_model(), std::move(fc));
}

/// Six samples, two features, tau = 3.
inline GenConfig tiny_gen() {
  GenConfig g;
  g.n_in = 2;
  g.n_samples = 6;
  g.train_fraction_min = 0.4;
  g.train_fraction_max = 0.4;
  return g;
}

inline LabeledDataset tiny_dataset(std::uint64_t seed = 1) { return gen_dataset_at(tiny_gen(), seed, 0).dataset; }

/// Rebuilds LearnerVars from leaves laid out in LearnerParams::arrays() order.
inline LearnerVars vars_from_leaves(std::span<const ad::Var> v, std::size_t n_fc) {
  LearnerVars lv;
  std::size_t k = 0;
  for (std::size_t l = 0; l < n_fc; ++l) {
    lv.fc_weights.push_back(v[k++]);
    lv.fc_biases.push_back(v[k++]);
  }
  lv.wz = v[k++];
  lv.bz = v[k++];
  lv.wi = v[k++];
  lv.bi = v[k++];
  lv.wf = v[k++];
  lv.bf = v[k++];
  lv.theta1 = v[k++];
  return lv;
}

inline std::vector<Tensor> leaves_of(const LearnerParams& p) {
  std::vector<Tensor> out;
  for (const Tensor* t : p.arrays()) out.push_back(*t);
  return out;
}

/// All weights zero; gate biases saturate so theta is carried unchanged.
inline LearnerParams frozen_learner(const LearnerShape& shape, std::vector<double> theta1) {
  LearnerParams p = init_alpha(shape, 0);
  for (Tensor* t : p.arrays()) std::fill(t->values().begin(), t->values().end(), 0.0);
  std::fill(p.bf.values().begin(), p.bf.values().end(), 40.0);
  std::fill(p.bi.values().begin(), p.bi.values().end(), -40.0);
  p.theta1.values() = std::move(theta1);
  return p;
}

inline LabeledDataset make_dataset(std::size_t n_in, std::vector<double> x, std::vector<std::uint8_t> y,
                                   std::size_t tau) {
  LabeledDataset d;
  d.x = Tensor({y.size(), n_in}, std::move(x));
  d.y = std::move(y);
  d.tau = tau;
  return d;
}

}  // namespace metalstm::testing

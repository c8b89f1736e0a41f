#pragma once

// Episodes: a dataset presented one sample at a time, training samples first.
// At each timestep the model predicts with its current parameters, then the
// learner produces the next parameters. Targets of test samples (t >= tau)
// are masked before they reach the learner.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "metalstm/autodiff.hpp"
#include "metalstm/learner.hpp"
#include "metalstm/model.hpp"
#include "metalstm/tensor.hpp"

namespace metalstm {

inline constexpr double kProbabilityFloor = 1e-7;

/// One episode's data. `tau` is the 1-based index of the first test sample,
/// so samples 1..tau-1 are training and tau..n are test.
struct LabeledDataset {
  Tensor x;                     // n x n_in
  std::vector<std::uint8_t> y;  // n labels in {0, 1}
  std::size_t tau = 1;

  std::size_t size() const { return y.size(); }
  std::size_t n_in() const { return x.rank() == 2 ? x.shape()[1] : 0; }
  std::size_t train_count() const { return tau - 1; }
  std::size_t test_count() const { return size() + 1 - tau; }
  std::span<const double> row(std::size_t i) const { return x.data().subspan(i * n_in(), n_in()); }

  /// Throws unless x/y agree, labels are binary, x is finite and 2 <= tau <= n.
  void validate() const;

  bool operator==(const LabeledDataset&) const = default;
};

struct EpisodeTrace {
  std::vector<double> predictions;             // o_1..o_n
  std::vector<double> losses;                  // per-sample cross-entropy
  std::vector<std::vector<double>> snapshots;  // theta_1..theta_{n+1}, when recorded
};

/// [x_t, y_t * 1{t<tau}, 1{t<tau}, o_t] for 1-based t.
std::vector<double> build_learner_input(const LabeledDataset& data, std::size_t t, double prediction);

/// -(y ln o + (1-y) ln(1-o)) with o clipped to [1e-7, 1 - 1e-7].
double cross_entropy(double o, int y);
ad::Var cross_entropy(ad::Var o, int y);

struct UnrolledEpisode {
  std::vector<ad::Var> predictions;
  std::vector<ad::Var> losses;
  std::vector<ad::Var> states;  // theta_1..theta_{n+1}
};

/// Unrolls the full episode into `graph` using already bound learner variables.
UnrolledEpisode unroll_episode(const LearnerVars& alpha, const ModelShape& model, const LabeledDataset& data);

/// Mean cross-entropy over all timesteps of one unrolled episode, as a graph node.
ad::Var episode_train_loss(const UnrolledEpisode& episode);

EpisodeTrace run_episode(const LearnerParams& alpha, const ModelShape& model, const LabeledDataset& data,
                         bool record_snapshots);

/// Mean loss over the test portion (t >= tau) of one trace.
double test_mean_loss(const EpisodeTrace& trace, std::size_t tau);

/// Per-dataset test-portion mean, averaged over datasets.
double cost_eval(std::span<const EpisodeTrace> traces, std::span<const std::size_t> taus);

/// Per-dataset mean over every timestep, averaged over datasets.
double cost_train(std::span<const EpisodeTrace> traces);

}  // namespace metalstm

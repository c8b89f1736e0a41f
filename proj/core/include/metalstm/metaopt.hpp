#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "metalstm/datagen.hpp"
#include "metalstm/learner.hpp"
#include "metalstm/model.hpp"

namespace metalstm {

/// Per-coordinate SMORMS3 accumulators.
struct Smorms3State {
  static constexpr double kEps = 1e-16;

  std::vector<double> g1;
  std::vector<double> g2;
  std::vector<double> mem;

  static Smorms3State zeros(std::size_t n);
  std::size_t size() const { return g1.size(); }
  bool operator==(const Smorms3State&) const = default;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  NonFiniteGradient(std::uint64_t iteration, std::size_t coordinate);
  std::uint64_t iteration() const { return iteration_; }
  std::size_t coordinate() const { return coordinate_; }

 private:
  std::uint64_t iteration_;
  std::size_t coordinate_;
};

/// One SMORMS3 update:
///   r = 1/(mem+1); g1 = (1-r) g1 + r g; g2 = (1-r) g2 + r g^2; x = g1^2/(g2+eps)
///   p -= g * min(lr, x) / (sqrt(g2) + eps); mem = 1 + mem (1 - x)
/// Gradients are checked for finiteness before any state changes.
void smorms3_step(Smorms3State& state, std::span<double> params, std::span<const double> grads, double lr,
                  std::uint64_t iteration = 0);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::uint64_t iterations = 50000;
  std::uint64_t seed = 1;
  std::size_t pool_size = 10000;
  std::uint64_t checkpoint_every = 1000;
  std::uint64_t log_every = 100;
  double clip_norm = 0.0;  // 0 disables max-norm clipping

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct Checkpoint {
  ModelShape model;
  LearnerShape learner;
  LearnerParams params;
  Smorms3State optimizer;
  std::uint64_t iteration = 0;
  std::uint64_t seed = 0;
  std::string config_echo;  // JSON text of the run configuration

  bool operator==(const Checkpoint&) const = default;
};

struct LossRecord {
  std::uint64_t iteration;
  double loss;
};

struct TrainHooks {
  std::function<void(std::uint64_t iteration, double loss)> on_log;
  std::function<void(const Checkpoint&)> on_checkpoint;
  /// Polled after each iteration; returning true stops at the next checkpoint boundary.
  std::function<bool()> should_stop;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossRecord> losses;
};

class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(const std::string& what, Checkpoint last_good);
  const Checkpoint& last_good() const { return last_good_; }

 private:
  Checkpoint last_good_;
};

/// Seeds derived from the master seed for each independent stream of a run.
std::uint64_t init_seed(std::uint64_t master);
std::uint64_t pool_seed(std::uint64_t master);
std::size_t draw_pool_index(std::uint64_t master, std::uint64_t iteration, std::size_t pool_size);

/// Initial checkpoint: init_alpha with the run's init seed and fresh optimizer state.
Checkpoint initial_checkpoint(const ModelShape& model, const std::vector<std::size_t>& fc_sizes,
                              const TrainConfig& train, std::string config_echo);

/// Gradient of the all-timestep mean loss of one episode with respect to every
/// learner parameter, flattened in LearnerParams::flatten order.
struct EpisodeGradient {
  double loss = 0.0;
  std::vector<double> grad;
};
EpisodeGradient episode_gradient(const LearnerParams& alpha, const ModelShape& model, const LabeledDataset& data);

/// Stochastic meta-training: one generated episode per iteration, SMORMS3 on
/// the all-timestep loss. Continues from `start` (its iteration count included).
TrainResult meta_train(Checkpoint start, const GenConfig& gen, const TrainConfig& train, const TrainHooks& hooks = {});

/// Same loop on one fixed dataset, for capacity checks.
TrainResult meta_train_on(Checkpoint start, const LabeledDataset& data, const TrainConfig& train,
                          const TrainHooks& hooks = {});

}  // namespace metalstm

#include "metalstm/metaopt.hpp"

#include <algorithm>
#include <cmath>

#include "metalstm/autodiff.hpp"
#include "metalstm/episode.hpp"
#include "metalstm/rng.hpp"

namespace metalstm {

Smorms3State Smorms3State::zeros(std::size_t n) {
  return Smorms3State{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)};
}

NonFiniteGradient::NonFiniteGradient(std::uint64_t iteration, std::size_t coordinate)
    : std::runtime_error("non-finite gradient at iteration " + std::to_string(iteration) + ", coordinate " +
                         std::to_string(coordinate)),
      iteration_(iteration),
      coordinate_(coordinate) {}

void smorms3_step(Smorms3State& state, std::span<double> params, std::span<const double> grads, double lr,
                  std::uint64_t iteration) {
  if (params.size() != grads.size() || params.size() != state.size()) {
    throw std::invalid_argument("smorms3: params, grads and state must have equal lengths");
  }
  if (!(lr > 0.0)) throw std::invalid_argument("smorms3: learning rate must be > 0");
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!std::isfinite(grads[i])) throw NonFiniteGradient(iteration, i);

  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double r = 1.0 / (state.mem[i] + 1.0);
    state.g1[i] = (1.0 - r) * state.g1[i] + r * g;
    state.g2[i] = (1.0 - r) * state.g2[i] + r * g * g;
    const double x = state.g1[i] * state.g1[i] / (state.g2[i] + Smorms3State::kEps);
    params[i] -= g * std::min(lr, x) / (std::sqrt(state.g2[i]) + Smorms3State::kEps);
    state.mem[i] = 1.0 + state.mem[i] * (1.0 - x);
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("training: learning_rate must be > 0");
  if (pool_size < 1) throw std::invalid_argument("training: pool_size must be >= 1");
  if (checkpoint_every < 1) throw std::invalid_argument("training: checkpoint_every must be >= 1");
  if (log_every < 1) throw std::invalid_argument("training: log_every must be >= 1");
  if (clip_norm < 0.0) throw std::invalid_argument("training: clip_norm must be >= 0");
}

TrainingAborted::TrainingAborted(const std::string& what, Checkpoint last_good)
    : std::runtime_error(what), last_good_(std::move(last_good)) {}

std::uint64_t init_seed(std::uint64_t master) { return derive_seed(master, 0x696e6974ULL); }
std::uint64_t pool_seed(std::uint64_t master) { return derive_seed(master, 0x706f6f6cULL); }

std::size_t draw_pool_index(std::uint64_t master, std::uint64_t iteration, std::size_t pool_size) {
  Rng rng(derive_seed(derive_seed(master, 0x64726177ULL), iteration));
  return static_cast<std::size_t>(rng.below(pool_size));
}

Checkpoint initial_checkpoint(const ModelShape& model, const std::vector<std::size_t>& fc_sizes,
                              const TrainConfig& train, std::string config_echo) {
  Checkpoint c;
  c.model = model;
  c.learner = LearnerShape::for_model(model, fc_sizes);
  c.params = init_alpha(c.learner, init_seed(train.seed));
  c.optimizer = Smorms3State::zeros(c.params.size());
  c.iteration = 0;
  c.seed = train.seed;
  c.config_echo = std::move(config_echo);
  return c;
}

EpisodeGradient episode_gradient(const LearnerParams& alpha, const ModelShape& model, const LabeledDataset& data) {
  ad::Graph g;
  const LearnerVars vars = bind(g, alpha, true);
  const UnrolledEpisode ep = unroll_episode(vars, model, data);
  const ad::Var loss = episode_train_loss(ep);
  const ad::GradientMap grads = g.backward(loss);

  EpisodeGradient out;
  out.loss = loss.value().item();
  out.grad.reserve(alpha.size());
  for (const ad::Var& v : vars.all()) {
    const auto d = grads.at(v).data();
    out.grad.insert(out.grad.end(), d.begin(), d.end());
  }
  return out;
}

namespace {

void clip(std::vector<double>& grad, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (double& g : grad) g *= s;
  }
}

template <typename DataFn>
TrainResult train_loop(Checkpoint ckpt, const TrainConfig& train, const TrainHooks& hooks, DataFn&& data_for) {
  train.validate();
  ckpt.params.shape();
  if (ckpt.optimizer.size() != ckpt.params.size()) ckpt.optimizer = Smorms3State::zeros(ckpt.params.size());
  ckpt.seed = train.seed;

  TrainResult result;
  std::vector<double> flat = ckpt.params.flatten();
  while (ckpt.iteration < train.iterations) {
    const std::uint64_t it = ckpt.iteration;
    const LabeledDataset data = data_for(it);
    EpisodeGradient eg = episode_gradient(ckpt.params, ckpt.model, data);
    if (!std::isfinite(eg.loss)) {
      throw TrainingAborted("non-finite loss at iteration " + std::to_string(it), ckpt);
    }
    clip(eg.grad, train.clip_norm);
    try {
      Smorms3State next = ckpt.optimizer;
      smorms3_step(next, flat, eg.grad, train.learning_rate, it);
      ckpt.optimizer = std::move(next);
    } catch (const NonFiniteGradient& e) {
      throw TrainingAborted(e.what(), ckpt);
    }
    ckpt.params.assign(flat);
    ckpt.iteration = it + 1;
    result.losses.push_back({it, eg.loss});

    if (hooks.on_log && (ckpt.iteration % train.log_every == 0 || ckpt.iteration == train.iterations)) {
      hooks.on_log(it, eg.loss);
    }
    if (ckpt.iteration % train.checkpoint_every == 0) {
      if (hooks.on_checkpoint) hooks.on_checkpoint(ckpt);
      if (hooks.should_stop && hooks.should_stop()) break;
    }
  }
  result.checkpoint = std::move(ckpt);
  return result;
}

}  // namespace

TrainResult meta_train(Checkpoint start, const GenConfig& gen, const TrainConfig& train, const TrainHooks& hooks) {
  gen.validate();
  if (gen.n_in != start.model.n_in) throw std::invalid_argument("meta_train: generator n_in differs from the model");
  const std::uint64_t data_seed = pool_seed(train.seed);
  return train_loop(std::move(start), train, hooks, [&](std::uint64_t it) {
    const std::size_t idx = draw_pool_index(train.seed, it, train.pool_size);
    return gen_dataset_at(gen, data_seed, idx).dataset;
  });
}

TrainResult meta_train_on(Checkpoint start, const LabeledDataset& data, const TrainConfig& train,
                          const TrainHooks& hooks) {
  return train_loop(std::move(start), train, hooks, [&](std::uint64_t) { return data; });
}

}  // namespace metalstm

#include <benchmark/benchmark.h>

#include "metalstm/baselines.hpp"
#include "metalstm/datagen.hpp"
#include "metalstm/episode.hpp"
#include "metalstm/metaopt.hpp"

using namespace metalstm;

namespace {

struct Setup {
  ModelShape model;
  LearnerParams alpha;
  LabeledDataset data;
};

Setup make_setup(std::size_t n_in, std::size_t n_hidden, std::size_t fc, std::size_t n) {
  Setup s;
  s.model = ModelShape{n_in, n_hidden, 1};
  s.alpha = init_alpha(LearnerShape::for_model(s.model, {fc, fc}), 1);
  GenConfig g;
  g.n_in = n_in;
  g.n_samples = n;
  s.data = gen_dataset_at(g, 1, 0).dataset;
  return s;
}

// Args: n_in, n_hidden, fc width, episode length.
void BM_EpisodeForward(benchmark::State& state) {
  const Setup s = make_setup(state.range(0), state.range(1), state.range(2), state.range(3));
  for (auto _ : state) benchmark::DoNotOptimize(run_episode(s.alpha, s.model, s.data, false));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.data.size()));
}
BENCHMARK(BM_EpisodeForward)->Args({2, 4, 32, 100})->Args({5, 32, 128, 200})->Unit(benchmark::kMicrosecond);

void BM_EpisodeGradient(benchmark::State& state) {
  const Setup s = make_setup(state.range(0), state.range(1), state.range(2), state.range(3));
  for (auto _ : state) benchmark::DoNotOptimize(episode_gradient(s.alpha, s.model, s.data));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.data.size()));
}
BENCHMARK(BM_EpisodeGradient)->Args({2, 4, 32, 100})->Args({5, 32, 128, 200})->Unit(benchmark::kMillisecond);

void BM_Smorms3Step(benchmark::State& state) {
  const std::size_t n = state.range(0);
  Smorms3State opt = Smorms3State::zeros(n);
  std::vector<double> params(n, 0.5), grads(n);
  Rng rng(3);
  for (auto& g : grads) g = rng.normal();
  for (auto _ : state) {
    smorms3_step(opt, params, grads, 1e-3);
    benchmark::DoNotOptimize(params.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Smorms3Step)->Arg(1402)->Arg(207876);

void BM_GenDataset(benchmark::State& state) {
  GenConfig g;
  g.n_samples = state.range(0);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(gen_dataset_at(g, 7, i++));
}
BENCHMARK(BM_GenDataset)->Arg(100)->Arg(200)->Unit(benchmark::kMicrosecond);

void BM_LogRegSelect(benchmark::State& state) {
  GenConfig g;
  g.n_samples = 200;
  g.beta_noise = 1.0;
  const LabeledDataset d = gen_dataset_at(g, 2, 0).dataset;
  for (auto _ : state) benchmark::DoNotOptimize(logreg_test_losses(d, HyperGrid::standard()));
}
BENCHMARK(BM_LogRegSelect)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "../support.hpp"
#include "metalstm/episode.hpp"
#include "metalstm/metaopt.hpp"
#include "metalstm/rng.hpp"

using namespace metalstm;
using namespace metalstm::testing;

namespace {

const double kLn2 = std::numbers::ln2;

LabeledDataset four_samples(std::size_t tau) {
  return make_dataset(2, {0.1, 0.2, -0.3, 0.4, 0.5, -0.6, 0.7, 0.8}, {1, 0, 1, 0}, tau);
}

EpisodeTrace constant_trace(const std::vector<std::uint8_t>& y, double o) {
  EpisodeTrace t;
  for (auto label : y) {
    t.predictions.push_back(o);
    t.losses.push_back(cross_entropy(o, label));
  }
  return t;
}

}  // namespace

TEST(LearnerInput, FlagAndMasking) {
  const LabeledDataset d = four_samples(3);
  EXPECT_EQ(build_learner_input(d, 2, 0.9), (std::vector<double>{-0.3, 0.4, 0.0, 1.0, 0.9}));
  EXPECT_EQ(build_learner_input(d, 1, 0.1), (std::vector<double>{0.1, 0.2, 1.0, 1.0, 0.1}));
  EXPECT_EQ(build_learner_input(d, 3, 0.4), (std::vector<double>{0.5, -0.6, 0.0, 0.0, 0.4}));
  EXPECT_EQ(build_learner_input(d, 4, 0.4), (std::vector<double>{0.7, 0.8, 0.0, 0.0, 0.4}));
  EXPECT_THROW(build_learner_input(d, 0, 0.5), std::out_of_range);
  EXPECT_THROW(build_learner_input(d, 5, 0.5), std::out_of_range);
}

TEST(CrossEntropy, ReferenceValues) {
  EXPECT_DOUBLE_EQ(cross_entropy(0.5, 0), kLn2);
  EXPECT_DOUBLE_EQ(cross_entropy(0.5, 1), kLn2);
  EXPECT_NEAR(cross_entropy(1.0 - 1e-7, 1), 1e-7, 1e-12);
  EXPECT_NEAR(cross_entropy(1.0, 0), 16.118, 1e-3);
  EXPECT_EQ(cross_entropy(1.0, 0), -std::log(1.0 - (1.0 - 1e-7)));
  EXPECT_EQ(cross_entropy(0.0, 1), -std::log(1e-7));
}

TEST(CrossEntropy, GraphMatchesScalar) {
  for (double o : {1e-9, 0.2, 0.5, 0.93, 1.0}) {
    for (int y : {0, 1}) {
      ad::Graph g;
      EXPECT_EQ(cross_entropy(g.constant(Tensor::vector({o})), y).value()[0], cross_entropy(o, y));
    }
  }
}

TEST(CostEval, ConstantHalfIsLn2) {
  const LabeledDataset d = four_samples(2);
  const std::vector<EpisodeTrace> traces{constant_trace(d.y, 0.5)};
  const std::vector<std::size_t> taus{2};
  EXPECT_DOUBLE_EQ(cost_eval(traces, taus), kLn2);
}

TEST(CostEval, TwoDatasetsAverageTheirTestMeans) {
  // Dataset A (tau = 3): test losses at t = 3, 4. Dataset B (tau = 2): t = 2..4.
  EpisodeTrace a, b;
  a.losses = {9.0, 9.0, 0.2, 0.6};
  b.losses = {5.0, 0.3, 0.3, 0.9};
  const double mean_a = (0.2 + 0.6) / 2.0;
  const double mean_b = (0.3 + 0.3 + 0.9) / 3.0;
  const std::vector<EpisodeTrace> traces{a, b};
  const std::vector<std::size_t> taus{3, 2};
  EXPECT_DOUBLE_EQ(cost_eval(traces, taus), (mean_a + mean_b) / 2.0);
}

TEST(CostEval, LastSampleOnlyWhenTauIsN) {
  EpisodeTrace t;
  t.losses = {1.0, 2.0, 3.0, 0.25};
  const std::vector<EpisodeTrace> traces{t};
  const std::vector<std::size_t> taus{4};
  EXPECT_EQ(cost_eval(traces, taus), 0.25);
}

TEST(CostEval, EmptyTestPortionNamesDataset) {
  EpisodeTrace t;
  t.losses = {1.0, 2.0};
  const std::vector<EpisodeTrace> traces{t, t};
  const std::vector<std::size_t> taus{2, 3};
  try {
    cost_eval(traces, taus);
    FAIL() << "expected error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("dataset 1"), std::string::npos) << e.what();
  }
}

TEST(CostTrain, MeansOverAllTimesteps) {
  EpisodeTrace t;
  t.losses = {0.2, 0.4, 0.6};
  const std::vector<EpisodeTrace> one{t};
  EXPECT_NEAR(cost_train(one), 0.4, 1e-15);
  EpisodeTrace u;
  u.losses = {1.0};
  const std::vector<EpisodeTrace> two{t, u};
  EXPECT_NEAR(cost_train(two), (0.4 + 1.0) / 2.0, 1e-15);
  EXPECT_THROW(cost_train(std::span<const EpisodeTrace>{}), std::invalid_argument);
}

TEST(CostTrain, EqualsCostEvalWhenTauIsOne) {
  EpisodeTrace a, b;
  a.losses = {0.1, 0.7, 0.3};
  b.losses = {2.0, 0.5};
  const std::vector<EpisodeTrace> traces{a, b};
  const std::vector<std::size_t> taus{1, 1};
  EXPECT_DOUBLE_EQ(cost_train(traces), cost_eval(traces, taus));
}

TEST(RunEpisode, FrozenZeroLearnerPredictsHalf) {
  const LabeledDataset d = tiny_dataset();
  const LearnerParams p = frozen_learner(tiny_learner(), std::vector<double>(17, 0.0));
  const EpisodeTrace t = run_episode(p, tiny_model(), d, true);
  ASSERT_EQ(t.predictions.size(), d.size());
  ASSERT_EQ(t.losses.size(), d.size());
  ASSERT_EQ(t.snapshots.size(), d.size() + 1);
  for (double o : t.predictions) EXPECT_EQ(o, 0.5);
  for (double l : t.losses) EXPECT_DOUBLE_EQ(l, kLn2);
  const std::vector<EpisodeTrace> traces{t};
  const std::vector<std::size_t> taus{d.tau};
  EXPECT_DOUBLE_EQ(cost_eval(traces, taus), kLn2);
  EXPECT_DOUBLE_EQ(cost_train(traces), kLn2);
}

TEST(RunEpisode, FrozenLearnerKeepsStateAndRepeatsPredictions) {
  Rng rng(4);
  std::vector<double> theta(17);
  for (auto& v : theta) v = rng.uniform(-1, 1);
  const LearnerParams p = frozen_learner(tiny_learner(), theta);
  // Identical inputs at every timestep.
  LabeledDataset d = make_dataset(2, {0.3, -0.2, 0.3, -0.2, 0.3, -0.2, 0.3, -0.2}, {1, 0, 0, 1}, 3);
  const EpisodeTrace t = run_episode(p, tiny_model(), d, true);
  for (const auto& snap : t.snapshots)
    for (std::size_t k = 0; k < 17; ++k) EXPECT_NEAR(snap[k], theta[k], 1e-15);
  for (double o : t.predictions) EXPECT_EQ(o, t.predictions.front());
}

TEST(RunEpisode, WithoutSnapshotsRecordsNone) {
  const EpisodeTrace t = run_episode(init_alpha(tiny_learner(), 1), tiny_model(), tiny_dataset(), false);
  EXPECT_TRUE(t.snapshots.empty());
  EXPECT_EQ(t.losses.size(), 6u);
}

TEST(RunEpisode, DimensionMismatchFails) {
  LabeledDataset d = make_dataset(3, std::vector<double>(12, 0.1), {0, 1, 0, 1}, 2);
  EXPECT_THROW(run_episode(init_alpha(tiny_learner(), 1), tiny_model(), d, false), std::invalid_argument);
}

TEST(RunEpisode, GraphAndTraceAgree) {
  const LabeledDataset d = tiny_dataset();
  const LearnerParams p = init_alpha(tiny_learner(), 2);
  const EpisodeTrace t = run_episode(p, tiny_model(), d, false);
  const EpisodeGradient eg = episode_gradient(p, tiny_model(), d);
  const std::vector<EpisodeTrace> traces{t};
  EXPECT_DOUBLE_EQ(eg.loss, cost_train(traces));
}

TEST(Property, TargetBlindnessOnTestPortion) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GenConfig g = tiny_gen();
    g.n_samples = 20;
    g.train_fraction_min = 0.2;
    g.train_fraction_max = 0.8;
    const LabeledDataset d = gen_dataset_at(g, seed, 0).dataset;
    const LearnerParams p = init_alpha(tiny_learner(), seed);
    const EpisodeTrace base = run_episode(p, tiny_model(), d, true);
    for (std::size_t t = d.tau; t <= d.size(); ++t) {
      LabeledDataset flipped = d;
      flipped.y[t - 1] ^= 1;
      const EpisodeTrace f = run_episode(p, tiny_model(), flipped, true);
      EXPECT_EQ(f.predictions, base.predictions);
      EXPECT_EQ(f.snapshots, base.snapshots);
    }
  }
}

TEST(Property, PredictThenUpdate) {
  // o_1 depends only on theta_1 and x_1: changing y_1 or any later sample leaves it intact.
  const LabeledDataset d = tiny_dataset(3);
  const LearnerParams p = init_alpha(tiny_learner(), 3);
  const double o1 = run_episode(p, tiny_model(), d, false).predictions[0];
  EXPECT_EQ(o1, model_forward(p.theta1.values(), d.row(0), tiny_model()));
  LabeledDataset changed = d;
  changed.y[0] ^= 1;
  for (std::size_t i = 2; i < changed.x.size(); ++i) changed.x.values()[i] += 1.0;
  EXPECT_EQ(run_episode(p, tiny_model(), changed, false).predictions[0], o1);
  EXPECT_NE(run_episode(p, tiny_model(), changed, false).predictions[1],
            run_episode(p, tiny_model(), d, false).predictions[1]);
}

TEST(Property, CostsNonNegative) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const LabeledDataset d = tiny_dataset(seed);
    const std::vector<EpisodeTrace> traces{run_episode(init_alpha(tiny_learner(), seed), tiny_model(), d, false)};
    const std::vector<std::size_t> taus{d.tau};
    EXPECT_GE(cost_eval(traces, taus), 0.0);
    EXPECT_GE(cost_train(traces), 0.0);
  }
}

TEST(Gradient, UnrolledEpisodePassesCheck) {
  const LabeledDataset d = tiny_dataset(1);
  ASSERT_EQ(d.size(), 6u);
  ASSERT_EQ(d.tau, 3u);
  const LearnerParams p = init_alpha(tiny_learner(), 1);
  auto loss = [&](ad::Graph&, std::span<const ad::Var> v) {
    return episode_train_loss(unroll_episode(vars_from_leaves(v, 2), tiny_model(), d));
  };
  const auto leaves = leaves_of(p);
  EXPECT_LT(ad::grad_check(loss, leaves, 1e-5), 1e-4);
}

TEST(Gradient, SeedSweepWithinRoundoffFloor) {
  // Relative error with an absolute floor for coordinates whose true gradient is
  // far below the central-difference resolution.
  const double h = 1e-5;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const LabeledDataset d = tiny_dataset(seed);
    LearnerParams p = init_alpha(tiny_learner(), seed);
    const EpisodeGradient eg = episode_gradient(p, tiny_model(), d);
    std::vector<double> flat = p.flatten();
    auto f = [&](const std::vector<double>& v) {
      LearnerParams q = p;
      q.assign(v);
      const std::vector<EpisodeTrace> t{run_episode(q, tiny_model(), d, false)};
      return cost_train(t);
    };
    for (std::size_t k = 0; k < flat.size(); ++k) {
      const double keep = flat[k];
      flat[k] = keep + h;
      const double up = f(flat);
      flat[k] = keep - h;
      const double down = f(flat);
      flat[k] = keep;
      const double fd = (up - down) / (2 * h);
      const double a = eg.grad[k];
      EXPECT_LE(std::abs(a - fd), 1e-4 * std::max(std::abs(a), std::abs(fd)) + 1e-10)
          << "seed " << seed << " coordinate " << k;
    }
  }
}

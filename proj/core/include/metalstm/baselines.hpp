#pragma once

// Hand-made comparison: L1/L2-regularized logistic regression fitted by
// full-batch proximal gradient descent, with k-fold hyperparameter selection,
// plus the shared test-portion scoring used for every method.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "metalstm/episode.hpp"
#include "metalstm/learner.hpp"
#include "metalstm/model.hpp"
#include "metalstm/tensor.hpp"

namespace metalstm {

enum class Penalty { L1, L2 };

const char* to_string(Penalty p);

struct LogRegModel {
  std::vector<double> w;
  double b = 0.0;
  Penalty penalty = Penalty::L2;
  double lambda = 0.0;

  double predict(std::span<const double> x) const;
};

struct LogRegOptions {
  double step = 0.1;
  std::size_t iterations = 2000;
};

/// Minimizes mean cross-entropy + lambda * R(w), R = ||w||_1 or 0.5 ||w||_2^2,
/// bias unpenalized, from a zero start. When `objective` is non-null it receives
/// the objective before the first step and after every step.
LogRegModel logreg_fit(const Tensor& x, std::span<const std::uint8_t> y, Penalty penalty, double lambda,
                       const LogRegOptions& options = {}, std::vector<double>* objective = nullptr);

double logreg_objective(const LogRegModel& model, const Tensor& x, std::span<const std::uint8_t> y);

struct GridPoint {
  Penalty penalty;
  double lambda;
  bool operator==(const GridPoint&) const = default;
};

struct HyperGrid {
  std::vector<GridPoint> points;
  std::size_t k = 5;

  /// {L1, L2} x {0.1, 1, 10}, L1 first, ascending lambda.
  static HyperGrid standard();
};

/// Contiguous k-fold selection by mean validation cross-entropy; the first
/// grid point wins ties.
GridPoint kfold_select(const Tensor& x, std::span<const std::uint8_t> y, const HyperGrid& grid,
                       const LogRegOptions& options = {});

/// Selects on the training portion, refits on all of it and returns the
/// clamped cross-entropy of every test sample.
std::vector<double> logreg_test_losses(const LabeledDataset& data, const HyperGrid& grid,
                                       const LogRegOptions& options = {});

/// Returns the per-sample test-portion losses of one dataset.
using Scorer = std::function<std::vector<double>(const LabeledDataset&)>;

struct SuiteScore {
  double mu = 0.0;
  double sigma = 0.0;  // population standard deviation
  std::vector<double> per_dataset;
};

SuiteScore summarize(std::vector<double> per_dataset);
SuiteScore evaluate_suite(const Scorer& scorer, std::span<const LabeledDataset> suite);

Scorer learned_scorer(const LearnerParams& alpha, const ModelShape& model);
Scorer logreg_scorer(HyperGrid grid = HyperGrid::standard(), LogRegOptions options = {});
Scorer constant_scorer(double probability);

}  // namespace metalstm

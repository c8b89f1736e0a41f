#pragma once

// Per-timestep trace of one episode, written as CSV:
//   t,flag,y,o,loss,test_mce,theta_0,...,theta_{P-1}
// Row t (1..n) holds the parameters theta_t used to predict sample t, the
// prediction and its loss, and the mean test-portion cross-entropy of the
// frozen theta_t. A final row t = n+1 holds the state after the last update;
// its flag/y/o/loss fields are empty.

#include <iosfwd>
#include <optional>
#include <vector>

#include "metalstm/episode.hpp"
#include "metalstm/metaopt.hpp"

namespace metalstm::cli {

struct TraceRow {
  std::size_t t = 0;
  std::optional<int> flag;
  std::optional<int> y;
  std::optional<double> prediction;
  std::optional<double> loss;
  double test_mce = 0.0;
  std::vector<double> theta;
};

/// Mean clamped cross-entropy of a frozen model over the test portion.
double frozen_test_mce(std::span<const double> theta, const ModelShape& model, const LabeledDataset& data);

std::vector<TraceRow> compute_trace(const LearnerParams& alpha, const ModelShape& model, const LabeledDataset& data);
void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows);

}  // namespace metalstm::cli

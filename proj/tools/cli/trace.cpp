#include "trace.hpp"

#include <cstdio>
#include <ostream>

namespace metalstm::cli {

double frozen_test_mce(std::span<const double> theta, const ModelShape& model, const LabeledDataset& data) {
  double acc = 0.0;
  for (std::size_t i = data.tau - 1; i < data.size(); ++i) {
    acc += cross_entropy(model_forward(theta, data.row(i), model), data.y[i]);
  }
  return acc / static_cast<double>(data.test_count());
}

std::vector<TraceRow> compute_trace(const LearnerParams& alpha, const ModelShape& model, const LabeledDataset& data) {
  const EpisodeTrace trace = run_episode(alpha, model, data, true);
  std::vector<TraceRow> rows;
  rows.reserve(data.size() + 1);
  for (std::size_t t = 1; t <= data.size() + 1; ++t) {
    TraceRow row;
    row.t = t;
    row.theta = trace.snapshots[t - 1];
    row.test_mce = frozen_test_mce(row.theta, model, data);
    if (t <= data.size()) {
      row.flag = t < data.tau ? 1 : 0;
      row.y = data.y[t - 1];
      row.prediction = trace.predictions[t - 1];
      row.loss = trace.losses[t - 1];
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  };
  os << "t,flag,y,o,loss,test_mce";
  const std::size_t p = rows.empty() ? 0 : rows.front().theta.size();
  for (std::size_t j = 0; j < p; ++j) os << ",theta_" << j;
  os << '\n';
  for (const auto& r : rows) {
    os << r.t << ',';
    if (r.flag) os << *r.flag;
    os << ',';
    if (r.y) os << *r.y;
    os << ',';
    if (r.prediction) os << num(*r.prediction);
    os << ',';
    if (r.loss) os << num(*r.loss);
    os << ',' << num(r.test_mce);
    for (double v : r.theta) os << ',' << num(v);
    os << '\n';
  }
}

}  // namespace metalstm::cli

#include "metalstm/episode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace metalstm {

void LabeledDataset::validate() const {
  if (x.rank() != 2) throw std::invalid_argument("dataset: inputs must be a matrix");
  if (x.shape()[0] != y.size()) {
    throw std::invalid_argument("dataset: " + std::to_string(x.shape()[0]) + " input rows but " +
                                std::to_string(y.size()) + " labels");
  }
  for (auto label : y)
    if (label > 1) throw std::invalid_argument("dataset: labels must be 0 or 1");
  for (double v : x.data())
    if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite input");
  if (tau < 2 || tau > size()) {
    throw std::invalid_argument("dataset: tau = " + std::to_string(tau) + " outside [2, " + std::to_string(size()) +
                                "]");
  }
}

std::vector<double> build_learner_input(const LabeledDataset& data, std::size_t t, double prediction) {
  if (t < 1 || t > data.size()) {
    throw std::out_of_range("learner input: timestep " + std::to_string(t) + " outside [1, " +
                            std::to_string(data.size()) + "]");
  }
  const bool train = t < data.tau;
  const auto row = data.row(t - 1);
  std::vector<double> out(row.begin(), row.end());
  out.push_back(train ? static_cast<double>(data.y[t - 1]) : 0.0);
  out.push_back(train ? 1.0 : 0.0);
  out.push_back(prediction);
  return out;
}

double cross_entropy(double o, int y) {
  const double p = std::clamp(o, kProbabilityFloor, 1.0 - kProbabilityFloor);
  return y == 1 ? -std::log(p) : -std::log(1.0 - p);
}

ad::Var cross_entropy(ad::Var o, int y) {
  const ad::Var p = ad::clamp(o, kProbabilityFloor, 1.0 - kProbabilityFloor);
  if (y == 1) return ad::scalar_mul(ad::log(p), -1.0);
  const ad::Var one = o.graph->constant(Tensor(o.shape(), 1.0));
  return ad::scalar_mul(ad::log(one - p), -1.0);
}

UnrolledEpisode unroll_episode(const LearnerVars& alpha, const ModelShape& model, const LabeledDataset& data) {
  data.validate();
  if (data.n_in() != model.n_in) {
    throw ad::ShapeError("episode: dataset has " + std::to_string(data.n_in()) + " features, model expects " +
                         std::to_string(model.n_in));
  }
  if (alpha.theta1.size() != param_count(model)) {
    throw ad::ShapeError("episode: learner state has " + std::to_string(alpha.theta1.size()) +
                         " entries, model needs " + std::to_string(param_count(model)));
  }
  ad::Graph& g = *alpha.theta1.graph;
  const std::size_t n = data.size();
  UnrolledEpisode ep;
  ep.predictions.reserve(n);
  ep.losses.reserve(n);
  ep.states.reserve(n + 1);
  ep.states.push_back(alpha.theta1);

  for (std::size_t t = 1; t <= n; ++t) {
    const auto row = data.row(t - 1);
    const ad::Var x = g.constant(Tensor::vector(std::vector<double>(row.begin(), row.end())));
    const ad::Var theta = ep.states.back();
    const ad::Var o = model_forward(theta, x, model);
    ep.predictions.push_back(o);
    ep.losses.push_back(cross_entropy(o, data.y[t - 1]));

    // o_t enters as a graph node, so drop the placeholder value.
    std::vector<double> feats = build_learner_input(data, t, 0.0);
    feats.pop_back();
    const ad::Var features = g.constant(Tensor::vector(std::move(feats)));
    ep.states.push_back(learner_step(alpha, features, o, theta));
  }
  return ep;
}

ad::Var episode_train_loss(const UnrolledEpisode& episode) {
  if (episode.losses.empty()) throw std::invalid_argument("episode loss: empty episode");
  return ad::mean(ad::concat(episode.losses));
}

EpisodeTrace run_episode(const LearnerParams& alpha, const ModelShape& model, const LabeledDataset& data,
                         bool record_snapshots) {
  ad::Graph g;
  const LearnerVars vars = bind(g, alpha, false);
  const UnrolledEpisode ep = unroll_episode(vars, model, data);
  EpisodeTrace trace;
  trace.predictions.reserve(ep.predictions.size());
  trace.losses.reserve(ep.losses.size());
  for (const ad::Var& o : ep.predictions) trace.predictions.push_back(o.value().item());
  for (const ad::Var& l : ep.losses) trace.losses.push_back(l.value().item());
  if (record_snapshots) {
    for (const ad::Var& s : ep.states) trace.snapshots.push_back(s.value().values());
  }
  return trace;
}

double test_mean_loss(const EpisodeTrace& trace, std::size_t tau) {
  const std::size_t n = trace.losses.size();
  if (tau < 1 || tau > n) {
    throw std::invalid_argument("test loss: tau = " + std::to_string(tau) + " leaves no test samples in " +
                                std::to_string(n));
  }
  double acc = 0.0;
  for (std::size_t t = tau; t <= n; ++t) acc += trace.losses[t - 1];
  return acc / static_cast<double>(n - tau + 1);
}

double cost_eval(std::span<const EpisodeTrace> traces, std::span<const std::size_t> taus) {
  if (traces.empty()) throw std::invalid_argument("cost_eval: no traces");
  if (traces.size() != taus.size()) throw std::invalid_argument("cost_eval: traces and taus differ in length");
  double acc = 0.0;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const std::size_t n = traces[i].losses.size();
    if (taus[i] < 1 || taus[i] > n) {
      throw std::invalid_argument("cost_eval: dataset " + std::to_string(i) + " has an empty test portion (tau=" +
                                  std::to_string(taus[i]) + ", n=" + std::to_string(n) + ")");
    }
    acc += test_mean_loss(traces[i], taus[i]);
  }
  return acc / static_cast<double>(traces.size());
}

double cost_train(std::span<const EpisodeTrace> traces) {
  if (traces.empty()) throw std::invalid_argument("cost_train: no traces");
  double acc = 0.0;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto& losses = traces[i].losses;
    if (losses.empty()) throw std::invalid_argument("cost_train: dataset " + std::to_string(i) + " is empty");
    double s = 0.0;
    for (double l : losses) s += l;
    acc += s / static_cast<double>(losses.size());
  }
  return acc / static_cast<double>(traces.size());
}

}  // namespace metalstm

#include "metalstm/baselines.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "metalstm/autodiff.hpp"

namespace metalstm {

const char* to_string(Penalty p) { return p == Penalty::L1 ? "L1" : "L2"; }

double LogRegModel::predict(std::span<const double> x) const {
  double z = b;
  for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * x[j];
  return ad::stable_sigmoid(z);
}

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void check_xy(const Tensor& x, std::span<const std::uint8_t> y) {
  if (x.rank() != 2 || x.rows() != y.size()) throw std::invalid_argument("logistic regression: X and y disagree");
}

Tensor take_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  const std::size_t d = x.cols();
  const auto src = x.data();
  return Tensor({end - begin, d}, std::vector<double>(src.begin() + begin * d, src.begin() + end * d));
}

Tensor drop_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  const std::size_t d = x.cols();
  const auto src = x.data();
  std::vector<double> out(src.begin(), src.begin() + begin * d);
  out.insert(out.end(), src.begin() + end * d, src.end());
  return Tensor({x.rows() - (end - begin), d}, std::move(out));
}

}  // namespace

double logreg_objective(const LogRegModel& m, const Tensor& x, std::span<const std::uint8_t> y) {
  check_xy(x, y);
  const std::size_t n = x.rows(), d = x.cols();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double z = m.b;
    for (std::size_t j = 0; j < d; ++j) z += m.w[j] * x[i * d + j];
    loss += softplus(z) - static_cast<double>(y[i]) * z;
  }
  loss /= static_cast<double>(n);
  double reg = 0.0;
  for (double w : m.w) reg += m.penalty == Penalty::L1 ? std::abs(w) : 0.5 * w * w;
  return loss + m.lambda * reg;
}

LogRegModel logreg_fit(const Tensor& x, std::span<const std::uint8_t> y, Penalty penalty, double lambda,
                       const LogRegOptions& options, std::vector<double>* objective) {
  check_xy(x, y);
  if (x.rows() < 2) throw std::invalid_argument("logistic regression: at least 2 samples required");
  if (lambda < 0.0) throw std::invalid_argument("logistic regression: lambda must be >= 0");
  const std::size_t n = x.rows(), d = x.cols();
  LogRegModel m{std::vector<double>(d, 0.0), 0.0, penalty, lambda};
  if (objective) objective->push_back(logreg_objective(m, x, y));

  const double inv_n = 1.0 / static_cast<double>(n);
  const double shrink = options.step * lambda;
  std::vector<double> gw(d);
  for (std::size_t it = 0; it < options.iterations; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = m.predict(x.data().subspan(i * d, d)) - static_cast<double>(y[i]);
      for (std::size_t j = 0; j < d; ++j) gw[j] += r * x[i * d + j];
      gb += r;
    }
    for (std::size_t j = 0; j < d; ++j) {
      double w = m.w[j] - options.step * gw[j] * inv_n;
      // Proximal step for the penalty; both are exact for their regularizer.
      if (penalty == Penalty::L1) {
        w = std::copysign(std::max(std::abs(w) - shrink, 0.0), w);
      } else {
        w = w / (1.0 + shrink);
      }
      m.w[j] = w;
    }
    m.b -= options.step * gb * inv_n;
    if (objective) objective->push_back(logreg_objective(m, x, y));
  }
  return m;
}

HyperGrid HyperGrid::standard() {
  HyperGrid g;
  for (Penalty p : {Penalty::L1, Penalty::L2})
    for (double l : {0.1, 1.0, 10.0}) g.points.push_back({p, l});
  return g;
}

GridPoint kfold_select(const Tensor& x, std::span<const std::uint8_t> y, const HyperGrid& grid,
                       const LogRegOptions& options) {
  check_xy(x, y);
  if (grid.points.empty()) throw std::invalid_argument("kfold_select: empty grid");
  if (grid.k < 2) throw std::invalid_argument("kfold_select: k must be >= 2");
  const std::size_t n = x.rows();
  if (n < grid.k) {
    throw std::invalid_argument("kfold_select: " + std::to_string(n) + " training samples for " +
                                std::to_string(grid.k) + " folds");
  }

  GridPoint best = grid.points.front();
  double best_loss = std::numeric_limits<double>::infinity();
  for (const GridPoint& p : grid.points) {
    double total = 0.0;
    for (std::size_t f = 0; f < grid.k; ++f) {
      const std::size_t lo = f * n / grid.k, hi = (f + 1) * n / grid.k;
      const Tensor xtr = drop_rows(x, lo, hi);
      std::vector<std::uint8_t> ytr(y.begin(), y.begin() + lo);
      ytr.insert(ytr.end(), y.begin() + hi, y.end());
      const Tensor xva = take_rows(x, lo, hi);
      const LogRegModel m = logreg_fit(xtr, ytr, p.penalty, p.lambda, options);
      double fold = 0.0;
      for (std::size_t i = lo; i < hi; ++i) fold += cross_entropy(m.predict(xva.data().subspan((i - lo) * x.cols(), x.cols())), y[i]);
      total += fold / static_cast<double>(hi - lo);
    }
    const double mean = total / static_cast<double>(grid.k);
    if (mean < best_loss) {
      best_loss = mean;
      best = p;
    }
  }
  return best;
}

std::vector<double> logreg_test_losses(const LabeledDataset& data, const HyperGrid& grid,
                                       const LogRegOptions& options) {
  data.validate();
  const std::size_t train = data.train_count();
  const Tensor xtr = take_rows(data.x, 0, train);
  const std::span<const std::uint8_t> ytr(data.y.data(), train);
  const GridPoint choice = kfold_select(xtr, ytr, grid, options);
  const LogRegModel m = logreg_fit(xtr, ytr, choice.penalty, choice.lambda, options);
  std::vector<double> losses;
  losses.reserve(data.test_count());
  for (std::size_t i = train; i < data.size(); ++i) losses.push_back(cross_entropy(m.predict(data.row(i)), data.y[i]));
  return losses;
}

SuiteScore summarize(std::vector<double> per_dataset) {
  if (per_dataset.empty()) throw std::invalid_argument("summarize: no datasets");
  SuiteScore s;
  double acc = 0.0;
  for (double v : per_dataset) acc += v;
  s.mu = acc / static_cast<double>(per_dataset.size());
  double sq = 0.0;
  for (double v : per_dataset) sq += (v - s.mu) * (v - s.mu);
  s.sigma = std::sqrt(sq / static_cast<double>(per_dataset.size()));
  s.per_dataset = std::move(per_dataset);
  return s;
}

SuiteScore evaluate_suite(const Scorer& scorer, std::span<const LabeledDataset> suite) {
  if (suite.empty()) throw std::invalid_argument("evaluate_suite: empty suite");
  std::vector<double> mce;
  mce.reserve(suite.size());
  for (std::size_t i = 0; i < suite.size(); ++i) {
    std::vector<double> losses;
    try {
      suite[i].validate();
      losses = scorer(suite[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error("dataset " + std::to_string(i) + ": " + e.what());
    }
    if (losses.empty()) throw std::runtime_error("dataset " + std::to_string(i) + ": empty test portion");
    double acc = 0.0;
    for (double l : losses) acc += l;
    mce.push_back(acc / static_cast<double>(losses.size()));
  }
  return summarize(std::move(mce));
}

Scorer learned_scorer(const LearnerParams& alpha, const ModelShape& model) {
  return [alpha, model](const LabeledDataset& data) {
    const EpisodeTrace trace = run_episode(alpha, model, data, false);
    return std::vector<double>(trace.losses.begin() + static_cast<std::ptrdiff_t>(data.tau - 1), trace.losses.end());
  };
}

Scorer logreg_scorer(HyperGrid grid, LogRegOptions options) {
  return [grid = std::move(grid), options](const LabeledDataset& data) {
    return logreg_test_losses(data, grid, options);
  };
}

Scorer constant_scorer(double probability) {
  return [probability](const LabeledDataset& data) {
    std::vector<double> losses;
    for (std::size_t i = data.tau - 1; i < data.size(); ++i) losses.push_back(cross_entropy(probability, data.y[i]));
    return losses;
  };
}

}  // namespace metalstm

#include "metalstm/datagen.hpp"

#include <algorithm>
#include <cmath>

namespace metalstm {

const char* to_string(LabelSource s) { return s == LabelSource::Clean ? "clean" : "noisy"; }

LabelSource label_source_from_string(const std::string& s) {
  if (s == "clean") return LabelSource::Clean;
  if (s == "noisy") return LabelSource::Noisy;
  throw std::invalid_argument("label_source must be \"clean\" or \"noisy\", got \"" + s + "\"");
}

void GenConfig::validate() const {
  if (n_in < 1) throw std::invalid_argument("generator: n_in must be >= 1");
  if (n_samples < 4) throw std::invalid_argument("generator: n_samples must be >= 4");
  if (!(beta_noise > 0.0)) throw std::invalid_argument("generator: beta_noise must be > 0");
  if (!(balance_min > 0.0 && balance_min < 0.5)) throw std::invalid_argument("generator: balance_min must be in (0, 0.5)");
  if (!(train_fraction_min > 0.0 && train_fraction_min <= train_fraction_max && train_fraction_max < 1.0)) {
    throw std::invalid_argument("generator: train fractions must satisfy 0 < min <= max < 1");
  }
  if (max_rejects < 1) throw std::invalid_argument("generator: max_rejects must be >= 1");
}

RejectionOverflow::RejectionOverflow(std::size_t rejects)
    : std::runtime_error("generator: class balance rejected " + std::to_string(rejects) + " datasets in a row"),
      rejects_(rejects) {}

Covariance gen_covariance(std::size_t n_in, Rng& rng) {
  Covariance c{Tensor({n_in, n_in}), Tensor({n_in, n_in})};
  for (double& v : c.a.data()) v = rng.uniform(-1.0, 1.0);
  for (std::size_t i = 0; i < n_in; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n_in; ++k) acc += c.a[i * n_in + k] * c.a[j * n_in + k];
      c.sigma[i * n_in + j] = acc;
      c.sigma[j * n_in + i] = acc;
    }
  }
  return c;
}

Tensor cholesky(const Tensor& sigma) {
  const std::size_t d = sigma.rows();
  Tensor l({d, d});
  for (std::size_t j = 0; j < d; ++j) {
    double diag = sigma[j * d + j];
    for (std::size_t k = 0; k < j; ++k) diag -= l[j * d + k] * l[j * d + k];
    if (!(diag > 0.0)) return {};
    const double ljj = std::sqrt(diag);
    l[j * d + j] = ljj;
    for (std::size_t i = j + 1; i < d; ++i) {
      double acc = sigma[i * d + j];
      for (std::size_t k = 0; k < j; ++k) acc -= l[i * d + k] * l[j * d + k];
      l[i * d + j] = acc / ljj;
    }
  }
  return l;
}

Tensor sample_gaussian(const Tensor& sigma, std::size_t n, Rng& rng) {
  const std::size_t d = sigma.rows();
  Tensor l = cholesky(sigma);
  if (l.size() == 0) {
    Tensor jittered = sigma;
    for (std::size_t i = 0; i < d; ++i) jittered[i * d + i] += 1e-9;
    l = cholesky(jittered);
    if (l.size() == 0) throw std::runtime_error("sample_gaussian: covariance is not positive semi-definite");
  }
  Tensor x({n, d});
  std::vector<double> z(d);
  for (std::size_t r = 0; r < n; ++r) {
    for (double& v : z) v = rng.normal();
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k <= i; ++k) acc += l[i * d + k] * z[k];
      x[r * d + i] = acc;
    }
  }
  return x;
}

Noise gen_noise(Rng& rng, double beta, std::size_t n, std::size_t n_in) {
  if (!(beta > 0.0)) throw std::invalid_argument("gen_noise: beta must be > 0");
  Noise noise;
  noise.epsilon = rng.exponential(beta);
  noise.v.resize(n_in);
  for (double& v : noise.v) v = rng.exponential(noise.epsilon);
  noise.e = Tensor({n, n_in});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < n_in; ++j) noise.e[r * n_in + j] = std::sqrt(noise.v[j]) * rng.normal();
  }
  return noise;
}

std::vector<std::uint8_t> xor_labels(const Tensor& x, const std::vector<double>& w1, const std::vector<double>& w2) {
  const std::size_t n = x.rows(), d = x.cols();
  if (w1.size() != d || w2.size() != d) throw std::invalid_argument("xor_labels: partition vectors do not match inputs");
  std::vector<std::uint8_t> y(n);
  for (std::size_t r = 0; r < n; ++r) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      s1 += w1[j] * x[r * d + j];
      s2 += w2[j] * x[r * d + j];
    }
    y[r] = static_cast<std::uint8_t>((s1 > 0.0) != (s2 > 0.0));
  }
  return y;
}

Labels gen_labels(const Tensor& x, Rng& rng) {
  const std::size_t d = x.cols();
  Labels out;
  out.w1.resize(d);
  out.w2.resize(d);
  for (double& w : out.w1) w = rng.uniform(-1.0, 1.0);
  for (double& w : out.w2) w = rng.uniform(-1.0, 1.0);
  out.y = xor_labels(x, out.w1, out.w2);
  return out;
}

void standardize(Tensor& x) {
  const std::size_t n = x.rows(), d = x.cols();
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += x[r * d + j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double c = x[r * d + j] - mean;
      x[r * d + j] = c;
      var += c * c;
    }
    var /= static_cast<double>(n);
    if (var > 0.0) {
      const double inv = 1.0 / std::sqrt(var);
      for (std::size_t r = 0; r < n; ++r) x[r * d + j] *= inv;
    }
  }
}

double min_class_fraction(const std::vector<std::uint8_t>& y) {
  if (y.empty()) return 0.0;
  const auto ones = static_cast<double>(std::count(y.begin(), y.end(), std::uint8_t{1}));
  const double frac = ones / static_cast<double>(y.size());
  return std::min(frac, 1.0 - frac);
}

namespace {

std::size_t draw_tau(const GenConfig& config, Rng& rng) {
  const auto levels =
      static_cast<std::uint64_t>(std::llround((config.train_fraction_max - config.train_fraction_min) / 0.1)) + 1;
  const double frac = config.train_fraction_min + 0.1 * static_cast<double>(rng.below(levels));
  const double n = static_cast<double>(config.n_samples);
  const auto train = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(frac * n)), 1,
                                             config.n_samples - 1);
  return train + 1;
}

}  // namespace

GeneratedTask gen_dataset(const GenConfig& config, Rng& rng) {
  config.validate();
  const std::size_t n = config.n_samples, d = config.n_in;
  std::size_t rejects = 0;
  for (;;) {
    Covariance cov = gen_covariance(d, rng);
    Tensor clean = sample_gaussian(cov.sigma, n, rng);
    Noise noise = gen_noise(rng, config.beta_noise, n, d);
    Tensor observed = clean;
    for (std::size_t i = 0; i < observed.size(); ++i) observed[i] += noise.e[i];

    Tensor& label_inputs = config.label_source == LabelSource::Clean ? clean : observed;
    Labels labels = gen_labels(label_inputs, rng);

    if (min_class_fraction(labels.y) >= config.balance_min) {
      GeneratedTask out;
      out.task.a = std::move(cov.a);
      out.task.sigma = std::move(cov.sigma);
      out.task.epsilon = noise.epsilon;
      out.task.v = std::move(noise.v);
      out.task.w1 = std::move(labels.w1);
      out.task.w2 = std::move(labels.w2);
      out.task.label_inputs = label_inputs;
      standardize(observed);
      out.dataset.x = std::move(observed);
      out.dataset.y = std::move(labels.y);
      out.dataset.tau = draw_tau(config, rng);
      out.rejects = rejects;
      return out;
    }
    if (++rejects > config.max_rejects) throw RejectionOverflow(rejects);
  }
}

GeneratedTask gen_dataset_at(const GenConfig& config, std::uint64_t seed, std::size_t index) {
  Rng rng(derive_seed(seed, index));
  return gen_dataset(config, rng);
}

std::vector<LabeledDataset> gen_suite(const GenConfig& config, std::size_t count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("gen_suite: count must be >= 1");
  std::vector<LabeledDataset> suite;
  suite.reserve(count);
  for (std::size_t i = 0; i < count; ++i) suite.push_back(gen_dataset_at(config, seed, i).dataset);
  return suite;
}

}  // namespace metalstm

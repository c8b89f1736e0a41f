#pragma once

// Hierarchical generator of noisy XOR-labelled binary classification tasks.
//
// Per dataset: a random covariance A*A^T (A ~ U(-1,1)), Gaussian samples,
// a noise scale eps ~ Exp(beta), per-feature variances v_j ~ Exp(eps), additive
// N(0, diag(v)) noise, two random zero-threshold half-spaces combined by XOR,
// whole-dataset standardization and class-balance rejection.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "metalstm/episode.hpp"
#include "metalstm/rng.hpp"
#include "metalstm/tensor.hpp"

namespace metalstm {

enum class LabelSource {
  Clean,  // partition the noise-free samples
  Noisy,  // partition the observed (noisy) samples
};

const char* to_string(LabelSource s);
LabelSource label_source_from_string(const std::string& s);

struct GenConfig {
  std::size_t n_in = 5;
  std::size_t n_samples = 100;
  double beta_noise = 2.0;
  double balance_min = 0.15;
  // Train fraction drawn uniformly from {min, min + 0.1, ..., max}.
  double train_fraction_min = 0.2;
  double train_fraction_max = 0.8;
  std::size_t max_rejects = 1000;
  LabelSource label_source = LabelSource::Clean;

  void validate() const;
  bool operator==(const GenConfig&) const = default;
};

struct TaskParams {
  Tensor a;              // n_in x n_in factor
  Tensor sigma;          // a * a^T
  double epsilon = 0.0;  // noise scale
  std::vector<double> v;  // per-feature noise variances
  std::vector<double> w1;
  std::vector<double> w2;
  Tensor label_inputs;   // the n x n_in matrix the partitions were applied to
};

struct GeneratedTask {
  LabeledDataset dataset;
  TaskParams task;
  std::size_t rejects = 0;
};

class RejectionOverflow : public std::runtime_error {
 public:
  explicit RejectionOverflow(std::size_t rejects);
  std::size_t rejects() const { return rejects_; }

 private:
  std::size_t rejects_;
};

struct Covariance {
  Tensor a;
  Tensor sigma;
};

Covariance gen_covariance(std::size_t n_in, Rng& rng);

/// n rows of N(0, sigma) via Cholesky; one 1e-9 * I jitter retry.
Tensor sample_gaussian(const Tensor& sigma, std::size_t n, Rng& rng);

/// Lower-triangular factor, or empty tensor when sigma is not positive definite.
Tensor cholesky(const Tensor& sigma);

struct Noise {
  double epsilon = 0.0;
  std::vector<double> v;
  Tensor e;  // n x n_in
};

Noise gen_noise(Rng& rng, double beta, std::size_t n, std::size_t n_in);

struct Labels {
  std::vector<std::uint8_t> y;
  std::vector<double> w1;
  std::vector<double> w2;
};

Labels gen_labels(const Tensor& x, Rng& rng);
/// [w1.x > 0] XOR [w2.x > 0] per row.
std::vector<std::uint8_t> xor_labels(const Tensor& x, const std::vector<double>& w1, const std::vector<double>& w2);

/// Per-column centering and scaling to unit (population) variance, in place.
void standardize(Tensor& x);

double min_class_fraction(const std::vector<std::uint8_t>& y);

GeneratedTask gen_dataset(const GenConfig& config, Rng& rng);

/// Dataset i is generated from derive_seed(seed, i) so it can be rebuilt alone.
GeneratedTask gen_dataset_at(const GenConfig& config, std::uint64_t seed, std::size_t index);

std::vector<LabeledDataset> gen_suite(const GenConfig& config, std::size_t count, std::uint64_t seed);

}  // namespace metalstm

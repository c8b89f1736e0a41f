#include "metalstm/model.hpp"

#include <stdexcept>
#include <string>

namespace metalstm {

void ModelShape::validate() const {
  if (n_in < 1 || n_hidden < 1) throw std::invalid_argument("model shape: n_in and n_hidden must be >= 1");
  if (n_out != 1) throw std::invalid_argument("model shape: n_out must be 1");
}

std::size_t param_count(const ModelShape& s) {
  s.validate();
  return s.n_hidden * s.n_in + s.n_hidden + s.n_out * s.n_hidden + s.n_out;
}

namespace {

void check_length(std::size_t got, const ModelShape& shape) {
  const std::size_t want = param_count(shape);
  if (got != want) {
    throw std::invalid_argument("model parameters: expected " + std::to_string(want) + " values, got " +
                                std::to_string(got));
  }
}

}  // namespace

ModelLayers unpack(std::span<const double> theta, const ModelShape& shape) {
  check_length(theta.size(), shape);
  const std::size_t h = shape.n_hidden, in = shape.n_in, out = shape.n_out;
  auto take = [&, pos = std::size_t{0}](Shape s) mutable {
    const std::size_t n = numel(s);
    Tensor t(std::move(s), std::vector<double>(theta.begin() + pos, theta.begin() + pos + n));
    pos += n;
    return t;
  };
  ModelLayers layers;
  layers.w1 = take({h, in});
  layers.b1 = take({h});
  layers.w2 = take({out, h});
  layers.b2 = take({out});
  return layers;
}

std::vector<double> pack(const ModelLayers& layers) {
  std::vector<double> theta;
  theta.reserve(layers.w1.size() + layers.b1.size() + layers.w2.size() + layers.b2.size());
  for (const Tensor* t : {&layers.w1, &layers.b1, &layers.w2, &layers.b2}) {
    theta.insert(theta.end(), t->data().begin(), t->data().end());
  }
  return theta;
}

ad::Var model_forward(ad::Var theta, ad::Var x, const ModelShape& shape) {
  check_length(theta.size(), shape);
  if (x.size() != shape.n_in) {
    throw ad::ShapeError("model forward: input has " + std::to_string(x.size()) + " features, expected " +
                         std::to_string(shape.n_in));
  }
  const std::size_t h = shape.n_hidden, in = shape.n_in, out = shape.n_out;
  std::size_t pos = 0;
  const ad::Var w1 = ad::slice(theta, pos, {h, in});
  pos += h * in;
  const ad::Var b1 = ad::slice(theta, pos, {h});
  pos += h;
  const ad::Var w2 = ad::slice(theta, pos, {out, h});
  pos += out * h;
  const ad::Var b2 = ad::slice(theta, pos, {out});

  const ad::Var hidden = ad::relu(ad::matvec(w1, x) + b1);
  return ad::sigmoid(ad::matvec(w2, hidden) + b2);
}

double model_forward(std::span<const double> theta, std::span<const double> x, const ModelShape& shape) {
  check_length(theta.size(), shape);
  if (x.size() != shape.n_in) {
    throw ad::ShapeError("model forward: input has " + std::to_string(x.size()) + " features, expected " +
                         std::to_string(shape.n_in));
  }
  const std::size_t h = shape.n_hidden, in = shape.n_in;
  const double* w1 = theta.data();
  const double* b1 = w1 + h * in;
  const double* w2 = b1 + h;
  const double b2 = w2[h];
  // Same summation order as the graph path so both give bit-identical outputs.
  double out = 0.0;
  for (std::size_t r = 0; r < h; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < in; ++c) acc += w1[r * in + c] * x[c];
    acc = acc + b1[r];
    out += w2[r] * (acc > 0.0 ? acc : 0.0);
  }
  return ad::stable_sigmoid(out + b2);
}

}  // namespace metalstm

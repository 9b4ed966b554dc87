// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#include "simorch/mlp.hpp"

#include <cmath>
#include <random>
#include <string>

#include "simorch/bytes.hpp"
#include "simorch/error.hpp"

namespace simorch::mlp {

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kIdentity: return z;
    case Activation::kTanh: return std::tanh(z);
    case Activation::kRelu: return z > 0.0 ? z : 0.0;
  }
  return z;
}

// Derivative expressed through the activation output h = act(z).
double activate_prime(Activation a, double z, double h) {
  switch (a) {
    case Activation::kIdentity: return 1.0;
    case Activation::kTanh: return 1.0 - h * h;
    case Activation::kRelu: return z > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

// out[i, o] = act(sum_k x[i, k] * W[o, k] + b[o]); also keeps pre-activations.
void layer_forward(const DenseLayer& layer, const double* x, std::size_t n,
                   std::vector<double>& z, std::vector<double>& h) {
  z.resize(n * layer.out);
  h.resize(n * layer.out);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x + i * layer.in;
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* w = layer.weights.data() + o * layer.in;
      double acc = layer.bias[o];
      for (std::size_t k = 0; k < layer.in; ++k) acc += w[k] * xi[k];
      z[i * layer.out + o] = acc;
      h[i * layer.out + o] = activate(layer.activation, acc);
    }
  }
}

Gradient zero_like(const MlpModel& model) {
  Gradient g;
  for (const auto& l : model.layers()) {
    g.weights.emplace_back(l.weights.size(), 0.0);
    g.bias.emplace_back(l.bias.size(), 0.0);
  }
  return g;
}

DenseLayer diagonal_layer(std::span<const double> scale,
                          std::span<const double> shift) {
  if (scale.size() != shift.size()) {
    throw Error(ErrorCode::kShapeMismatch, "affine scale/shift length differ");
  }
  DenseLayer l;
  l.in = l.out = scale.size();
  l.weights.assign(l.in * l.out, 0.0);
  for (std::size_t i = 0; i < l.in; ++i) l.weights[i * l.in + i] = scale[i];
  l.bias.assign(shift.begin(), shift.end());
  return l;
}

}  // namespace

MlpModel::MlpModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  validate(*this);
}

MlpModel MlpModel::random(std::span<const std::size_t> widths, Activation hidden,
                          std::uint64_t seed) {
  if (widths.size() < 2) {
    throw Error(ErrorCode::kShapeMismatch, "need at least input and output width");
  }
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    layer.in = widths[l];
    layer.out = widths[l + 1];
    double a = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    std::uniform_real_distribution<double> dist(-a, a);
    layer.weights.resize(layer.in * layer.out);
    for (auto& w : layer.weights) w = dist(rng);
    layer.bias.assign(layer.out, 0.0);
    layer.activation = (l + 2 == widths.size()) ? Activation::kIdentity : hidden;
    layers.push_back(std::move(layer));
  }
  return MlpModel(std::move(layers));
}

MlpModel MlpModel::identity(std::size_t width) {
  std::vector<double> ones(width, 1.0), zeros(width, 0.0);
  return MlpModel({diagonal_layer(ones, zeros)});
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

MlpModel MlpModel::with_input_affine(std::span<const double> scale,
                                     std::span<const double> shift) const {
  std::vector<DenseLayer> layers;
  layers.push_back(diagonal_layer(scale, shift));
  layers.insert(layers.end(), layers_.begin(), layers_.end());
  return MlpModel(std::move(layers));
}

MlpModel MlpModel::with_output_affine(std::span<const double> scale,
                                      std::span<const double> shift) const {
  auto layers = layers_;
  layers.push_back(diagonal_layer(scale, shift));
  return MlpModel(std::move(layers));
}

void validate(const MlpModel& model) {
  const auto& layers = model.layers();
  if (layers.empty()) throw Error(ErrorCode::kShapeMismatch, "model has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.in == 0 || layer.out == 0 ||
        layer.weights.size() != layer.in * layer.out ||
        layer.bias.size() != layer.out) {
      throw Error(ErrorCode::kShapeMismatch,
                  "layer " + std::to_string(l) + " has inconsistent sizes");
    }
    if (l > 0 && layers[l - 1].out != layer.in) {
      throw Error(ErrorCode::kShapeMismatch,
                  "layer " + std::to_string(l) + " input does not chain");
    }
  }
  if (layers.back().activation != Activation::kIdentity) {
    throw Error(ErrorCode::kShapeMismatch, "final activation must be identity");
  }
}

std::vector<double> forward(const MlpModel& model, std::span<const double> x,
                            std::size_t n) {
  if (x.size() != n * model.input_width()) {
    throw Error(ErrorCode::kShapeMismatch,
                "input has " + std::to_string(x.size()) + " values, expected " +
                    std::to_string(n) + " x " +
                    std::to_string(model.input_width()));
  }
  std::vector<double> cur(x.begin(), x.end()), z, h;
  for (const auto& layer : model.layers()) {
    layer_forward(layer, cur.data(), n, z, h);
    cur.swap(h);
  }
  return cur;
}

Tensor forward(const MlpModel& model, const Tensor& x) {
  auto in = model.input_width();
  if (x.size() % in != 0) {
    throw Error(ErrorCode::kShapeMismatch,
                "input tensor cannot be viewed as [n, " + std::to_string(in) + "]");
  }
  auto n = x.size() / in;
  return Tensor({n, model.output_width()}, forward(model, x.data(), n));
}

double mse_and_gradient(const MlpModel& model, std::span<const double> x,
                        std::span<const double> y, std::size_t n,
                        Gradient* grad) {
  const auto& layers = model.layers();
  if (n == 0 || x.size() != n * model.input_width() ||
      y.size() != n * model.output_width()) {
    throw Error(ErrorCode::kShapeMismatch, "training data does not match model");
  }
  // Activations per layer: acts[0] = input, acts[l + 1] = output of layer l.
  std::vector<std::vector<double>> acts(layers.size() + 1), pre(layers.size());
  acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layer_forward(layers[l], acts[l].data(), n, pre[l], acts[l + 1]);
  }
  const auto& out = acts.back();
  double sum = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    double d = out[i] - y[i];
    sum += d * d;
  }
  const double denom = static_cast<double>(out.size());
  const double loss = sum / denom;
  if (grad == nullptr) return loss;

  *grad = zero_like(model);
  std::vector<double> delta(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) delta[i] = 2.0 * (out[i] - y[i]) / denom;

  std::vector<double> prev;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    // delta currently holds dL/dh for this layer's output; convert to dL/dz.
    for (std::size_t i = 0; i < delta.size(); ++i) {
      delta[i] *= activate_prime(layer.activation, pre[l][i], acts[l + 1][i]);
    }
    auto& gw = grad->weights[l];
    auto& gb = grad->bias[l];
    const auto& input = acts[l];
    for (std::size_t i = 0; i < n; ++i) {
      const double* xi = input.data() + i * layer.in;
      for (std::size_t o = 0; o < layer.out; ++o) {
        double d = delta[i * layer.out + o];
        gb[o] += d;
        double* g = gw.data() + o * layer.in;
        for (std::size_t k = 0; k < layer.in; ++k) g[k] += d * xi[k];
      }
    }
    if (l == 0) break;
    prev.assign(n * layer.in, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double* pi = prev.data() + i * layer.in;
      for (std::size_t o = 0; o < layer.out; ++o) {
        double d = delta[i * layer.out + o];
        const double* w = layer.weights.data() + o * layer.in;
        for (std::size_t k = 0; k < layer.in; ++k) pi[k] += d * w[k];
      }
    }
    delta.swap(prev);
  }
  return loss;
}

double mse(const MlpModel& model, std::span<const double> x,
           std::span<const double> y, std::size_t n) {
  return mse_and_gradient(model, x, y, n, nullptr);
}

void AdamTrainer::ensure_state(const MlpModel& model) {
  bool matches = m_.weights.size() == model.layers().size();
  for (std::size_t l = 0; matches && l < model.layers().size(); ++l) {
    matches = m_.weights[l].size() == model.layers()[l].weights.size() &&
              m_.bias[l].size() == model.layers()[l].bias.size();
  }
  if (!matches) {
    m_ = zero_like(model);
    v_ = zero_like(model);
    step_ = 0;
  }
}

TrainResult AdamTrainer::train(MlpModel& model, std::span<const double> x,
                               std::span<const double> y, std::size_t n) {
  if (config_.max_epochs < 1) {
    throw Error(ErrorCode::kInvalidConfig, "max epochs must be >= 1");
  }
  ensure_state(model);
  TrainResult result;
  Gradient g;
  auto update = [&](std::vector<double>& param, const std::vector<double>& grad,
                    std::vector<double>& m, std::vector<double>& v) {
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (std::size_t i = 0; i < param.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
      v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
      param[i] -= config_.learning_rate * (m[i] / c1) /
                  (std::sqrt(v[i] / c2) + config_.epsilon);
    }
  };
  for (;;) {
    double loss = mse_and_gradient(model, x, y, n, &g);
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::kNonFiniteLoss,
                  "loss became non-finite after " + std::to_string(result.epochs) +
                      " epochs (Adam step " + std::to_string(step_) + ")");
    }
    result.losses.push_back(loss);
    result.final_mse = loss;
    if (loss <= config_.target_mse || result.epochs >= config_.max_epochs) break;
    ++step_;
    auto& layers = model.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      update(layers[l].weights, g.weights[l], m_.weights[l], v_.weights[l]);
      update(layers[l].bias, g.bias[l], m_.bias[l], v_.bias[l]);
    }
    ++result.epochs;
  }
  return result;
}

std::vector<std::uint8_t> serialize(const MlpModel& model) {
  validate(model);
  ByteWriter w;
  w.u16(static_cast<std::uint16_t>(model.layers().size()));
  for (const auto& l : model.layers()) {
    w.u32(static_cast<std::uint32_t>(l.in));
    w.u32(static_cast<std::uint32_t>(l.out));
    w.u8(static_cast<std::uint8_t>(l.activation));
    w.f64s(l.weights);
    w.f64s(l.bias);
  }
  return w.take();
}

MlpModel deserialize(std::span<const std::uint8_t> bytes) {
  try {
    ByteReader r(bytes);
    auto count = r.u16("layer count");
    std::vector<DenseLayer> layers(count);
    for (auto& l : layers) {
      l.in = r.u32("layer in");
      l.out = r.u32("layer out");
      auto act = r.u8("activation");
      if (act > static_cast<std::uint8_t>(Activation::kRelu)) {
        throw Error(ErrorCode::kMalformedModel,
                    "bad activation byte " + std::to_string(act));
      }
      l.activation = static_cast<Activation>(act);
      if (l.in * l.out > r.remaining() / 8) {
        throw Error(ErrorCode::kMalformedModel, "short weight block");
      }
      l.weights.resize(l.in * l.out);
      r.f64s(l.weights, "weights");
      l.bias.resize(l.out);
      r.f64s(l.bias, "bias");
    }
    if (!r.done()) throw Error(ErrorCode::kMalformedModel, "trailing bytes");
    return MlpModel(std::move(layers));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kMalformedModel) throw;
    throw Error(ErrorCode::kMalformedModel, e.what());
  }
}

}  // namespace simorch::mlp

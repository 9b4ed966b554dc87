// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SIMORCH_MLP_HPP_
#define SIMORCH_MLP_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "simorch/tensor.hpp"

namespace simorch::mlp {

enum class Activation : std::uint8_t { kIdentity = 0, kTanh = 1, kRelu = 2 };

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // [out, in] row-major
  std::vector<double> bias;     // [out]
  Activation activation = Activation::kIdentity;
};

/// Dense feed-forward regression network. The last layer is always
/// identity-activated.
class MlpModel {
 public:
  MlpModel() = default;
  explicit MlpModel(std::vector<DenseLayer> layers);

  /// Xavier-uniform weights, zero biases. `widths` = {in, hidden..., out}.
  static MlpModel random(std::span<const std::size_t> widths, Activation hidden,
                         std::uint64_t seed);
  /// Single identity-activated affine layer W = I, b = 0.
  static MlpModel identity(std::size_t width);

  std::size_t input_width() const { return layers_.front().in; }
  std::size_t output_width() const { return layers_.back().out; }
  std::size_t parameter_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  /// Returns a model computing core(scale * x + shift) per input column.
  MlpModel with_input_affine(std::span<const double> scale,
                             std::span<const double> shift) const;
  /// Returns a model computing scale * core(x) + shift per output column.
  MlpModel with_output_affine(std::span<const double> scale,
                              std::span<const double> shift) const;

 private:
  std::vector<DenseLayer> layers_;
};

/// Throws SHAPE_MISMATCH when the layer chain is broken or the final
/// activation is not identity.
void validate(const MlpModel& model);

/// Row-major [n, in] -> [n, out].
std::vector<double> forward(const MlpModel& model, std::span<const double> x,
                            std::size_t n);
Tensor forward(const MlpModel& model, const Tensor& x);

/// Per-layer gradient storage with the same layout as the model.
struct Gradient {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;
};

/// Mean squared error over all n*out entries and its gradient.
double mse_and_gradient(const MlpModel& model, std::span<const double> x,
                        std::span<const double> y, std::size_t n,
                        Gradient* grad);
double mse(const MlpModel& model, std::span<const double> x,
           std::span<const double> y, std::size_t n);

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t max_epochs = 2000;
  double target_mse = 1e-6;
};

struct TrainResult {
  std::vector<double> losses;  // loss before each update, plus the final loss
  std::size_t epochs = 0;      // parameter updates performed
  double final_mse = 0.0;
};

/// Full-batch Adam. The moment estimates persist between train() calls so
/// consecutive calls continue one optimization (online, warm-started).
class AdamTrainer {
 public:
  explicit AdamTrainer(TrainConfig config = {}) : config_(config) {}

  TrainResult train(MlpModel& model, std::span<const double> x,
                    std::span<const double> y, std::size_t n);

  const TrainConfig& config() const { return config_; }

 private:
  void ensure_state(const MlpModel& model);

  TrainConfig config_;
  Gradient m_;
  Gradient v_;
  std::uint64_t step_ = 0;
};

/// u16 layer count; per layer u32 in, u32 out, u8 activation, W (f64 LE,
/// row-major), b. Integers big-endian.
std::vector<std::uint8_t> serialize(const MlpModel& model);
/// Throws MALFORMED_MODEL on truncation, trailing bytes, bad activation
/// byte or broken layer chain.
MlpModel deserialize(std::span<const std::uint8_t> bytes);

}  // namespace simorch::mlp

#endif  // SIMORCH_MLP_HPP_

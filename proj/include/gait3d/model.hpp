#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gait3d/layers.hpp"
#include "gait3d/rng.hpp"
#include "gait3d/tensor.hpp"

namespace gait3d::nn {

enum class Activation : std::uint8_t { kNone = 0, kTanh = 1 };

struct Conv3dSpec {
  std::size_t filters = 8;
  std::size_t kt = 3, kh = 3, kw = 3;
  bool operator==(const Conv3dSpec&) const = default;
};
struct MaxPool3dSpec {
  PoolGeometry pool;
  bool operator==(const MaxPool3dSpec&) const = default;
};
struct FlattenSpec {
  bool operator==(const FlattenSpec&) const = default;
};
struct DropoutSpec {
  double rate = 0.0;
  bool operator==(const DropoutSpec&) const = default;
};
struct DenseSpec {
  std::size_t units = 1;
  Activation activation = Activation::kNone;
  bool operator==(const DenseSpec&) const = default;
};
struct SoftmaxSpec {
  bool operator==(const SoftmaxSpec&) const = default;
};

using LayerSpec = std::variant<Conv3dSpec, MaxPool3dSpec, FlattenSpec,
                               DropoutSpec, DenseSpec, SoftmaxSpec>;

/// Input geometry plus an ordered layer stack ending in dense(K), softmax.
struct ModelSpec {
  Shape4 input;
  std::vector<LayerSpec> layers;

  // Output shape of every layer (index i = after layers[i]). Throws
  // ShapeError when shapes do not compose or the head is malformed.
  std::vector<Shape4> shapes() const;
  std::size_t num_classes() const;
  // Shapes of each layer's weights and bias, in declaration order.
  std::vector<std::pair<std::size_t, std::size_t>> param_sizes() const;
  std::size_t param_count() const;

  bool operator==(const ModelSpec&) const = default;
};

/// conv3d 8@3x3x3, pool 2, conv3d 16@3x3x3, pool 2, flatten, dropout 0.3,
/// dense 64 tanh, dropout 0.3, dense K, softmax.
ModelSpec default_model_spec(const Shape4& input, std::size_t num_classes);

/// Parses the line-oriented layer description used by --model-spec files:
///   conv3d <filters> <kt> <kh> <kw>
///   maxpool3d <wt> <wh> <ww> [<st> <sh> <sw>]
///   flatten | dropout <rate> | dense <units|classes> [tanh] | softmax
/// Blank lines and '#' comments are ignored.
ModelSpec parse_model_spec(std::string_view text, const Shape4& input,
                           std::size_t num_classes);
std::string format_model_spec(const ModelSpec& spec);

/// One ParamBlock per layer; parameter-free layers hold empty blocks.
struct ModelParams {
  std::vector<ParamBlock> blocks;

  bool operator==(const ModelParams&) const = default;
};

ModelParams zero_params(const ModelSpec& spec);

/// Weights ~ U(-s, s), s = sqrt(6 / (fan_in + fan_out)); biases zero.
ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);

/// p <- p - lr * g.
void sgd_step(ModelParams& params, const ModelParams& grads,
              double learning_rate);

// grads += other (shapes must match).
void accumulate(ModelParams& grads, const ModelParams& other);
void scale(ModelParams& grads, double factor);

/// Values kept by a training forward pass for the backward pass.
struct Trace {
  std::vector<Tensor4> activations;  // [0] = input, [i + 1] = after layer i
  std::vector<std::vector<std::size_t>> argmax;  // per layer (pools)
  std::vector<std::vector<std::uint8_t>> keep;   // per layer (dropout)
};

/// Runs the stack and returns the logits feeding the softmax head. In
/// training mode `rng` drives dropout and must be non-null; `trace`, when
/// given, receives everything backward() needs.
std::vector<double> forward(const ModelSpec& spec, const ModelParams& params,
                            const Tensor4& input, Mode mode, Rng* rng,
                            Trace* trace);

ModelParams backward(const ModelSpec& spec, const ModelParams& params,
                     const Trace& trace, std::span<const double> grad_logits);

}  // namespace gait3d::nn

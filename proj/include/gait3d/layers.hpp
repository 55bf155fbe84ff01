#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gait3d/rng.hpp"
#include "gait3d/tensor.hpp"

namespace gait3d::nn {

/// Learnable tensors of one layer, flattened.
struct ParamBlock {
  std::vector<double> weights;
  std::vector<double> bias;

  bool operator==(const ParamBlock&) const = default;
};

/// Kernel extents: kt along time (R), kh along rows (P), kw along cols (Q).
/// Weights are laid out [out][in][kt][kh][kw].
struct ConvGeometry {
  std::size_t out_channels = 1;
  std::size_t in_channels = 1;
  std::size_t kt = 1;
  std::size_t kh = 1;
  std::size_t kw = 1;

  std::size_t taps() const { return kt * kh * kw; }
  std::size_t weight_count() const { return out_channels * in_channels * taps(); }
  std::size_t weight_index(std::size_t j, std::size_t m, std::size_t r,
                           std::size_t p, std::size_t q) const {
    return (((j * in_channels + m) * kt + r) * kh + p) * kw + q;
  }
  // Valid-geometry output shape; throws ShapeError when it is empty or the
  // channel count does not match.
  Shape4 output_shape(const Shape4& input) const;

  bool operator==(const ConvGeometry&) const = default;
};

struct Conv3dLayer {
  ConvGeometry geometry;
  ParamBlock params;

  static Conv3dLayer zeros(const ConvGeometry& g);
};

/// out[j,z,x,y] = tanh(b[j] + sum_{m,r,p,q} w[j,m,r,p,q] in[m,z+r,x+p,y+q]),
/// stride 1, no padding.
Tensor4 conv3d_forward(const Tensor4& input, const ConvGeometry& geometry,
                       const ParamBlock& params);
inline Tensor4 conv3d_forward(const Tensor4& input, const Conv3dLayer& layer) {
  return conv3d_forward(input, layer.geometry, layer.params);
}

struct Conv3dGrads {
  Tensor4 grad_input;  // left empty when not requested
  ParamBlock grads;
};

/// Back-propagates through tanh and the correlation. `saved_output` is the
/// forward result (tanh already applied), so d tanh = 1 - out^2 needs no
/// second tanh evaluation.
Conv3dGrads conv3d_backward(const Tensor4& grad_out, const Tensor4& saved_input,
                            const Tensor4& saved_output,
                            const ConvGeometry& geometry,
                            const ParamBlock& params, bool want_input_grad = true);
inline Conv3dGrads conv3d_backward(const Tensor4& grad_out,
                                   const Tensor4& saved_input,
                                   const Tensor4& saved_output,
                                   const Conv3dLayer& layer) {
  return conv3d_backward(grad_out, saved_input, saved_output, layer.geometry,
                         layer.params);
}

struct PoolGeometry {
  std::size_t wt = 2, wh = 2, ww = 2;  // window
  std::size_t st = 2, sh = 2, sw = 2;  // stride

  Shape4 output_shape(const Shape4& input) const;
  bool operator==(const PoolGeometry&) const = default;
};

struct PoolResult {
  Tensor4 output;
  // Linear input offset of the maximum for each output voxel.
  std::vector<std::size_t> argmax;
};

// Windows that would run past the input are dropped; ties pick the lowest
// linear index.
PoolResult maxpool3d_forward(const Tensor4& input, const PoolGeometry& pool);
Tensor4 maxpool3d_backward(const Tensor4& grad_out,
                           std::span<const std::size_t> argmax,
                           const Shape4& input_shape);

/// Weights are [out][in] row-major.
struct DenseGeometry {
  std::size_t in = 1;
  std::size_t out = 1;

  bool operator==(const DenseGeometry&) const = default;
};

std::vector<double> dense_forward(std::span<const double> input,
                                  const DenseGeometry& geometry,
                                  const ParamBlock& params);

struct DenseGrads {
  std::vector<double> grad_input;
  ParamBlock grads;
};

DenseGrads dense_backward(std::span<const double> grad_out,
                          std::span<const double> saved_input,
                          const DenseGeometry& geometry,
                          const ParamBlock& params);

void tanh_inplace(std::span<double> values);
// grad * (1 - out^2)
std::vector<double> tanh_backward(std::span<const double> grad_out,
                                  std::span<const double> saved_output);

enum class Mode { kTrain, kEval };

struct DropoutResult {
  std::vector<double> output;
  std::vector<std::uint8_t> keep;  // empty when nothing was dropped
};

/// Inverted dropout: in training each value is zeroed with probability
/// `rate` and survivors are scaled by 1/(1-rate). One uniform draw per
/// element, in order.
DropoutResult dropout_forward(std::span<const double> input, double rate,
                              Mode mode, Rng& rng);
std::vector<double> dropout_backward(std::span<const double> grad_out,
                                     std::span<const std::uint8_t> keep,
                                     double rate);

std::vector<double> softmax(std::span<const double> logits);

struct SoftmaxCrossEntropy {
  double loss = 0.0;
  std::vector<double> probs;
  std::vector<double> grad_logits;
};

SoftmaxCrossEntropy softmax_cross_entropy(std::span<const double> logits,
                                          std::size_t label);

}  // namespace gait3d::nn

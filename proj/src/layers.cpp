#include "gait3d/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kernels.hpp"

namespace gait3d::nn {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

void check_params(const ConvGeometry& g, const ParamBlock& p) {
  require(p.weights.size() == g.weight_count(),
          "conv3d: expected " + std::to_string(g.weight_count()) + " weights, got " +
              std::to_string(p.weights.size()));
  require(p.bias.size() == g.out_channels, "conv3d: bias length mismatch");
}

}  // namespace

Shape4 ConvGeometry::output_shape(const Shape4& input) const {
  require(input.c == in_channels, "conv3d: input has " + std::to_string(input.c) +
                                      " channels, layer expects " +
                                      std::to_string(in_channels));
  require(kt >= 1 && kh >= 1 && kw >= 1, "conv3d: kernel extents must be >= 1");
  require(kt <= input.t && kh <= input.h && kw <= input.w,
          "conv3d: kernel " + std::to_string(kt) + "x" + std::to_string(kh) + "x" +
              std::to_string(kw) + " exceeds input " + input.str());
  return {out_channels, input.t - kt + 1, input.h - kh + 1, input.w - kw + 1};
}

Conv3dLayer Conv3dLayer::zeros(const ConvGeometry& g) {
  return {g, ParamBlock{std::vector<double>(g.weight_count(), 0.0),
                        std::vector<double>(g.out_channels, 0.0)}};
}

Tensor4 conv3d_forward(const Tensor4& input, const ConvGeometry& geometry,
                       const ParamBlock& params) {
  check_params(geometry, params);
  Tensor4 out(geometry.output_shape(input.shape()));
  kernels::conv3d_correlate(input, geometry, params.weights.data(),
                            params.bias.data(), out);
  kernels::tanh_inplace(out.values());
  return out;
}

Conv3dGrads conv3d_backward(const Tensor4& grad_out, const Tensor4& saved_input,
                            const Tensor4& saved_output, const ConvGeometry& geometry,
                            const ParamBlock& params, bool want_input_grad) {
  check_params(geometry, params);
  const Shape4 os = geometry.output_shape(saved_input.shape());
  require(grad_out.shape() == os, "conv3d_backward: grad_out shape " +
                                      grad_out.shape().str() + " != " + os.str());
  require(saved_output.shape() == os, "conv3d_backward: saved output shape mismatch");

  Tensor4 grad_pre(os);
  {
    auto g = grad_pre.values();
    auto go = grad_out.values();
    auto out = saved_output.values();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = go[i] * (1.0 - out[i] * out[i]);
  }

  Conv3dGrads result;
  result.grads.weights.assign(geometry.weight_count(), 0.0);
  result.grads.bias.assign(geometry.out_channels, 0.0);
  const std::size_t per_channel = os.t * os.h * os.w;
  for (std::size_t j = 0; j < os.c; ++j) {
    const double* gj = grad_pre.values().data() + j * per_channel;
    double s = 0.0;
    for (std::size_t i = 0; i < per_channel; ++i) s += gj[i];
    result.grads.bias[j] = s;
  }
  kernels::conv3d_weight_grad(grad_pre, saved_input, geometry,
                              result.grads.weights.data());
  if (want_input_grad) {
    result.grad_input = Tensor4(saved_input.shape());
    kernels::conv3d_input_grad(grad_pre, geometry, params.weights.data(),
                               result.grad_input);
  }
  return result;
}

Shape4 PoolGeometry::output_shape(const Shape4& input) const {
  require(wt >= 1 && wh >= 1 && ww >= 1 && st >= 1 && sh >= 1 && sw >= 1,
          "maxpool3d: window and stride must be >= 1");
  require(wt <= input.t && wh <= input.h && ww <= input.w,
          "maxpool3d: window larger than input " + input.str());
  return {input.c, (input.t - wt) / st + 1, (input.h - wh) / sh + 1,
          (input.w - ww) / sw + 1};
}

PoolResult maxpool3d_forward(const Tensor4& input, const PoolGeometry& pool) {
  const Shape4 os = pool.output_shape(input.shape());
  PoolResult res{Tensor4(os), std::vector<std::size_t>(os.size())};
  std::size_t o = 0;
  for (std::size_t c = 0; c < os.c; ++c)
    for (std::size_t t = 0; t < os.t; ++t)
      for (std::size_t h = 0; h < os.h; ++h)
        for (std::size_t w = 0; w < os.w; ++w, ++o) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_idx = input.offset(c, t * pool.st, h * pool.sh, w * pool.sw);
          // Offsets grow with (dt, dh, dw) in this order, so strict '>'
          // keeps the lowest linear index on ties.
          for (std::size_t dt = 0; dt < pool.wt; ++dt)
            for (std::size_t dh = 0; dh < pool.wh; ++dh) {
              const std::size_t base =
                  input.offset(c, t * pool.st + dt, h * pool.sh + dh, w * pool.sw);
              const double* row = input.values().data() + base;
              for (std::size_t dw = 0; dw < pool.ww; ++dw) {
                if (row[dw] > best) {
                  best = row[dw];
                  best_idx = base + dw;
                }
              }
            }
          res.output.values()[o] = best;
          res.argmax[o] = best_idx;
        }
  return res;
}

Tensor4 maxpool3d_backward(const Tensor4& grad_out, std::span<const std::size_t> argmax,
                           const Shape4& input_shape) {
  require(argmax.size() == grad_out.size(), "maxpool3d_backward: argmax length mismatch");
  Tensor4 gi(input_shape);
  auto dst = gi.values();
  auto src = grad_out.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (argmax[i] >= dst.size()) throw ShapeError("maxpool3d_backward: argmax out of range");
    dst[argmax[i]] += src[i];
  }
  return gi;
}

std::vector<double> dense_forward(std::span<const double> input,
                                  const DenseGeometry& geometry, const ParamBlock& params) {
  require(input.size() == geometry.in, "dense: input width " +
                                           std::to_string(input.size()) + " != " +
                                           std::to_string(geometry.in));
  require(params.weights.size() == geometry.in * geometry.out &&
              params.bias.size() == geometry.out,
          "dense: parameter shape mismatch");
  std::vector<double> out(geometry.out);
  for (std::size_t o = 0; o < geometry.out; ++o) {
    out[o] = params.bias[o] +
             kernels::dot(params.weights.data() + o * geometry.in, input.data(), geometry.in);
  }
  return out;
}

DenseGrads dense_backward(std::span<const double> grad_out,
                          std::span<const double> saved_input,
                          const DenseGeometry& geometry, const ParamBlock& params) {
  require(grad_out.size() == geometry.out, "dense_backward: grad width mismatch");
  require(saved_input.size() == geometry.in, "dense_backward: input width mismatch");
  require(params.weights.size() == geometry.in * geometry.out,
          "dense_backward: parameter shape mismatch");
  DenseGrads res;
  res.grad_input.assign(geometry.in, 0.0);
  res.grads.weights.resize(geometry.in * geometry.out);
  res.grads.bias.assign(grad_out.begin(), grad_out.end());
  double* gi = res.grad_input.data();
  const double* x = saved_input.data();
  for (std::size_t o = 0; o < geometry.out; ++o) {
    const double g = grad_out[o];
    const double* wrow = params.weights.data() + o * geometry.in;
    double* gw = res.grads.weights.data() + o * geometry.in;
    for (std::size_t i = 0; i < geometry.in; ++i) {
      gw[i] = g * x[i];
      gi[i] += g * wrow[i];
    }
  }
  return res;
}

void tanh_inplace(std::span<double> values) { kernels::tanh_inplace(values); }

std::vector<double> tanh_backward(std::span<const double> grad_out,
                                  std::span<const double> saved_output) {
  require(grad_out.size() == saved_output.size(), "tanh_backward: length mismatch");
  std::vector<double> g(grad_out.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = grad_out[i] * (1.0 - saved_output[i] * saved_output[i]);
  }
  return g;
}

DropoutResult dropout_forward(std::span<const double> input, double rate, Mode mode,
                              Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ParameterError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  DropoutResult res;
  res.output.assign(input.begin(), input.end());
  if (mode == Mode::kEval || rate == 0.0) return res;
  res.keep.resize(input.size());
  const double scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < input.size(); ++i) {
    const bool keep = rng.uniform() >= rate;
    res.keep[i] = keep ? 1 : 0;
    res.output[i] = keep ? input[i] * scale : 0.0;
  }
  return res;
}

std::vector<double> dropout_backward(std::span<const double> grad_out,
                                     std::span<const std::uint8_t> keep, double rate) {
  std::vector<double> g(grad_out.begin(), grad_out.end());
  if (keep.empty()) return g;
  require(keep.size() == g.size(), "dropout_backward: mask length mismatch");
  const double scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = keep[i] ? g[i] * scale : 0.0;
  return g;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw ParameterError("softmax of an empty vector");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::exp(logits[k] - mx);
    sum += p[k];
  }
  for (auto& v : p) v /= sum;
  return p;
}

SoftmaxCrossEntropy softmax_cross_entropy(std::span<const double> logits,
                                          std::size_t label) {
  if (logits.size() < 2) throw ParameterError("softmax_cross_entropy needs K >= 2");
  if (label >= logits.size()) {
    throw ParameterError("label " + std::to_string(label) + " out of range for K = " +
                         std::to_string(logits.size()));
  }
  SoftmaxCrossEntropy res;
  // log-sum-exp form keeps the loss finite when probs[label] underflows.
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - mx);
  const double log_z = mx + std::log(sum);
  res.loss = log_z - logits[label];
  res.probs = softmax(logits);
  res.grad_logits = res.probs;
  res.grad_logits[label] -= 1.0;
  return res;
}

}  // namespace gait3d::nn

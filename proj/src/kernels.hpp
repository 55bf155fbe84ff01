#pragma once

// Hot loops of the network layers. Callers validate shapes; these assume
// them.

#include <cstddef>
#include <span>

#include "gait3d/layers.hpp"

namespace gait3d::nn::kernels {

// out = correlation(in, w) + b, no activation.
void conv3d_correlate(const Tensor4& in, const ConvGeometry& g, const double* w,
                      const double* b, Tensor4& out);

// gw[j,m,r,p,q] = sum g[j,z,x,y] in[m,z+r,x+p,y+q]
void conv3d_weight_grad(const Tensor4& grad_pre, const Tensor4& in,
                        const ConvGeometry& g, double* gw);

// gi[m,zi,xi,yi] = sum_j,r,p,q w[j,m,r,p,q] g[j,zi-r,xi-p,yi-q]
void conv3d_input_grad(const Tensor4& grad_pre, const ConvGeometry& g,
                       const double* w, Tensor4& grad_in);

void tanh_inplace(std::span<double> values);

double dot(const double* a, const double* b, std::size_t n);

}  // namespace gait3d::nn::kernels

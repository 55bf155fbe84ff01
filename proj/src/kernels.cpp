#include "kernels.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <cstdint>
#include <experimental/simd>
#include <vector>

namespace gait3d::nn::kernels {

namespace stdx = std::experimental;
using Vec = stdx::native_simd<double>;
constexpr std::size_t kLanes = Vec::size();

namespace {

// Start offsets of full-width vectors covering [0, n). When n is not a
// multiple of the lane count the last vector is shifted left to end at n;
// `skip` is how many of its leading lanes repeat the previous vector.
struct Chunk {
  std::size_t start;
  std::size_t skip;
};

std::vector<Chunk> chunks(std::size_t n) {
  std::vector<Chunk> out;
  if (n < kLanes) return out;
  std::size_t y = 0;
  for (; y + kLanes <= n; y += kLanes) out.push_back({y, 0});
  if (y < n) out.push_back({n - kLanes, y - (n - kLanes)});
  return out;
}

Vec load(const double* p) { return Vec(p, stdx::element_aligned); }

Vec lane_mask(std::size_t skip) {
  alignas(64) double m[kLanes];
  for (std::size_t l = 0; l < kLanes; ++l) m[l] = l < skip ? 0.0 : 1.0;
  return load(m);
}

template <int JB>
void correlate_block(const Tensor4& in, const ConvGeometry& g, const double* w,
                     const double* b, Tensor4& out, std::size_t j0,
                     const std::vector<Chunk>& cs) {
  const Shape4& os = out.shape();
  const std::size_t jstride = g.in_channels * g.taps();
  for (std::size_t z = 0; z < os.t; ++z) {
    for (std::size_t x = 0; x < os.h; ++x) {
      if (cs.empty()) {
        for (int jj = 0; jj < JB; ++jj) {
          double* orow = out.row(j0 + jj, z, x);
          for (std::size_t y = 0; y < os.w; ++y) {
            double s = b[j0 + jj];
            for (std::size_t m = 0; m < g.in_channels; ++m)
              for (std::size_t r = 0; r < g.kt; ++r)
                for (std::size_t p = 0; p < g.kh; ++p) {
                  const double* irow = in.row(m, z + r, x + p) + y;
                  const double* wp = w + g.weight_index(j0 + jj, m, r, p, 0);
                  for (std::size_t q = 0; q < g.kw; ++q) s += wp[q] * irow[q];
                }
            orow[y] = s;
          }
        }
        continue;
      }
      for (const Chunk& c : cs) {
        Vec acc[JB];
        for (int jj = 0; jj < JB; ++jj) acc[jj] = Vec(b[j0 + jj]);
        for (std::size_t m = 0; m < g.in_channels; ++m) {
          for (std::size_t r = 0; r < g.kt; ++r) {
            for (std::size_t p = 0; p < g.kh; ++p) {
              const double* irow = in.row(m, z + r, x + p) + c.start;
              const double* wp = w + g.weight_index(j0, m, r, p, 0);
              for (std::size_t q = 0; q < g.kw; ++q) {
                const Vec v = load(irow + q);
                for (int jj = 0; jj < JB; ++jj) acc[jj] += Vec(wp[jj * jstride + q]) * v;
              }
            }
          }
        }
        for (int jj = 0; jj < JB; ++jj) {
          acc[jj].copy_to(out.row(j0 + jj, z, x) + c.start, stdx::element_aligned);
        }
      }
    }
  }
}

template <int JB, int NQ>
void weight_grad_block(const Tensor4& gp, const Tensor4& in, const ConvGeometry& g,
                       double* gw, std::size_t j0, std::size_t m, std::size_t r,
                       std::size_t p, std::size_t q0, const std::vector<Chunk>& cs) {
  const Shape4& os = gp.shape();
  if (cs.empty()) {
    for (int jj = 0; jj < JB; ++jj)
      for (int qq = 0; qq < NQ; ++qq) {
        double s = 0.0;
        for (std::size_t z = 0; z < os.t; ++z)
          for (std::size_t x = 0; x < os.h; ++x) {
            const double* grow = gp.row(j0 + jj, z, x);
            const double* irow = in.row(m, z + r, x + p) + q0 + qq;
            for (std::size_t y = 0; y < os.w; ++y) s += grow[y] * irow[y];
          }
        gw[g.weight_index(j0 + jj, m, r, p, q0 + qq)] = s;
      }
    return;
  }
  Vec acc[JB][NQ];
  for (auto& row : acc)
    for (auto& a : row) a = Vec(0.0);
  const Vec tail = lane_mask(cs.back().skip);
  for (std::size_t z = 0; z < os.t; ++z) {
    for (std::size_t x = 0; x < os.h; ++x) {
      const double* irow = in.row(m, z + r, x + p) + q0;
      const double* grows[JB];
      for (int jj = 0; jj < JB; ++jj) grows[jj] = gp.row(j0 + jj, z, x);
      for (std::size_t ci = 0; ci < cs.size(); ++ci) {
        const Chunk& c = cs[ci];
        Vec gv[JB];
        for (int jj = 0; jj < JB; ++jj) gv[jj] = load(grows[jj] + c.start);
        if (c.skip != 0) {
          for (int jj = 0; jj < JB; ++jj) gv[jj] *= tail;
        }
        for (int qq = 0; qq < NQ; ++qq) {
          const Vec v = load(irow + c.start + qq);
          for (int jj = 0; jj < JB; ++jj) acc[jj][qq] += gv[jj] * v;
        }
      }
    }
  }
  for (int jj = 0; jj < JB; ++jj)
    for (int qq = 0; qq < NQ; ++qq)
      gw[g.weight_index(j0 + jj, m, r, p, q0 + qq)] = stdx::reduce(acc[jj][qq]);
}

template <int JB>
void weight_grad_channels(const Tensor4& gp, const Tensor4& in, const ConvGeometry& g,
                          double* gw, std::size_t j0, const std::vector<Chunk>& cs) {
  for (std::size_t m = 0; m < g.in_channels; ++m)
    for (std::size_t r = 0; r < g.kt; ++r)
      for (std::size_t p = 0; p < g.kh; ++p) {
        std::size_t q0 = 0;
        for (; q0 + 3 <= g.kw; q0 += 3) weight_grad_block<JB, 3>(gp, in, g, gw, j0, m, r, p, q0, cs);
        if (g.kw - q0 == 2) weight_grad_block<JB, 2>(gp, in, g, gw, j0, m, r, p, q0, cs);
        if (g.kw - q0 == 1) weight_grad_block<JB, 1>(gp, in, g, gw, j0, m, r, p, q0, cs);
      }
}

// Rows of grad_pre padded with kw - 1 zeros on both sides.
struct PaddedGrad {
  std::vector<double> data;
  std::size_t row_len = 0;
  Shape4 shape;
  std::size_t pad = 0;

  const double* row(std::size_t j, std::size_t z, std::size_t x) const {
    return data.data() + ((j * shape.t + z) * shape.h + x) * row_len;
  }
};

template <int MB>
void input_grad_block(const PaddedGrad& gp, const ConvGeometry& g, const double* w,
                      Tensor4& gi, std::size_t m0, const std::vector<Chunk>& cs) {
  const Shape4& is = gi.shape();
  const Shape4& os = gp.shape;
  const std::size_t taps = g.taps();
  for (std::size_t zi = 0; zi < is.t; ++zi) {
    const std::size_t r_lo = zi + 1 > os.t ? zi + 1 - os.t : 0;
    const std::size_t r_hi = std::min(g.kt - 1, zi);
    for (std::size_t xi = 0; xi < is.h; ++xi) {
      const std::size_t p_lo = xi + 1 > os.h ? xi + 1 - os.h : 0;
      const std::size_t p_hi = std::min(g.kh - 1, xi);
      if (cs.empty()) {
        for (int mm = 0; mm < MB; ++mm) {
          double* dst = gi.row(m0 + mm, zi, xi);
          for (std::size_t yi = 0; yi < is.w; ++yi) {
            double s = 0.0;
            for (std::size_t j = 0; j < g.out_channels; ++j)
              for (std::size_t r = r_lo; r <= r_hi; ++r)
                for (std::size_t p = p_lo; p <= p_hi; ++p) {
                  const double* grow = gp.row(j, zi - r, xi - p) + gp.pad + yi;
                  const double* wp = w + g.weight_index(j, m0 + mm, r, p, 0);
                  for (std::size_t q = 0; q < g.kw; ++q) s += wp[q] * grow[-static_cast<std::ptrdiff_t>(q)];
                }
            dst[yi] = s;
          }
        }
        continue;
      }
      for (const Chunk& c : cs) {
        Vec acc[MB];
        for (auto& a : acc) a = Vec(0.0);
        for (std::size_t j = 0; j < g.out_channels; ++j) {
          for (std::size_t r = r_lo; r <= r_hi && r_lo <= r_hi; ++r) {
            for (std::size_t p = p_lo; p <= p_hi && p_lo <= p_hi; ++p) {
              const double* grow = gp.row(j, zi - r, xi - p) + gp.pad + c.start;
              const double* wp = w + g.weight_index(j, m0, r, p, 0);
              for (std::size_t q = 0; q < g.kw; ++q) {
                const Vec v = load(grow - q);
                for (int mm = 0; mm < MB; ++mm) acc[mm] += Vec(wp[mm * taps + q]) * v;
              }
            }
          }
        }
        for (int mm = 0; mm < MB; ++mm) {
          acc[mm].copy_to(gi.row(m0 + mm, zi, xi) + c.start, stdx::element_aligned);
        }
      }
    }
  }
}

constexpr double kShifter = 6755399441055744.0;  // 1.5 * 2^52
constexpr double kLog2e = 1.4426950408889634;
constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;

// tanh through exp(2x) = 2^n * e^r with |r| <= ln2/2 and a degree-13
// Taylor polynomial; absolute error is a few ulp of 1. Written on GCC
// vector types (casts between them reinterpret bits) so the 2^n trick
// stays in registers.
typedef double V8d __attribute__((vector_size(64)));
typedef std::int64_t V8i __attribute__((vector_size(64)));

inline V8d tanh8(V8d x) {
  x = x < -20.0 ? V8d{} - 20.0 : x;
  x = x > 20.0 ? V8d{} + 20.0 : x;
  const V8d y = 2.0 * x;
  const V8d t = y * kLog2e + kShifter;
  const V8d nd = t - kShifter;
  const V8d r = (y - nd * kLn2Hi) - nd * kLn2Lo;
  V8d p = V8d{} + 1.0 / 6227020800.0;
  p = p * r + 1.0 / 479001600.0;
  p = p * r + 1.0 / 39916800.0;
  p = p * r + 1.0 / 3628800.0;
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;
  const V8i n = (V8i)t - std::bit_cast<std::int64_t>(kShifter);
  const V8i bits = (n + 1023) << 52;
  const V8d e = p * (V8d)bits;
  return (e - 1.0) / (e + 1.0);
}

}  // namespace

void conv3d_correlate(const Tensor4& in, const ConvGeometry& g, const double* w,
                      const double* b, Tensor4& out) {
  const auto cs = chunks(out.shape().w);
  std::size_t j = 0;
  for (; j + 8 <= g.out_channels; j += 8) correlate_block<8>(in, g, w, b, out, j, cs);
  for (; j + 4 <= g.out_channels; j += 4) correlate_block<4>(in, g, w, b, out, j, cs);
  for (; j < g.out_channels; ++j) correlate_block<1>(in, g, w, b, out, j, cs);
}

void conv3d_weight_grad(const Tensor4& grad_pre, const Tensor4& in,
                        const ConvGeometry& g, double* gw) {
  const auto cs = chunks(grad_pre.shape().w);
  std::size_t j = 0;
  for (; j + 4 <= g.out_channels; j += 4) weight_grad_channels<4>(grad_pre, in, g, gw, j, cs);
  for (; j < g.out_channels; ++j) weight_grad_channels<1>(grad_pre, in, g, gw, j, cs);
}

void conv3d_input_grad(const Tensor4& grad_pre, const ConvGeometry& g,
                       const double* w, Tensor4& grad_in) {
  PaddedGrad gp;
  gp.shape = grad_pre.shape();
  gp.pad = g.kw - 1;
  gp.row_len = gp.shape.w + 2 * gp.pad;
  gp.data.assign(gp.shape.c * gp.shape.t * gp.shape.h * gp.row_len, 0.0);
  for (std::size_t j = 0; j < gp.shape.c; ++j)
    for (std::size_t z = 0; z < gp.shape.t; ++z)
      for (std::size_t x = 0; x < gp.shape.h; ++x) {
        const double* src = grad_pre.row(j, z, x);
        std::copy(src, src + gp.shape.w, const_cast<double*>(gp.row(j, z, x)) + gp.pad);
      }
  const auto cs = chunks(grad_in.shape().w);
  std::size_t m = 0;
  for (; m + 8 <= g.in_channels; m += 8) input_grad_block<8>(gp, g, w, grad_in, m, cs);
  for (; m + 4 <= g.in_channels; m += 4) input_grad_block<4>(gp, g, w, grad_in, m, cs);
  for (; m < g.in_channels; ++m) input_grad_block<1>(gp, g, w, grad_in, m, cs);
}

void tanh_inplace(std::span<double> values) {
  double* v = values.data();
  const std::size_t n = values.size();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    V8d x;
    std::memcpy(&x, v + i, sizeof x);
    x = tanh8(x);
    std::memcpy(v + i, &x, sizeof x);
  }
  if (i < n) {
    V8d x{};
    std::memcpy(&x, v + i, (n - i) * sizeof(double));
    x = tanh8(x);
    std::memcpy(v + i, &x, (n - i) * sizeof(double));
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  Vec acc[4] = {Vec(0.0), Vec(0.0), Vec(0.0), Vec(0.0)};
  std::size_t i = 0;
  for (; i + 4 * kLanes <= n; i += 4 * kLanes) {
    for (int k = 0; k < 4; ++k) {
      acc[k] += load(a + i + k * kLanes) * load(b + i + k * kLanes);
    }
  }
  for (; i + kLanes <= n; i += kLanes) acc[0] += load(a + i) * load(b + i);
  double s = stdx::reduce((acc[0] + acc[1]) + (acc[2] + acc[3]));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace gait3d::nn::kernels

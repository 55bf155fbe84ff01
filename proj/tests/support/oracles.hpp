#pragma once

// Independent reference implementations used as test oracles. They favour
// the most literal reading of each definition over speed.

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "gait3d/image.hpp"
#include "gait3d/layers.hpp"
#include "gait3d/rng.hpp"
#include "gait3d/tensor.hpp"

namespace oracle {

using gait3d::BinaryMask;
using gait3d::BoundingBox;
using gait3d::Rng;
using gait3d::nn::Shape4;
using gait3d::nn::Tensor4;

enum class MaskKind { kNoise, kBlobs, kStrokes, kMixed };

// Random test mask: iid noise, unions of rectangles and discs, thick
// random-walk strokes, or all three overlaid.
BinaryMask random_mask(Rng& rng, int w, int h, MaskKind kind);
BinaryMask random_mask(Rng& rng, int max_side);

struct FloodComponent {
  BoundingBox box;
  long area = 0;
};

// Breadth-first 8-connected flood fill, components in raster order of the
// first pixel reached.
std::vector<FloodComponent> flood_components(const BinaryMask& m);
int count_components(const BinaryMask& m);

BinaryMask erode_ref(const BinaryMask& m);
BinaryMask dilate_ref(const BinaryMask& m);

bool has_2x2_block(const BinaryMask& m);

// Textbook Zhang-Suen: both sub-iterations flag against the unmodified
// mask and delete all flags at once, until nothing changes.
BinaryMask zhang_suen_parallel(const BinaryMask& m);

// Six nested loops over (j, z, x, y) and (m, r, p, q), then std::tanh.
Tensor4 conv3d_direct(const Tensor4& in, const gait3d::nn::ConvGeometry& g,
                      const gait3d::nn::ParamBlock& params);

Tensor4 random_tensor(Rng& rng, const Shape4& s, double lo = -1.0, double hi = 1.0);
std::vector<double> random_vector(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0);

// |a - b| / max(|a|, |b|), with the denominator floored at `floor`.
double rel_error(double a, double b, double floor = 1e-6);

// Central difference of f at x[i] with step h; x is restored.
double central_difference(const std::function<double()>& f, double& x, double h = 1e-5);

// Offsets of all windows of length `len` stepping by `stride` that fit in
// `n`, by direct enumeration.
std::vector<int> window_offsets(int n, int len, int stride);

}  // namespace oracle

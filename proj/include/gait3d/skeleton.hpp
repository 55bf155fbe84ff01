#pragma once

#include <vector>

#include "gait3d/image.hpp"

namespace gait3d::skel {

// A mask produced by a pixel-reduction operation. It is a subset of its
// source mask and, except where topology forbids it, contains no 2x2
// all-foreground block.
using SkeletonMask = BinaryMask;

/// B: foreground count among the 8 neighbours. A: number of
/// background-to-foreground transitions walking the ring clockwise from
/// north (N, NE, E, SE, S, SW, W, NW, back to N).
struct NeighborStats {
  int foreground = 0;
  int transitions = 0;

  bool operator==(const NeighborStats&) const = default;
};

NeighborStats neighbor_stats(const BinaryMask& mask, int x, int y);

/// Zhang-Suen thinning to a fixed point.
///
/// Each sub-iteration flags pixels against the mask as it stood when the
/// sub-iteration began. Flagged pixels are then removed in raster order,
/// skipping any whose removal would no longer keep 2 <= B <= 6 and A = 1
/// against the partially updated mask; plain parallel removal can erase
/// 2x2 squares and two-pixel diagonals outright. A final pass per
/// iteration removes non-end pixels that still sit in a 2x2 foreground
/// block: simple ones first, then ones whose removal keeps the foreground
/// locally connected but opens a background hole. When neither applies, a
/// block pixel goes if the number of 8-connected components is unchanged.
/// A block whose every pixel is the only link to some branch stays.
SkeletonMask thin(const BinaryMask& mask);

/// Chessboard distance from each foreground pixel to the nearest
/// background pixel (out-of-image counts as background); 0 on background.
std::vector<int> chessboard_distance(const BinaryMask& mask);

/// Ridge pixels of the chessboard distance field (>= all 8 neighbours),
/// thinned back to one-pixel width.
SkeletonMask medial_axis(const BinaryMask& mask);

}  // namespace gait3d::skel

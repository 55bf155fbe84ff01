#pragma once

#include <optional>
#include <span>
#include <vector>

#include "gait3d/image.hpp"

namespace gait3d::seg {

/// Per-pixel round(0.299 r + 0.587 g + 0.114 b).
GrayFrame to_grayscale(const GrayFrame& r, const GrayFrame& g,
                       const GrayFrame& b);

/// Foreground iff |frame - background| > threshold.
BinaryMask background_subtract(const GrayFrame& frame,
                               const GrayFrame& background, int threshold);

// 3x3 full structuring element, out-of-image pixels are background.
BinaryMask erode(const BinaryMask& mask);
BinaryMask dilate(const BinaryMask& mask);

// erode(dilate(m)) then dilate(erode(.)).
BinaryMask close(const BinaryMask& mask);
BinaryMask open(const BinaryMask& mask);
BinaryMask denoise(const BinaryMask& mask);

/// One 8-connected foreground component.
struct Component {
  BoundingBox box;
  long area = 0;
};

/// Labels 8-connected components. labels[i] is 0 for background and
/// 1 + component index otherwise; components are numbered in raster order
/// of their first pixel.
struct Labeling {
  std::vector<int> labels;
  std::vector<Component> components;
};

Labeling label_components(const BinaryMask& mask);

// Bounding boxes of every component with area >= min_area, in raster order.
std::vector<BoundingBox> detect_objects(const BinaryMask& mask, long min_area);

// Largest component with area >= min_area (first in raster order on ties).
std::optional<BoundingBox> detect_object(const BinaryMask& mask, long min_area);

/// Without history: the largest detection. With history: the detection
/// whose centre is nearest the previous centre, ties to larger area and then
/// to the row-major-first top-left corner.
std::optional<BoundingBox> select_tracked(
    std::span<const BoundingBox> detections,
    const std::optional<BoundingBox>& previous);

/// A fixed-size normalized mask with at least one foreground pixel.
class Silhouette {
 public:
  explicit Silhouette(BinaryMask mask);

  const BinaryMask& mask() const { return mask_; }
  int width() const { return mask_.width(); }
  int height() const { return mask_.height(); }

 private:
  BinaryMask mask_;
};

/// Crop to `box`, scale with preserved aspect ratio (nearest neighbour) so
/// the crop fits out_h x out_w touching at least one pair of borders, and
/// centre on a background canvas.
Silhouette extract_silhouette(const BinaryMask& mask, const BoundingBox& box,
                              int out_h, int out_w);

}  // namespace gait3d::seg

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gait3d/error.hpp"

namespace gait3d {

/// Single-channel 8-bit raster, row-major.
class GrayFrame {
 public:
  GrayFrame() = default;
  GrayFrame(int width, int height, std::uint8_t fill = 0);
  GrayFrame(int width, int height, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  std::uint8_t at(int x, int y) const { return data_[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return data_[index(x, y)]; }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  bool operator==(const GrayFrame&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Row-major foreground flags stored one byte per pixel (0 or 1).
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  bool at(int x, int y) const { return data_[index(x, y)] != 0; }
  // Out-of-image reads are background.
  bool get(int x, int y) const { return contains(x, y) && at(x, y); }
  void set(int x, int y, bool v) { data_[index(x, y)] = v ? 1 : 0; }

  std::size_t count() const;
  bool empty_foreground() const { return count() == 0; }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  bool operator==(const BinaryMask&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

struct BoundingBox {
  int x0 = 0;
  int y0 = 0;
  int w = 1;
  int h = 1;

  long area() const { return static_cast<long>(w) * h; }
  double center_x() const { return x0 + (w - 1) / 2.0; }
  double center_y() const { return y0 + (h - 1) / 2.0; }
  bool fits(int image_w, int image_h) const {
    return w >= 1 && h >= 1 && x0 >= 0 && y0 >= 0 && x0 + w <= image_w &&
           y0 + h <= image_h;
  }

  bool operator==(const BoundingBox&) const = default;
};

BinaryMask complement(const BinaryMask& m);

// m1 ⊆ m2 pixelwise; masks must share dimensions.
bool is_subset(const BinaryMask& m1, const BinaryMask& m2);

// |a ∩ b| / |a ∪ b|; 1 when both are empty.
double iou(const BinaryMask& a, const BinaryMask& b);

// Foreground as 255, background as 0.
GrayFrame to_frame(const BinaryMask& m);

}  // namespace gait3d

#include "gait3d/image.hpp"

#include <algorithm>
#include <string>

namespace gait3d {

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw DimensionError("image dimensions must be positive, got " +
                         std::to_string(width) + "x" + std::to_string(height));
  }
}

void check_same(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw DimensionError("mask dimensions differ");
  }
}

}  // namespace

GrayFrame::GrayFrame(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayFrame::GrayFrame(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw DimensionError("frame data length does not match width x height");
  }
}

BinaryMask::BinaryMask(int width, int height, bool fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(
      std::count_if(data_.begin(), data_.end(), [](std::uint8_t v) { return v != 0; }));
}

BinaryMask complement(const BinaryMask& m) {
  BinaryMask out = m;
  for (auto& v : out.data()) v = v ? 0 : 1;
  return out;
}

bool is_subset(const BinaryMask& m1, const BinaryMask& m2) {
  check_same(m1, m2);
  for (std::size_t i = 0; i < m1.size(); ++i) {
    if (m1.data()[i] && !m2.data()[i]) return false;
  }
  return true;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  check_same(a, b);
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a.data()[i] != 0;
    const bool y = b.data()[i] != 0;
    inter += (x && y) ? 1 : 0;
    uni += (x || y) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

GrayFrame to_frame(const BinaryMask& m) {
  GrayFrame out(m.width(), m.height());
  for (std::size_t i = 0; i < m.size(); ++i) {
    out.data()[i] = m.data()[i] ? 255 : 0;
  }
  return out;
}

}  // namespace gait3d

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gait3d/error.hpp"

namespace gait3d::nn {

/// Channels x frames x rows x cols.
struct Shape4 {
  std::size_t c = 1;
  std::size_t t = 1;
  std::size_t h = 1;
  std::size_t w = 1;

  std::size_t size() const { return c * t * h * w; }
  std::string str() const;
  bool operator==(const Shape4&) const = default;
};

/// Dense rank-4 array of doubles, row-major over (c, t, h, w).
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 shape, double fill = 0.0)
      : shape_(shape), data_(shape.size(), fill) {}
  Tensor4(Shape4 shape, std::vector<double> data);

  const Shape4& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  std::size_t offset(std::size_t c, std::size_t t, std::size_t h,
                     std::size_t w) const {
    return ((c * shape_.t + t) * shape_.h + h) * shape_.w + w;
  }
  double at(std::size_t c, std::size_t t, std::size_t h, std::size_t w) const {
    return data_[offset(c, t, h, w)];
  }
  double& at(std::size_t c, std::size_t t, std::size_t h, std::size_t w) {
    return data_[offset(c, t, h, w)];
  }

  // Pointer to the start of row (c, t, h).
  const double* row(std::size_t c, std::size_t t, std::size_t h) const {
    return data_.data() + offset(c, t, h, 0);
  }
  double* row(std::size_t c, std::size_t t, std::size_t h) {
    return data_.data() + offset(c, t, h, 0);
  }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }
  std::vector<double>& storage() { return data_; }

  // Same data, new shape with equal element count.
  Tensor4 reshaped(Shape4 shape) const&;
  Tensor4 reshaped(Shape4 shape) &&;

  bool all_finite() const;
  bool operator==(const Tensor4&) const = default;

 private:
  Shape4 shape_{0, 0, 0, 0};
  std::vector<double> data_;
};

}  // namespace gait3d::nn

#include "gait3d/tensor.hpp"

#include <cmath>

namespace gait3d::nn {

std::string Shape4::str() const {
  return std::to_string(c) + "x" + std::to_string(t) + "x" + std::to_string(h) +
         "x" + std::to_string(w);
}

Tensor4::Tensor4(Shape4 shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_.str());
  }
}

Tensor4 Tensor4::reshaped(Shape4 shape) const& {
  return Tensor4(*this).reshaped(shape);
}

Tensor4 Tensor4::reshaped(Shape4 shape) && {
  if (shape.size() != data_.size()) {
    throw ShapeError("cannot reshape " + shape_.str() + " to " + shape.str());
  }
  shape_ = shape;
  return std::move(*this);
}

bool Tensor4::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace gait3d::nn

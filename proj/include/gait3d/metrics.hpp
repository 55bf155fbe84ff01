#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gait3d::nn {

/// Summary of a model over a set of clips.
struct Metrics {
  double loss = 0.0;                  // mean cross-entropy
  double categorical_accuracy = 0.0;  // fraction of argmax hits
  double mean_absolute_error = 0.0;   // mean |p_k - onehot_k|
  double value_accuracy = 0.0;        // accuracy on the held-out partition
};

// First index of the maximum.
std::size_t argmax(std::span<const double> values);

double categorical_accuracy(std::span<const std::vector<double>> predictions,
                            std::span<const std::size_t> labels);

double mean_absolute_error(std::span<const std::vector<double>> predictions,
                           std::span<const std::size_t> labels);

}  // namespace gait3d::nn

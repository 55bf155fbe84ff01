#include "gait3d/metrics.hpp"

#include <cmath>
#include <string>

#include "gait3d/error.hpp"

namespace gait3d::nn {

namespace {

void check(std::span<const std::vector<double>> predictions,
           std::span<const std::size_t> labels) {
  if (predictions.empty()) throw ParameterError("metrics need at least one prediction");
  if (predictions.size() != labels.size()) {
    throw ParameterError("metrics: " + std::to_string(predictions.size()) +
                         " predictions for " + std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    if (labels[i] >= p.size()) throw ParameterError("metrics: label out of range");
    double s = 0.0;
    for (double v : p) s += v;
    if (std::abs(s - 1.0) > 1e-9) {
      throw ParameterError("metrics: prediction " + std::to_string(i) +
                           " does not sum to 1");
    }
  }
}

}  // namespace

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

double categorical_accuracy(std::span<const std::vector<double>> predictions,
                            std::span<const std::size_t> labels) {
  check(predictions, labels);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    hits += argmax(predictions[i]) == labels[i] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double mean_absolute_error(std::span<const std::vector<double>> predictions,
                           std::span<const std::size_t> labels) {
  check(predictions, labels);
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    for (std::size_t k = 0; k < predictions[i].size(); ++k) {
      const double target = k == labels[i] ? 1.0 : 0.0;
      total += std::abs(predictions[i][k] - target);
      ++n;
    }
  }
  return total / static_cast<double>(n);
}

}  // namespace gait3d::nn

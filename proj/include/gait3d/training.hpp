#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "gait3d/dataset.hpp"
#include "gait3d/metrics.hpp"
#include "gait3d/model.hpp"

namespace gait3d::pipeline {

struct TrainConfig {
  int clip_len = 16;
  int stride = 4;
  int epochs = 100;
  double learning_rate = 0.05;
  int batch_size = 8;
  double split_ratio = 0.8;
  std::uint64_t seed = 42;
  InputMode input_mode = InputMode::kSilhouette;
  unsigned threads = 0;  // 0: all cores

  // Throws ParameterError on an invalid field.
  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double train_mae = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

using MetricsLog = std::vector<EpochMetrics>;

// Header epoch,train_loss,train_acc,train_mae,val_loss,val_acc.
std::string format_metrics_csv(const MetricsLog& log);
void write_metrics_csv(const std::filesystem::path& path, const MetricsLog& log);

struct TrainResult {
  nn::ModelParams params;
  MetricsLog log;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Mini-batch SGD on batch-mean gradients. Train metrics are the running
/// means over each epoch's training passes (dropout active); validation
/// metrics come from evaluate() on the test clips after the epoch.
TrainResult train(const nn::ModelSpec& spec, const std::vector<Clip>& train_clips,
                  const std::vector<Clip>& test_clips, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Eval-mode inference over all clips. value_accuracy equals
/// categorical_accuracy: it is the accuracy on whichever clips are passed.
nn::Metrics evaluate(const nn::ModelParams& params, const nn::ModelSpec& spec,
                     const std::vector<Clip>& clips, unsigned threads = 0);

struct Prediction {
  int subject_id = 1;  // 1-based
  std::vector<double> probabilities;
};

Prediction predict(const nn::ModelParams& params, const nn::ModelSpec& spec,
                   const nn::Tensor4& clip);

/// Preprocessed frames of every sequence in the manifest, in record order.
struct PreparedDataset {
  Manifest manifest;
  std::vector<std::vector<seg::Silhouette>> silhouettes;
};

PreparedDataset prepare_dataset(const Manifest& manifest,
                                const SegmentationConfig& seg_config,
                                unsigned threads = 0);

/// Clips of the given records (matched by sequence_dir) in `mode`.
std::vector<Clip> clips_for(const PreparedDataset& data,
                            const std::vector<SequenceRecord>& records,
                            InputMode mode, int clip_len, int stride,
                            unsigned threads = 0);

nn::Shape4 input_shape(const TrainConfig& config,
                       const SegmentationConfig& seg_config);

/// Everything produced by one train/evaluate run.
struct ModeRun {
  InputMode mode = InputMode::kSilhouette;
  nn::ModelParams params;
  MetricsLog log;
  nn::Metrics train_metrics;  // last epoch, running training metrics
  nn::Metrics test_metrics;   // eval mode on the held-out clips
};

struct ComparisonReport {
  ModeRun silhouette;
  ModeRun skeleton;
};

// Reference values reported for CASIA-B (silhouette, skeleton); printed in
// the report footer only.
struct ReferenceRow {
  const char* name;
  double silhouette;
  double skeleton;
};
inline constexpr ReferenceRow kCasiaReference[] = {
    {"Accuracy", 90.16, 94.27},
    {"Loss", 0.2980, 1.856},
    {"Value Accuracy", 79.84, 90.56},
    {"Categorical Accuracy", 90.16, 94.27},
    {"Mean Absolute Error", 0.0131, 0.073},
};

using ProgressCallback = std::function<void(InputMode, const EpochMetrics&)>;

/// Splits once, then trains and evaluates the same model spec in silhouette
/// and skeleton mode with the same seed.
ComparisonReport compare_modes(const PreparedDataset& data,
                               const nn::ModelSpec& spec,
                               const TrainConfig& config,
                               const ProgressCallback& progress = {});

// Plain-text table: five parameter rows by two columns, reference footer.
std::string format_report(const ComparisonReport& report);

/// Train/evaluate a single mode (used by compare_modes and the CLI).
ModeRun run_mode(const PreparedDataset& data, const Split& split,
                 const nn::ModelSpec& spec, const TrainConfig& config,
                 InputMode mode, const EpochCallback& on_epoch = {});

}  // namespace gait3d::pipeline

#include "gait3d/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

#include "gait3d/error.hpp"
#include "gait3d/parallel.hpp"
#include "gait3d/rng.hpp"

namespace gait3d::pipeline {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (clip_len < 2) throw ParameterError("clip_len must be >= 2");
  if (stride < 1) throw ParameterError("stride must be >= 1");
  if (epochs < 1) throw ParameterError("epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ParameterError("learning_rate must be positive");
  }
  if (batch_size < 1) throw ParameterError("batch_size must be >= 1");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ParameterError("split_ratio must be in (0, 1)");
}

std::string format_metrics_csv(const MetricsLog& log) {
  std::string out = "epoch,train_loss,train_acc,train_mae,val_loss,val_acc\n";
  char line[256];
  for (const auto& m : log) {
    std::snprintf(line, sizeof line, "%d,%.10f,%.10f,%.10f,%.10f,%.10f\n", m.epoch, m.train_loss,
                  m.train_acc, m.train_mae, m.val_loss, m.val_acc);
    out += line;
  }
  return out;
}

void write_metrics_csv(const fs::path& path, const MetricsLog& log) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << format_metrics_csv(log);
  if (!f) throw IoError("write failed: " + path.string());
}

namespace {

void check_classes(const nn::ModelSpec& spec, const std::vector<Clip>& clips) {
  const std::size_t k = spec.num_classes();
  for (const auto& c : clips) {
    if (c.label >= k) {
      throw ParameterError("clip label " + std::to_string(c.label) + " outside the model's " +
                           std::to_string(k) + " classes");
    }
    if (!(c.data.shape() == spec.input)) {
      throw ShapeError("clip shape " + c.data.shape().str() + " does not match model input " +
                       spec.input.str());
    }
  }
}

double mean_abs_error_one(std::span<const double> probs, std::size_t label) {
  double s = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) s += std::abs(probs[k] - (k == label ? 1.0 : 0.0));
  return s / static_cast<double>(probs.size());
}

bool all_finite(const nn::ModelParams& p) {
  for (const auto& b : p.blocks) {
    for (double v : b.weights)
      if (!std::isfinite(v)) return false;
    for (double v : b.bias)
      if (!std::isfinite(v)) return false;
  }
  return true;
}

struct SampleResult {
  nn::ModelParams grads;
  double loss = 0.0;
  double mae = 0.0;
  bool correct = false;
};

}  // namespace

TrainResult train(const nn::ModelSpec& spec, const std::vector<Clip>& train_clips,
                  const std::vector<Clip>& test_clips, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  spec.shapes();
  if (train_clips.empty()) throw ParameterError("no training clips");
  if (test_clips.empty()) throw ParameterError("no test clips");
  check_classes(spec, train_clips);
  check_classes(spec, test_clips);

  TrainResult result;
  result.params = nn::init_params(spec, derive_seed(config.seed, stream::kInit));
  Rng shuffle_rng(derive_seed(config.seed, stream::kShuffle));
  const std::uint64_t dropout_root = derive_seed(config.seed, stream::kDropout);
  const unsigned threads = config.threads ? config.threads : default_threads();

  const std::size_t n = train_clips.size();
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);
  std::vector<SampleResult> samples(batch);
  std::uint64_t sample_counter = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0, mae_sum = 0.0;
    std::size_t hits = 0;
    int batch_index = 0;
    for (std::size_t start = 0; start < n; start += batch, ++batch_index) {
      const std::size_t count = std::min(batch, n - start);
      const std::uint64_t first = sample_counter;
      sample_counter += count;
      // Each sample owns its dropout stream, so results do not depend on
      // how the batch is spread over threads.
      parallel_for(count, threads, [&](std::size_t i) {
        const Clip& clip = train_clips[order[start + i]];
        Rng rng(derive_seed(dropout_root, first + i));
        nn::Trace trace;
        const auto logits = nn::forward(spec, result.params, clip.data, nn::Mode::kTrain, &rng, &trace);
        const auto ce = nn::softmax_cross_entropy(logits, clip.label);
        SampleResult& s = samples[i];
        s.loss = ce.loss;
        s.mae = mean_abs_error_one(ce.probs, clip.label);
        s.correct = nn::argmax(ce.probs) == clip.label;
        if (std::isfinite(ce.loss)) s.grads = nn::backward(spec, result.params, trace, ce.grad_logits);
      });
      nn::ModelParams grads = nn::zero_params(spec);
      for (std::size_t i = 0; i < count; ++i) {
        if (!std::isfinite(samples[i].loss)) {
          throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                std::to_string(batch_index + 1));
        }
        nn::accumulate(grads, samples[i].grads);
        loss_sum += samples[i].loss;
        mae_sum += samples[i].mae;
        hits += samples[i].correct ? 1 : 0;
      }
      nn::scale(grads, 1.0 / static_cast<double>(count));
      nn::sgd_step(result.params, grads, config.learning_rate);
      if (!all_finite(result.params)) {
        throw DivergenceError("non-finite parameters at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(batch_index + 1));
      }
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / static_cast<double>(n);
    m.train_acc = static_cast<double>(hits) / static_cast<double>(n);
    m.train_mae = mae_sum / static_cast<double>(n);
    const nn::Metrics val = evaluate(result.params, spec, test_clips, threads);
    m.val_loss = val.loss;
    m.val_acc = val.categorical_accuracy;
    result.log.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return result;
}

nn::Metrics evaluate(const nn::ModelParams& params, const nn::ModelSpec& spec,
                     const std::vector<Clip>& clips, unsigned threads) {
  if (clips.empty()) throw ParameterError("evaluate: empty clip list");
  check_classes(spec, clips);
  std::vector<std::vector<double>> probs(clips.size());
  std::vector<double> losses(clips.size());
  std::vector<std::size_t> labels(clips.size());
  parallel_for(clips.size(), threads ? threads : default_threads(), [&](std::size_t i) {
    const auto logits = nn::forward(spec, params, clips[i].data, nn::Mode::kEval, nullptr, nullptr);
    auto ce = nn::softmax_cross_entropy(logits, clips[i].label);
    losses[i] = ce.loss;
    probs[i] = std::move(ce.probs);
    labels[i] = clips[i].label;
  });
  nn::Metrics m;
  double loss = 0.0;
  for (double l : losses) loss += l;
  m.loss = loss / static_cast<double>(clips.size());
  m.categorical_accuracy = nn::categorical_accuracy(probs, labels);
  m.mean_absolute_error = nn::mean_absolute_error(probs, labels);
  m.value_accuracy = m.categorical_accuracy;
  return m;
}

Prediction predict(const nn::ModelParams& params, const nn::ModelSpec& spec,
                   const nn::Tensor4& clip) {
  if (!(clip.shape() == spec.input)) {
    throw ShapeError("clip shape " + clip.shape().str() + " does not match model input " +
                     spec.input.str());
  }
  const auto logits = nn::forward(spec, params, clip, nn::Mode::kEval, nullptr, nullptr);
  Prediction p;
  p.probabilities = nn::softmax(logits);
  p.subject_id = static_cast<int>(nn::argmax(p.probabilities)) + 1;
  return p;
}

PreparedDataset prepare_dataset(const Manifest& manifest, const SegmentationConfig& seg_config,
                                unsigned threads) {
  manifest.validate(true);
  PreparedDataset data;
  data.manifest = manifest;
  data.silhouettes.resize(manifest.records.size());
  parallel_for(manifest.records.size(), threads ? threads : default_threads(), [&](std::size_t i) {
    const auto& r = manifest.records[i];
    data.silhouettes[i] = extract_silhouettes(load_sequence(manifest.absolute_dir(r), r.frame_count), seg_config);
  });
  return data;
}

std::vector<Clip> clips_for(const PreparedDataset& data, const std::vector<SequenceRecord>& records,
                            InputMode mode, int clip_len, int stride, unsigned threads) {
  std::map<fs::path, std::size_t> index;
  for (std::size_t i = 0; i < data.manifest.records.size(); ++i) {
    index.emplace(data.manifest.records[i].sequence_dir, i);
  }
  std::vector<std::vector<Clip>> per(records.size());
  parallel_for(records.size(), threads ? threads : default_threads(), [&](std::size_t i) {
    const auto it = index.find(records[i].sequence_dir);
    if (it == index.end()) {
      throw DatasetError("sequence " + records[i].sequence_dir.string() + " is not in the dataset");
    }
    const auto frames = apply_input_mode(data.silhouettes[it->second], mode);
    per[i] = build_clips(frames, clip_len, stride, static_cast<std::size_t>(records[i].subject_id - 1),
                         records[i].sequence_dir.generic_string());
  });
  std::vector<Clip> out;
  for (auto& v : per)
    for (auto& c : v) out.push_back(std::move(c));
  return out;
}

nn::Shape4 input_shape(const TrainConfig& config, const SegmentationConfig& seg_config) {
  return {1, static_cast<std::size_t>(config.clip_len), static_cast<std::size_t>(seg_config.out_h),
          static_cast<std::size_t>(seg_config.out_w)};
}

ModeRun run_mode(const PreparedDataset& data, const Split& split, const nn::ModelSpec& spec,
                 const TrainConfig& config, InputMode mode, const EpochCallback& on_epoch) {
  TrainConfig cfg = config;
  cfg.input_mode = mode;
  cfg.validate();
  const auto train_clips = clips_for(data, split.train, mode, cfg.clip_len, cfg.stride, cfg.threads);
  const auto test_clips = clips_for(data, split.test, mode, cfg.clip_len, cfg.stride, cfg.threads);
  auto trained = train(spec, train_clips, test_clips, cfg, on_epoch);
  ModeRun run;
  run.mode = mode;
  run.params = std::move(trained.params);
  run.log = std::move(trained.log);
  run.test_metrics = evaluate(run.params, spec, test_clips, cfg.threads);
  const EpochMetrics& last = run.log.back();
  run.train_metrics.loss = last.train_loss;
  run.train_metrics.categorical_accuracy = last.train_acc;
  run.train_metrics.mean_absolute_error = last.train_mae;
  run.train_metrics.value_accuracy = run.test_metrics.categorical_accuracy;
  return run;
}

ComparisonReport compare_modes(const PreparedDataset& data, const nn::ModelSpec& spec,
                               const TrainConfig& config, const ProgressCallback& progress) {
  config.validate();
  const Split split = split_dataset(data.manifest, config.split_ratio, config.seed);
  auto hook = [&](InputMode mode) -> EpochCallback {
    if (!progress) return {};
    return [&progress, mode](const EpochMetrics& m) { progress(mode, m); };
  };
  ComparisonReport report;
  report.silhouette = run_mode(data, split, spec, config, InputMode::kSilhouette, hook(InputMode::kSilhouette));
  report.skeleton = run_mode(data, split, spec, config, InputMode::kSkeleton, hook(InputMode::kSkeleton));
  return report;
}

std::string format_report(const ComparisonReport& report) {
  const nn::Metrics& s = report.silhouette.train_metrics;
  const nn::Metrics& k = report.skeleton.train_metrics;
  const std::pair<const char*, std::pair<double, double>> rows[] = {
      {"Accuracy", {100.0 * s.categorical_accuracy, 100.0 * k.categorical_accuracy}},
      {"Loss", {s.loss, k.loss}},
      {"Value Accuracy", {100.0 * s.value_accuracy, 100.0 * k.value_accuracy}},
      {"Categorical Accuracy", {100.0 * s.categorical_accuracy, 100.0 * k.categorical_accuracy}},
      {"Mean Absolute Error", {s.mean_absolute_error, k.mean_absolute_error}},
  };
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-22s %12s %12s\n", "Parameter", "Silhouette", "Skeleton");
  out += line;
  for (const auto& [name, v] : rows) {
    std::snprintf(line, sizeof line, "%-22s %12.4f %12.4f\n", name, v.first, v.second);
    out += line;
  }
  out += "\nAccuracies in percent; Value Accuracy is measured on the held-out split.\n";
  out += "Reference (CASIA-B, 124 subjects):\n";
  for (const auto& r : kCasiaReference) {
    std::snprintf(line, sizeof line, "%-22s %12.4f %12.4f\n", r.name, r.silhouette, r.skeleton);
    out += line;
  }
  return out;
}

}  // namespace gait3d::pipeline

// gait3d command-line front end.

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gait3d/config.hpp"
#include "gait3d/dataset.hpp"
#include "gait3d/error.hpp"
#include "gait3d/image_io.hpp"
#include "gait3d/model_io.hpp"
#include "gait3d/parallel.hpp"
#include "gait3d/skeleton.hpp"
#include "gait3d/synthgait.hpp"
#include "gait3d/training.hpp"

namespace fs = std::filesystem;
using namespace gait3d;
using pipeline::InputMode;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::string fmt_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

struct Setting {
  std::string key;
  std::string fallback;  // empty: unset
  std::string help;
};

const std::vector<Setting>& settings() {
  static const std::vector<Setting> all = [] {
    const synth::DatasetOptions d;
    const pipeline::SegmentationConfig s;
    const pipeline::TrainConfig t;
    return std::vector<Setting>{
        {"out", "", "output directory"},
        {"manifest", "", "dataset manifest (manifest.tsv)"},
        {"model", "", "model file (.g3dc)"},
        {"model-spec", "", "layer description file; default architecture when unset"},
        {"sequence", "", "directory holding frame_NNNN images"},
        {"start", "0", "index of the first silhouette of the predicted clip"},
        {"partition", "test", "clips to evaluate: test, train or all"},
        {"seed", std::to_string(t.seed), "root random seed"},
        {"subjects", std::to_string(d.n_subjects), "number of synthetic subjects"},
        {"sequences", std::to_string(d.sequences_per_subject), "sequences per subject"},
        {"statuses", "NM", "comma-separated walking statuses (NM, CL, BG)"},
        {"angles", "90", "comma-separated view angles (90, or 270 for the mirrored walk)"},
        {"frames", std::to_string(d.frames_per_sequence), "frames per sequence, background included"},
        {"frame-height", std::to_string(d.frame_h), "synthetic frame height"},
        {"frame-width", std::to_string(d.frame_w), "synthetic frame width"},
        {"threshold", std::to_string(s.threshold), "background subtraction threshold"},
        {"min-area", fmt_double(s.min_area_fraction), "minimum object area, fraction of the frame"},
        {"sil-height", std::to_string(s.out_h), "silhouette height"},
        {"sil-width", std::to_string(s.out_w), "silhouette width"},
        {"background", "", "background image; first frame of each sequence when unset"},
        {"epochs", std::to_string(t.epochs), "training epochs"},
        {"learning-rate", fmt_double(t.learning_rate), "SGD learning rate"},
        {"batch-size", std::to_string(t.batch_size), "mini-batch size"},
        {"clip-len", std::to_string(t.clip_len), "frames per clip"},
        {"stride", std::to_string(t.stride), "offset between consecutive clips"},
        {"split-ratio", fmt_double(t.split_ratio), "fraction of each subject's sequences used for training"},
        {"input-mode", std::string(pipeline::to_string(t.input_mode)), "silhouette, skeleton or medial"},
        {"threads", std::to_string(t.threads), "worker threads, 0 for all cores"},
    };
  }();
  return all;
}

const Setting& setting(const std::string& key) {
  for (const auto& s : settings())
    if (s.key == key) return s;
  throw std::logic_error("unknown setting " + key);
}

/// One subcommand: the settings it accepts, their flag values, and the
/// optional --config file they override.
class Command {
 public:
  Command(CLI::App& app, const std::string& name, const std::string& description,
          std::vector<std::string> keys, std::vector<std::string> required = {})
      : keys_(std::move(keys)), required_(std::move(required)) {
    sub_ = app.add_subcommand(name, description);
    sub_->add_option("--config", config_path_, "key = value settings file; flags take precedence")->type_name("");
    for (const auto& k : keys_) {
      const Setting& s = setting(k);
      std::string help = s.help;
      if (!s.fallback.empty()) help += " [" + s.fallback + "]";
      opts_[k] = sub_->add_option("--" + k, flags_[k], help)->type_name("");
    }
  }

  bool parsed() const { return sub_->parsed(); }
  std::string help() const { return sub_->help(); }

  /// Defaults, then the config file, then flags.
  KeyValues resolve() const {
    KeyValues out;
    for (const auto& k : keys_) {
      const auto& fb = setting(k).fallback;
      if (!fb.empty()) out[k] = fb;
    }
    if (!config_path_.empty()) {
      for (const auto& [k, v] : read_key_values(config_path_)) {
        if (std::find(keys_.begin(), keys_.end(), k) != keys_.end()) {
          out[k] = v;
        } else if (std::none_of(settings().begin(), settings().end(),
                                [&](const Setting& s) { return s.key == k; })) {
          throw ParameterError("config file " + config_path_ + ": unknown key '" + k + "'");
        }
        // Keys known to other commands are ignored so one file can drive all.
      }
    }
    for (const auto& k : keys_) {
      if (opts_.at(k)->count() > 0) out[k] = flags_.at(k);
    }
    for (const auto& k : required_) {
      if (out[k].empty()) throw ParameterError("--" + k + " is required");
    }
    return out;
  }

 private:
  CLI::App* sub_ = nullptr;
  std::vector<std::string> keys_;
  std::vector<std::string> required_;
  std::string config_path_;
  std::map<std::string, std::string> flags_;
  std::map<std::string, CLI::Option*> opts_;
};

// Typed access to resolved settings; malformed values are usage errors.
class Settings {
 public:
  explicit Settings(KeyValues kv) : kv_(std::move(kv)) {}

  const KeyValues& all() const { return kv_; }
  bool has(const std::string& k) const {
    auto it = kv_.find(k);
    return it != kv_.end() && !it->second.empty();
  }
  std::string str(const std::string& k) const { return has(k) ? kv_.at(k) : std::string{}; }
  long integer(const std::string& k) const {
    const std::string v = str(k);
    std::size_t used = 0;
    long out = 0;
    try {
      out = std::stol(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (v.empty() || used != v.size()) throw ParameterError("--" + k + ": expected an integer, got '" + v + "'");
    return out;
  }
  std::uint64_t u64(const std::string& k) const {
    const std::string v = str(k);
    std::size_t used = 0;
    std::uint64_t out = 0;
    try {
      out = std::stoull(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (v.empty() || v[0] == '-' || used != v.size()) {
      throw ParameterError("--" + k + ": expected a non-negative integer, got '" + v + "'");
    }
    return out;
  }
  double real(const std::string& k) const {
    const std::string v = str(k);
    std::size_t used = 0;
    double out = 0;
    try {
      out = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (v.empty() || used != v.size()) throw ParameterError("--" + k + ": expected a number, got '" + v + "'");
    return out;
  }

 private:
  KeyValues kv_;
};

int as_int(const Settings& s, const std::string& k) { return static_cast<int>(s.integer(k)); }

void echo_config(const fs::path& out, const Settings& s) {
  fs::create_directories(out);
  std::ofstream f(out / "config.txt");
  if (!f) throw IoError("cannot write " + (out / "config.txt").string());
  f << format_key_values(s.all());
}

pipeline::SegmentationConfig seg_config(const Settings& s) {
  pipeline::SegmentationConfig c;
  c.threshold = as_int(s, "threshold");
  c.min_area_fraction = s.real("min-area");
  c.out_h = as_int(s, "sil-height");
  c.out_w = as_int(s, "sil-width");
  if (c.threshold < 0 || c.threshold > 255) throw ParameterError("--threshold must be in [0, 255]");
  if (!(c.min_area_fraction >= 0.0 && c.min_area_fraction < 1.0)) {
    throw ParameterError("--min-area must be in [0, 1)");
  }
  if (c.out_h < 1 || c.out_w < 1) throw ParameterError("silhouette size must be positive");
  if (s.has("background")) c.background = s.str("background");
  return c;
}

pipeline::TrainConfig train_config(const Settings& s) {
  pipeline::TrainConfig c;
  c.seed = s.u64("seed");
  c.epochs = as_int(s, "epochs");
  c.learning_rate = s.real("learning-rate");
  c.batch_size = as_int(s, "batch-size");
  c.clip_len = as_int(s, "clip-len");
  c.stride = as_int(s, "stride");
  c.split_ratio = s.real("split-ratio");
  c.input_mode = pipeline::parse_input_mode(s.str("input-mode"));
  const long threads = s.integer("threads");
  if (threads < 0) throw ParameterError("--threads must be >= 0");
  c.threads = static_cast<unsigned>(threads);
  c.validate();
  return c;
}

nn::ModelSpec model_spec(const Settings& s, const nn::Shape4& input, std::size_t classes) {
  if (!s.has("model-spec")) return nn::default_model_spec(input, classes);
  std::ifstream f(s.str("model-spec"));
  if (!f) throw IoError("cannot read model spec " + s.str("model-spec"));
  std::stringstream ss;
  ss << f.rdbuf();
  return nn::parse_model_spec(ss.str(), input, classes);
}

void print_epoch(const char* tag, const pipeline::EpochMetrics& m) {
  std::fprintf(stderr, "%s epoch %3d  loss %.4f  acc %.4f  mae %.4f  val_loss %.4f  val_acc %.4f\n",
               tag, m.epoch, m.train_loss, m.train_acc, m.train_mae, m.val_loss, m.val_acc);
}

int frames_in(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DatasetError("no such sequence directory: " + dir.string());
  int n = 0;
  while (fs::exists(pipeline::frame_path(dir, n))) ++n;
  if (n == 0) throw DatasetError("no frame_0000 image in " + dir.string());
  return n;
}

std::string frame_tag(int k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", k);
  return buf;
}

int cmd_synth(const Settings& s) {
  synth::DatasetOptions o;
  o.seed = s.u64("seed");
  o.n_subjects = as_int(s, "subjects");
  o.sequences_per_subject = as_int(s, "sequences");
  o.frames_per_sequence = as_int(s, "frames");
  o.frame_h = as_int(s, "frame-height");
  o.frame_w = as_int(s, "frame-width");
  o.statuses.clear();
  std::stringstream ss(s.str("statuses"));
  for (std::string item; std::getline(ss, item, ',');) {
    o.statuses.push_back(pipeline::parse_status(item));
  }
  o.angles.clear();
  std::stringstream as(s.str("angles"));
  for (std::string item; std::getline(as, item, ',');) {
    try {
      o.angles.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ParameterError("--angles: bad angle '" + item + "'");
    }
  }
  const fs::path out = s.str("out");
  echo_config(out, s);
  const auto manifest = synth::generate_dataset(o, out);
  std::printf("wrote %zu sequences to %s\n", manifest.records.size(), (out / "manifest.tsv").c_str());
  return kExitOk;
}

int cmd_preprocess(const Settings& s) {
  const auto seg = seg_config(s);
  const InputMode mode = pipeline::parse_input_mode(s.str("input-mode"));
  const fs::path out = s.str("out");
  const auto manifest = pipeline::read_manifest(s.str("manifest"));
  echo_config(out, s);
  const auto data = pipeline::prepare_dataset(manifest, seg, static_cast<unsigned>(s.integer("threads")));
  std::size_t total = 0;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    const fs::path dir = out / r.sequence_dir;
    fs::create_directories(dir);
    const auto frames = pipeline::apply_input_mode(data.silhouettes[i], mode);
    for (std::size_t k = 0; k < frames.size(); ++k) {
      write_mask_pgm(dir / (frame_tag(static_cast<int>(k)) + ".pgm"), frames[k]);
    }
    total += frames.size();
    if (frames.size() + 1 < static_cast<std::size_t>(r.frame_count)) {
      std::fprintf(stderr, "%s: %zu of %d frames kept\n", r.sequence_dir.c_str(), frames.size(),
                   r.frame_count - 1);
    }
  }
  std::printf("wrote %zu %s frames for %zu sequences to %s\n", total,
              std::string(pipeline::to_string(mode)).c_str(), manifest.records.size(), out.c_str());
  return kExitOk;
}

int cmd_stages(const Settings& s) {
  const auto seg = seg_config(s);
  const fs::path dir = s.str("sequence");
  const fs::path out = s.str("out");
  const auto frames = pipeline::load_sequence(dir, frames_in(dir));
  echo_config(out, s);
  int written = 0;
  for (const auto& st : pipeline::process_frames(frames, seg)) {
    const std::string tag = frame_tag(st.frame_index);
    if (!st.silhouette) {
      std::fprintf(stderr, "frame %s: no object detected, skipped\n", tag.c_str());
      continue;
    }
    write_pgm(out / (tag + "_gray.pgm"), st.gray);
    write_mask_pgm(out / (tag + "_mask.pgm"), st.mask);
    write_mask_pgm(out / (tag + "_denoised.pgm"), st.denoised);
    write_mask_pgm(out / (tag + "_sil.pgm"), st.silhouette->mask());
    write_mask_pgm(out / (tag + "_skel.pgm"), skel::thin(st.silhouette->mask()));
    ++written;
  }
  std::printf("wrote stages for %d frames to %s\n", written, out.c_str());
  return kExitOk;
}

int cmd_train(const Settings& s) {
  tune_allocator();
  const auto seg = seg_config(s);
  const auto cfg = train_config(s);
  const fs::path out = s.str("out");
  const auto manifest = pipeline::read_manifest(s.str("manifest"));
  const auto spec = model_spec(s, pipeline::input_shape(cfg, seg),
                               static_cast<std::size_t>(manifest.num_subjects()));
  echo_config(out, s);
  const auto data = pipeline::prepare_dataset(manifest, seg, cfg.threads);
  const auto split = pipeline::split_dataset(manifest, cfg.split_ratio, cfg.seed);
  const auto run = pipeline::run_mode(data, split, spec, cfg, cfg.input_mode,
                                      [](const pipeline::EpochMetrics& m) { print_epoch("train", m); });
  nn::save_model(out / "model.g3dc", spec, run.params);
  pipeline::write_metrics_csv(out / "metrics.csv", run.log);
  const auto& m = run.test_metrics;
  std::printf("test loss %.10f accuracy %.10f mae %.10f\n", m.loss, m.categorical_accuracy,
              m.mean_absolute_error);
  return kExitOk;
}

int cmd_eval(const Settings& s) {
  tune_allocator();
  const auto seg = seg_config(s);
  auto cfg = train_config(s);
  const auto model = nn::load_model(s.str("model"));
  cfg.clip_len = static_cast<int>(model.spec.input.t);
  if (model.spec.input.h != static_cast<std::size_t>(seg.out_h) ||
      model.spec.input.w != static_cast<std::size_t>(seg.out_w)) {
    throw ShapeError("model input " + model.spec.input.str() +
                     " does not match the silhouette size");
  }
  const auto manifest = pipeline::read_manifest(s.str("manifest"));
  const auto data = pipeline::prepare_dataset(manifest, seg, cfg.threads);
  const auto split = pipeline::split_dataset(manifest, cfg.split_ratio, cfg.seed);
  const std::string part = s.str("partition");
  std::vector<pipeline::SequenceRecord> records;
  if (part == "test") {
    records = split.test;
  } else if (part == "train") {
    records = split.train;
  } else if (part == "all") {
    records = manifest.records;
  } else {
    throw ParameterError("--partition must be test, train or all");
  }
  const auto clips = pipeline::clips_for(data, records, cfg.input_mode, cfg.clip_len, cfg.stride, cfg.threads);
  const auto m = pipeline::evaluate(model.params, model.spec, clips, cfg.threads);
  char line[256];
  std::snprintf(line, sizeof line, "clips %zu\nloss %.10f\naccuracy %.10f\nmae %.10f\n",
                clips.size(), m.loss, m.categorical_accuracy, m.mean_absolute_error);
  std::fputs(line, stdout);
  if (s.has("out")) {
    echo_config(s.str("out"), s);
    std::ofstream(fs::path(s.str("out")) / "eval.txt") << line;
  }
  return kExitOk;
}

int cmd_predict(const Settings& s) {
  const auto seg = seg_config(s);
  const InputMode mode = pipeline::parse_input_mode(s.str("input-mode"));
  const auto model = nn::load_model(s.str("model"));
  const fs::path dir = s.str("sequence");
  const auto sils = pipeline::extract_silhouettes(pipeline::load_sequence(dir, frames_in(dir)), seg);
  const auto frames = pipeline::apply_input_mode(sils, mode);
  const long start = s.integer("start");
  const auto len = static_cast<long>(model.spec.input.t);
  if (start < 0 || start + len > static_cast<long>(frames.size())) {
    throw ParameterError("--start " + std::to_string(start) + ": sequence has " +
                         std::to_string(frames.size()) + " silhouettes, clip needs " +
                         std::to_string(len));
  }
  const std::vector<BinaryMask> window(frames.begin() + start, frames.begin() + start + len);
  const auto clips = pipeline::build_clips(window, static_cast<int>(len), 1, 0, dir.string());
  const auto p = pipeline::predict(model.params, model.spec, clips.front().data);
  std::string text = "subject_id " + std::to_string(p.subject_id) + "\nprobabilities";
  char buf[32];
  for (double v : p.probabilities) {
    std::snprintf(buf, sizeof buf, " %.10f", v);
    text += buf;
  }
  text += '\n';
  std::fputs(text.c_str(), stdout);
  if (s.has("out")) {
    echo_config(s.str("out"), s);
    std::ofstream(fs::path(s.str("out")) / "prediction.txt") << text;
  }
  return kExitOk;
}

int cmd_compare(const Settings& s) {
  tune_allocator();
  const auto seg = seg_config(s);
  const auto cfg = train_config(s);
  const fs::path out = s.str("out");
  const auto manifest = pipeline::read_manifest(s.str("manifest"));
  const auto spec = model_spec(s, pipeline::input_shape(cfg, seg),
                               static_cast<std::size_t>(manifest.num_subjects()));
  echo_config(out, s);
  const auto data = pipeline::prepare_dataset(manifest, seg, cfg.threads);
  const auto report = pipeline::compare_modes(
      data, spec, cfg, [](InputMode mode, const pipeline::EpochMetrics& m) {
        print_epoch(mode == InputMode::kSkeleton ? "skeleton  " : "silhouette", m);
      });
  for (const auto* run : {&report.silhouette, &report.skeleton}) {
    const std::string name(pipeline::to_string(run->mode));
    nn::save_model(out / ("model_" + name + ".g3dc"), spec, run->params);
    pipeline::write_metrics_csv(out / ("metrics_" + name + ".csv"), run->log);
  }
  const std::string text = pipeline::format_report(report);
  std::ofstream(out / "report.txt") << text;
  std::fputs(text.c_str(), stdout);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D-CNN gait recognition on silhouette and skeleton clips"};
  app.require_subcommand(1);

  const std::vector<std::string> seg_keys = {"threshold", "min-area", "sil-height", "sil-width", "background"};
  const std::vector<std::string> train_keys = {"seed",       "epochs", "learning-rate", "batch-size",
                                               "clip-len",   "stride", "split-ratio",   "input-mode",
                                               "threads"};
  auto join = [](std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };

  Command synth(app, "synth", "Generate a synthetic gait dataset",
                {"out", "seed", "subjects", "sequences", "statuses", "angles", "frames", "frame-height", "frame-width"},
                {"out"});
  Command preprocess(app, "preprocess", "Extract silhouettes (or skeletons) for every sequence",
                     join({"manifest", "out", "input-mode", "threads"}, seg_keys), {"manifest", "out"});
  Command stages(app, "stages", "Dump every preprocessing stage of one sequence",
                 join({"sequence", "out"}, seg_keys), {"sequence", "out"});
  Command train(app, "train", "Train a model on the training split",
                join(join({"manifest", "out", "model-spec"}, train_keys), seg_keys), {"manifest", "out"});
  Command eval(app, "eval", "Evaluate a saved model",
               join(join({"manifest", "model", "out", "partition"}, train_keys), seg_keys),
               {"manifest", "model"});
  Command predict(app, "predict", "Identify the subject of one clip",
                  join({"model", "sequence", "start", "input-mode", "out"}, seg_keys), {"model", "sequence"});
  Command compare(app, "compare", "Train and evaluate silhouette and skeleton inputs side by side",
                  join(join({"manifest", "out", "model-spec"}, train_keys), seg_keys), {"manifest", "out"});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::vector<std::pair<Command*, int (*)(const Settings&)>> table = {
      {&synth, cmd_synth},     {&preprocess, cmd_preprocess}, {&stages, cmd_stages},
      {&train, cmd_train},     {&eval, cmd_eval},             {&predict, cmd_predict},
      {&compare, cmd_compare},
  };
  for (const auto& [command, run] : table) {
    if (!command->parsed()) continue;
    std::optional<Settings> resolved;
    try {
      resolved.emplace(command->resolve());
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n\n" << command->help();
      return kExitUsage;
    }
    try {
      return run(*resolved);
    } catch (const ParameterError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitRuntime;
    }
  }
  return kExitUsage;
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

#include "gait3d/dataset.hpp"
#include "gait3d/synthgait.hpp"
#include "gait3d/training.hpp"
#include "support/oracles.hpp"

using namespace gait3d;
using namespace gait3d::pipeline;
namespace fs = std::filesystem;

namespace {

Manifest manifest_with(int subjects, int per_subject) {
  Manifest m;
  m.root = "/data";
  for (int s = 1; s <= subjects; ++s)
    for (int k = 1; k <= per_subject; ++k)
      m.records.push_back({sequence_relpath(s, Status::kNM, k, 90), s, Status::kNM, 90, 30});
  return m;
}

std::vector<BinaryMask> blank_frames(int n, int w = 4, int h = 3) {
  return std::vector<BinaryMask>(static_cast<std::size_t>(n), BinaryMask(w, h));
}

constexpr int kClipLen = 10;
constexpr int kSide = 32;

// conv 8@3, pool 2, conv 16@3, pool 2 leaves 1x6x6 per filter on 10x32x32.
nn::ModelSpec small_model(std::size_t classes) {
  return nn::default_model_spec({1, kClipLen, kSide, kSide}, classes);
}

// Clips of one rendered walking sequence per subject, normalized to 32x32.
std::vector<Clip> walker_clips(const std::vector<synth::SubjectProfile>& subjects, int frames,
                               int stride, std::uint64_t seed) {
  SegmentationConfig seg;
  seg.out_h = kSide;
  seg.out_w = kSide;
  std::vector<Clip> out;
  for (const auto& p : subjects) {
    synth::SequenceOptions o;
    o.start_frame = static_cast<long>(seed % 7);
    const auto sils = extract_silhouettes(synth::generate_sequence(p, frames, seed + p.subject_id, o), seg);
    auto clips = build_clips(apply_input_mode(sils, InputMode::kSilhouette), kClipLen, stride,
                             static_cast<std::size_t>(p.subject_id - 1), "s" + std::to_string(p.subject_id));
    for (auto& c : clips) out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

TEST(Manifest, FormatParseRoundTrip) {
  Manifest m = manifest_with(3, 2);
  m.records[1].status = Status::kBG;
  m.records[2].angle = 270;
  const Manifest back = parse_manifest(format_manifest(m), m.root);
  EXPECT_EQ(back.records, m.records);
  EXPECT_EQ(back.num_subjects(), 3);
  EXPECT_NO_THROW(back.validate(false));
}

TEST(Manifest, ParseErrors) {
  EXPECT_THROW(parse_manifest("a\t1\tNM\t90\n", "/"), DatasetError);
  EXPECT_THROW(parse_manifest("a\tx\tNM\t90\t3\n", "/"), DatasetError);
  EXPECT_THROW(parse_manifest("a\t1\tMM\t90\t3\n", "/"), DatasetError);
  EXPECT_THROW(parse_manifest("a\t1\tNM\t91\t3\n", "/"), DatasetError);
  EXPECT_THROW(parse_manifest("a\t0\tNM\t90\t3\n", "/"), DatasetError);
  EXPECT_EQ(parse_manifest("# comment\n\na\t1\tCL\t0\t3\r\n", "/").records.size(), 1u);
}

TEST(Manifest, SubjectIdsMustBeContiguous) {
  Manifest m = manifest_with(3, 1);
  m.records[2].subject_id = 5;
  EXPECT_THROW(m.validate(false), DatasetError);
  EXPECT_THROW(Manifest{}.validate(false), DatasetError);
  EXPECT_THROW(read_manifest("/nonexistent/manifest.tsv"), IoError);
}

TEST(Manifest, Paths) {
  EXPECT_EQ(sequence_relpath(7, Status::kCL, 3, 18), fs::path("007/CL-03/018"));
  EXPECT_EQ(frame_path("seq", 12), fs::path("seq/frame_0012.pgm"));
  EXPECT_EQ(parse_status("BG"), Status::kBG);
  EXPECT_THROW(parse_status("nm"), ParameterError);
  EXPECT_EQ(parse_input_mode("skeleton"), InputMode::kSkeleton);
  EXPECT_THROW(parse_input_mode("edges"), ParameterError);
}

TEST(BuildClips, Examples) {
  EXPECT_EQ(build_clips(blank_frames(16), 16, 4, 0, "a").size(), 1u);
  const auto c = build_clips(blank_frames(20), 16, 4, 2, "a");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].start_frame, 0);
  EXPECT_EQ(c[1].start_frame, 4);
  EXPECT_EQ(c[1].label, 2u);
  EXPECT_EQ(c[1].data.shape(), (nn::Shape4{1, 16, 3, 4}));
  EXPECT_TRUE(build_clips(blank_frames(10), 16, 4, 0, "short").empty());
  EXPECT_THROW(build_clips(blank_frames(20), 16, 0, 0, "a"), ParameterError);
}

TEST(BuildClips, CountMatchesWindowEnumeration) {
  for (int len = 1; len <= 40; ++len)
    for (int clip = 1; clip <= len; ++clip)
      for (int stride = 1; stride <= 9; ++stride) {
        const auto clips = build_clips(blank_frames(len, 1, 1), clip, stride, 0, "x");
        const auto expected = oracle::window_offsets(len, clip, stride);
        ASSERT_EQ(clips.size(), expected.size()) << len << " " << clip << " " << stride;
        ASSERT_EQ(static_cast<int>(clips.size()), (len - clip) / stride + 1);
        for (std::size_t i = 0; i < clips.size(); ++i) ASSERT_EQ(clips[i].start_frame, expected[i]);
      }
}

TEST(BuildClips, CopiesFramesInOrder) {
  std::vector<BinaryMask> frames = blank_frames(6, 2, 2);
  for (int k = 0; k < 6; ++k) frames[static_cast<std::size_t>(k)].set(k % 2, k / 3, true);
  const auto c = build_clips(frames, 3, 3, 0, "x");
  ASSERT_EQ(c.size(), 2u);
  for (int k = 0; k < 6; ++k) {
    const auto& clip = c[static_cast<std::size_t>(k / 3)].data;
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 2; ++x)
        EXPECT_EQ(clip.at(0, static_cast<std::size_t>(k % 3), static_cast<std::size_t>(y),
                          static_cast<std::size_t>(x)),
                  frames[static_cast<std::size_t>(k)].at(x, y) ? 1.0 : 0.0);
  }
}

TEST(Split, Examples) {
  const Split s = split_dataset(manifest_with(4, 10), 0.8, 1);
  EXPECT_EQ(s.train.size(), 32u);
  EXPECT_EQ(s.test.size(), 8u);
  for (int id = 1; id <= 4; ++id) {
    auto count = [id](const std::vector<SequenceRecord>& v) {
      return std::count_if(v.begin(), v.end(), [id](const auto& r) { return r.subject_id == id; });
    };
    EXPECT_EQ(count(s.train), 8);
    EXPECT_EQ(count(s.test), 2);
  }
  const Split half = split_dataset(manifest_with(3, 2), 0.5, 9);
  EXPECT_EQ(half.train.size(), 3u);
  EXPECT_EQ(half.test.size(), 3u);
}

TEST(Split, PartitionProperties) {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const int subjects = rng.uniform_int(1, 8);
    const int per = rng.uniform_int(2, 15);
    const double ratio = rng.uniform(0.05, 0.95);
    const std::uint64_t seed = rng.next();
    const Manifest m = manifest_with(subjects, per);
    const Split s = split_dataset(m, ratio, seed);
    std::set<fs::path> train, test;
    for (const auto& r : s.train) train.insert(r.sequence_dir);
    for (const auto& r : s.test) test.insert(r.sequence_dir);
    ASSERT_EQ(train.size() + test.size(), m.records.size());
    for (const auto& p : train) ASSERT_FALSE(test.count(p));
    std::set<int> train_ids, test_ids;
    for (const auto& r : s.train) train_ids.insert(r.subject_id);
    for (const auto& r : s.test) test_ids.insert(r.subject_id);
    ASSERT_EQ(static_cast<int>(train_ids.size()), subjects);
    ASSERT_EQ(static_cast<int>(test_ids.size()), subjects);
    const Split again = split_dataset(m, ratio, seed);
    ASSERT_EQ(again.train, s.train);
    ASSERT_EQ(again.test, s.test);
  }
}

TEST(Split, Errors) {
  EXPECT_THROW(split_dataset(manifest_with(2, 1), 0.5, 1), DatasetError);
  EXPECT_THROW(split_dataset(manifest_with(2, 4), 1.0, 1), ParameterError);
  EXPECT_THROW(split_dataset(manifest_with(2, 4), 0.0, 1), ParameterError);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.epochs = 0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.learning_rate = -1;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.split_ratio = 1.0;
  EXPECT_THROW(c.validate(), ParameterError);
}

TEST(MetricsCsv, Format) {
  const MetricsLog log{{1, 0.5, 0.25, 0.125, 1.0, 0.75}};
  EXPECT_EQ(format_metrics_csv(log),
            "epoch,train_loss,train_acc,train_mae,val_loss,val_acc\n"
            "1,0.5000000000,0.2500000000,0.1250000000,1.0000000000,0.7500000000\n");
}

TEST(Train, ConstantLabelLossVanishes) {
  // One subject: every clip carries label 0 of a two-way head.
  const auto profiles = synth::sample_profiles(1, 3);
  const auto clips = walker_clips(profiles, 30, 2, 5);
  ASSERT_GE(clips.size(), 8u);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.clip_len = kClipLen;
  cfg.seed = 2;
  const auto r = train(small_model(2), clips, clips, cfg);
  ASSERT_EQ(r.log.size(), 5u);
  EXPECT_LT(r.log.back().val_loss, 0.05);
  EXPECT_LT(r.log.back().val_loss, r.log.front().train_loss);
}

TEST(Train, RejectsBadInputs) {
  const auto clips = walker_clips(synth::sample_profiles(2, 3), 12, 4, 1);
  TrainConfig cfg;
  cfg.clip_len = kClipLen;
  cfg.epochs = 0;
  EXPECT_THROW(train(small_model(2), clips, clips, cfg), ParameterError);
  cfg.epochs = 1;
  EXPECT_THROW(train(small_model(2), {}, clips, cfg), ParameterError);
  EXPECT_THROW(train(small_model(2), clips, {}, cfg), ParameterError);
  auto bad = clips;
  bad[0].label = 5;
  EXPECT_THROW(train(small_model(2), bad, clips, cfg), ParameterError);
}

TEST(Train, DivergenceNamesEpochAndBatch) {
  auto clips = walker_clips(synth::sample_profiles(2, 3), 14, 2, 1);
  const auto test = clips;
  clips[3].data.values()[100] = std::nan("");
  TrainConfig cfg;
  cfg.clip_len = kClipLen;
  cfg.epochs = 3;
  try {
    train(small_model(2), clips, test, cfg);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("epoch 1"), std::string::npos) << what;
    EXPECT_NE(what.find("batch"), std::string::npos) << what;
  }
}

TEST(Train, TwoSubjectsReachPerfectTrainingAccuracy) {
  const auto profiles = synth::sample_profiles(2, 11);
  const auto train_clips = walker_clips(profiles, 29, 2, 11);
  const auto test_clips = walker_clips(profiles, 29, 2, 12);
  ASSERT_EQ(train_clips.size(), 20u);
  TrainConfig cfg;
  cfg.clip_len = kClipLen;
  cfg.epochs = 30;
  cfg.seed = 11;
  const auto r = train(small_model(2), train_clips, test_clips, cfg);
  ASSERT_EQ(r.log.size(), 30u);
  EXPECT_EQ(r.log.back().train_acc, 1.0);
  EXPECT_EQ(evaluate(r.params, small_model(2), train_clips).categorical_accuracy, 1.0);

  // The same seed reproduces every logged number; threads do not matter.
  cfg.epochs = 3;
  cfg.threads = 1;
  const auto a = train(small_model(2), train_clips, test_clips, cfg);
  cfg.threads = 3;
  const auto b = train(small_model(2), train_clips, test_clips, cfg);
  EXPECT_EQ(format_metrics_csv(a.log), format_metrics_csv(b.log));
  EXPECT_EQ(a.params, b.params);

  for (const auto& c : train_clips) {
    const Prediction p = predict(r.params, small_model(2), c.data);
    EXPECT_EQ(p.subject_id, static_cast<int>(c.label) + 1);
  }
}

TEST(Evaluate, UntrainedModelIsNearChance) {
  const auto subjects = synth::sample_profiles(4, 17);
  std::vector<Clip> clips;
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto more = walker_clips(subjects, 29, 2, 100 + s);
    for (auto& c : more) clips.push_back(std::move(c));
  }
  ASSERT_GE(clips.size(), 400u);
  const auto spec = small_model(4);
  // Average over independently initialized models: a single one may favour
  // one class, but the mean hit rate is 1/K.
  double acc = 0.0;
  constexpr int kModels = 8;
  for (int m = 0; m < kModels; ++m) {
    acc += evaluate(nn::init_params(spec, 1000 + m), spec, clips).categorical_accuracy;
  }
  EXPECT_NEAR(acc / kModels, 0.25, 0.05);
}

TEST(Evaluate, RepeatableAndComplete) {
  const auto clips = walker_clips(synth::sample_profiles(3, 4), 14, 2, 6);
  const auto spec = small_model(3);
  const auto params = nn::init_params(spec, 5);
  const nn::Metrics a = evaluate(params, spec, clips, 1);
  const nn::Metrics b = evaluate(params, spec, clips, 4);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.categorical_accuracy, b.categorical_accuracy);
  EXPECT_EQ(a.mean_absolute_error, b.mean_absolute_error);
  EXPECT_EQ(a.value_accuracy, a.categorical_accuracy);
  EXPECT_TRUE(std::isfinite(a.loss));
  EXPECT_THROW(evaluate(params, spec, {}), ParameterError);
}

TEST(Predict, ValidDistribution) {
  const auto spec = small_model(5);
  const auto params = nn::init_params(spec, 8);
  Rng rng(3);
  for (int i = 0; i < 5; ++i) {
    nn::Tensor4 x(spec.input);
    for (double& v : x.values()) v = rng.bernoulli(0.3) ? 1.0 : 0.0;
    const Prediction p = predict(params, spec, x);
    ASSERT_EQ(p.probabilities.size(), 5u);
    EXPECT_NEAR(std::accumulate(p.probabilities.begin(), p.probabilities.end(), 0.0), 1.0, 1e-9);
    EXPECT_EQ(p.subject_id, static_cast<int>(nn::argmax(p.probabilities)) + 1);
  }
  const Prediction blank = predict(params, spec, nn::Tensor4(spec.input));
  EXPECT_NEAR(std::accumulate(blank.probabilities.begin(), blank.probabilities.end(), 0.0), 1.0, 1e-9);
  EXPECT_THROW(predict(params, spec, nn::Tensor4({1, kClipLen, kSide, kSide + 1})), ShapeError);
}

TEST(PreparedDataset, ClipsFollowRecordsAndModes) {
  const fs::path dir = fs::temp_directory_path() / "gait3d_prepared";
  fs::remove_all(dir);
  synth::DatasetOptions o;
  o.n_subjects = 2;
  o.sequences_per_subject = 2;
  o.frames_per_sequence = 14;
  const Manifest m = synth::generate_dataset(o, dir);
  SegmentationConfig seg;
  seg.out_h = kSide;
  seg.out_w = kSide;
  const PreparedDataset data = prepare_dataset(m, seg);
  ASSERT_EQ(data.silhouettes.size(), 4u);
  for (const auto& s : data.silhouettes) EXPECT_EQ(s.size(), 13u);

  const auto sil = clips_for(data, {m.records[3]}, InputMode::kSilhouette, kClipLen, 3);
  const auto sk = clips_for(data, {m.records[3]}, InputMode::kSkeleton, kClipLen, 3);
  ASSERT_EQ(sil.size(), 2u);
  ASSERT_EQ(sk.size(), 2u);
  EXPECT_EQ(sil[0].label, 1u);
  double on_sil = 0, on_sk = 0;
  for (std::size_t i = 0; i < sil[0].data.size(); ++i) {
    const double a = sil[0].data.values()[i], b = sk[0].data.values()[i];
    EXPECT_LE(b, a);
    on_sil += a;
    on_sk += b;
  }
  EXPECT_LT(on_sk, on_sil);

  SequenceRecord missing = m.records[0];
  missing.sequence_dir = "nowhere";
  EXPECT_THROW(clips_for(data, {missing}, InputMode::kSilhouette, kClipLen, 3), DatasetError);
  fs::remove_all(dir);
}

TEST(Report, FiveRowsTwoColumns) {
  ComparisonReport r;
  r.silhouette.train_metrics = {0.25, 0.9, 0.02, 0.85};
  r.skeleton.train_metrics = {0.5, 0.95, 0.01, 0.8};
  const std::string text = format_report(r);
  const std::string table = text.substr(0, text.find("\n\n"));
  std::vector<std::string> lines;
  for (std::size_t at = 0; at < table.size();) {
    const auto nl = table.find('\n', at);
    lines.push_back(table.substr(at, nl - at));
    at = nl == std::string::npos ? table.size() : nl + 1;
  }
  ASSERT_EQ(lines.size(), 6u);
  EXPECT_NE(lines[0].find("Silhouette"), std::string::npos);
  EXPECT_EQ(lines[1].rfind("Accuracy", 0), 0u);
  EXPECT_NE(lines[1].find("90.0000"), std::string::npos);
  EXPECT_NE(lines[1].find("95.0000"), std::string::npos);
  EXPECT_EQ(lines[2].rfind("Loss", 0), 0u);
  EXPECT_EQ(lines[3].rfind("Value Accuracy", 0), 0u);
  EXPECT_NE(lines[3].find("85.0000"), std::string::npos);
  EXPECT_EQ(lines[4].rfind("Categorical Accuracy", 0), 0u);
  EXPECT_EQ(lines[5].rfind("Mean Absolute Error", 0), 0u);
  EXPECT_NE(text.find("94.2700"), std::string::npos);
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gait3d/image.hpp"
#include "gait3d/segmentation.hpp"
#include "gait3d/tensor.hpp"

namespace gait3d::pipeline {

enum class Status { kNM, kCL, kBG };

std::string_view to_string(Status s);
Status parse_status(std::string_view text);  // throws ParameterError

/// One walking sequence on disk.
struct SequenceRecord {
  std::filesystem::path sequence_dir;  // relative to the manifest's root
  int subject_id = 1;
  Status status = Status::kNM;
  int angle = 90;
  int frame_count = 0;

  bool operator==(const SequenceRecord&) const = default;
};

struct Manifest {
  std::filesystem::path root;  // directory sequence paths are relative to
  std::vector<SequenceRecord> records;

  std::filesystem::path absolute_dir(const SequenceRecord& r) const {
    return root / r.sequence_dir;
  }
  int num_subjects() const;
  // Subject ids must be exactly 1..N. With check_files, every sequence
  // directory must hold frame_count frames. Throws DatasetError.
  void validate(bool check_files) const;
};

// Tab-separated: dir, subject, status, angle, frame count; '#' comments.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
std::string format_manifest(const Manifest& manifest);
Manifest parse_manifest(std::string_view text, std::filesystem::path root);

std::filesystem::path sequence_relpath(int subject_id, Status status, int take,
                                       int angle);
std::filesystem::path frame_path(const std::filesystem::path& sequence_dir,
                                 int k);

struct SegmentationConfig {
  int threshold = 30;
  double min_area_fraction = 0.01;  // of the frame's pixel count
  int out_h = 64;
  int out_w = 64;
  // Background image; the sequence's first frame when absent.
  std::optional<std::filesystem::path> background;
};

/// Every intermediate image of one frame.
struct FrameStages {
  int frame_index = 0;
  GrayFrame gray;
  BinaryMask mask;
  BinaryMask denoised;
  std::optional<BoundingBox> box;        // absent: frame discarded
  std::optional<seg::Silhouette> silhouette;
};

/// Grayscale, subtract, denoise, detect/track and normalize each frame.
/// Frame 0 serves as background unless the config names one, in which
/// case every frame is processed.
std::vector<FrameStages> process_frames(const std::vector<GrayFrame>& frames,
                                        const SegmentationConfig& config);

/// Silhouettes of the frames in which a walker was detected, in order.
std::vector<seg::Silhouette> extract_silhouettes(
    const std::vector<GrayFrame>& frames, const SegmentationConfig& config);

std::vector<GrayFrame> load_sequence(const std::filesystem::path& dir,
                                     int frame_count);

enum class InputMode { kSilhouette, kSkeleton, kMedial };

std::string_view to_string(InputMode m);
InputMode parse_input_mode(std::string_view text);  // throws ParameterError

// Silhouettes unchanged, or reduced by thin / medial_axis.
std::vector<BinaryMask> apply_input_mode(
    const std::vector<seg::Silhouette>& silhouettes, InputMode mode);

/// Network input: C = 1, T = clip_len, values in {0, 1}.
struct Clip {
  nn::Tensor4 data;
  std::size_t label = 0;  // 0-based class index (subject_id - 1)
  std::string sequence;
  int start_frame = 0;
};

/// Windows at offsets 0, stride, 2 stride, ... that fit entirely; none (and
/// a warning on stderr) when the sequence is shorter than clip_len.
std::vector<Clip> build_clips(const std::vector<BinaryMask>& frames,
                              int clip_len, int stride, std::size_t label,
                              const std::string& sequence);

struct Split {
  std::vector<SequenceRecord> train;
  std::vector<SequenceRecord> test;
};

/// Per subject: shuffle its sequences with the seeded generator and send
/// the first round(ratio * count) to train, the rest to test, keeping at
/// least one sequence on each side.
Split split_dataset(const Manifest& manifest, double ratio, std::uint64_t seed);

}  // namespace gait3d::pipeline

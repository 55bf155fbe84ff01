#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gait3d/dataset.hpp"
#include "gait3d/image.hpp"

namespace gait3d::synth {

enum class Carry { kNone, kBag, kCoat };

/// Physical and kinematic parameters of one synthetic walker.
struct SubjectProfile {
  int subject_id = 1;
  double thigh_len = 22.0;  // px
  double shin_len = 22.0;
  double torso_len = 26.0;
  double head_radius = 6.0;
  double hip_amp = 25.0;   // degrees
  double knee_amp = 45.0;  // degrees
  int cadence = 28;        // frames per gait cycle
  double limb_thickness = 5.0;
  double phase_offset = 0.0;  // fraction of a cycle
  Carry carry = Carry::kNone;

  // Throws ParameterError when an invariant is violated.
  void validate() const;
};

enum class Leg { kLeft, kRight };

struct GaitPhase {
  double phase = 0.0;  // in [0, 1)
  Leg stance_leg = Leg::kLeft;
};

inline constexpr double kStanceFraction = 0.6;

/// phase = (t mod cadence) / cadence. The left leg's cycle starts at phase
/// 0, the right leg's half a cycle later; stance_leg is the leg owning the
/// current half-cycle.
GaitPhase gait_phase(long t, int cadence);

/// Exact integer test of whether `leg` is in stance at frame t (stance is
/// the first 60% of that leg's own cycle).
bool in_stance(Leg leg, long t, int cadence);

/// Joint angles in degrees; hip positive = thigh swung forward, knee
/// positive = flexion. Root is the hip joint position in pixels.
struct Pose {
  double left_hip = 0.0;
  double right_hip = 0.0;
  double left_knee = 0.0;
  double right_knee = 0.0;
  double root_x = 0.0;
  double root_y = 0.0;
};

/// Fraction of knee_amp applied at a leg's own cycle phase: a full
/// half-sine over the swing window, a small loading-response bump in
/// stance.
double knee_profile(double leg_phase);

/// Root position at t = 0 is (root_x0, root_y0); it advances by `speed`
/// pixels per frame and bobs by torso_len / 30 twice per cycle.
Pose joint_angles(const SubjectProfile& profile, long t, double root_x0 = 0.0,
                  double root_y0 = 0.0, double speed = 0.0);

/// Rasterizes the walker facing +x. Throws GeometryError when any part
/// would fall outside the frame's one-pixel margin.
BinaryMask render_pose(const Pose& pose, const SubjectProfile& profile,
                       int frame_h, int frame_w);

struct SequenceOptions {
  int frame_h = 128;
  int frame_w = 160;
  double speed = 1.5;       // px per frame
  long start_frame = 0;     // gait-cycle frame shown in frame 1
  bool mirrored = false;    // walk toward -x (recorded as angle 270)
};

struct RenderedSequence {
  std::vector<GrayFrame> frames;   // frames[0] is background only
  std::vector<BinaryMask> truth;   // ground-truth walker mask per frame
};

/// n_frames frames: frame 0 is the empty textured background, frames
/// 1..n_frames-1 show the walker.
RenderedSequence render_sequence(const SubjectProfile& profile, int n_frames,
                                 std::uint64_t noise_seed,
                                 const SequenceOptions& options = {});
std::vector<GrayFrame> generate_sequence(const SubjectProfile& profile,
                                         int n_frames, std::uint64_t noise_seed,
                                         const SequenceOptions& options = {});

/// Per-parameter sampling ranges of generated subjects.
struct ProfileRanges {
  double thigh_lo = 18, thigh_hi = 26;
  double shin_lo = 18, shin_hi = 26;
  double torso_lo = 22, torso_hi = 30;
  double head_lo = 5, head_hi = 7;
  double hip_lo = 18, hip_hi = 32;
  double knee_lo = 30, knee_hi = 60;
  int cadence_lo = 20, cadence_hi = 36;
  double thickness_lo = 4, thickness_hi = 7;
};

/// Draws n profiles such that every pair differs by at least
/// `min_separation` of the range in some parameter (rejection sampling,
/// 1000 attempts per subject before GenerationError).
std::vector<SubjectProfile> sample_profiles(int n_subjects, std::uint64_t seed,
                                            const ProfileRanges& ranges = {},
                                            double min_separation = 0.05);

struct DatasetOptions {
  int n_subjects = 10;
  int sequences_per_subject = 12;
  std::vector<pipeline::Status> statuses{pipeline::Status::kNM};
  std::vector<int> angles{90};
  int frames_per_sequence = 32;
  int frame_h = 128;
  int frame_w = 160;
  std::uint64_t seed = 42;
};

/// Writes <root>/<subject:03>/<status>-<take:02>/<angle:03>/frame_<k:04>.pgm
/// for every sequence plus <root>/manifest.tsv, and returns the manifest.
pipeline::Manifest generate_dataset(const DatasetOptions& options,
                                    const std::filesystem::path& out_root);

}  // namespace gait3d::synth

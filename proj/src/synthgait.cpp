#include "gait3d/synthgait.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "gait3d/image_io.hpp"
#include "gait3d/rng.hpp"

namespace gait3d::synth {

namespace fs = std::filesystem;
using pipeline::Status;

namespace {

constexpr double kPi = std::numbers::pi;

double deg2rad(double d) { return d * kPi / 180.0; }

long cycle_frame(long t, int cadence) {
  const long c = cadence;
  return ((t % c) + c) % c;
}

void check_cadence(int cadence) {
  if (cadence < 8) throw ParameterError("cadence must be >= 8 frames, got " + std::to_string(cadence));
}

struct Point {
  double x;
  double y;
};

// Accumulates filled primitives into a mask, refusing anything that would
// touch the one-pixel frame margin.
class Canvas {
 public:
  Canvas(int w, int h) : mask_(w, h) {}

  void capsule(Point a, Point b, double radius) {
    check_extent(std::min(a.x, b.x) - radius, std::max(a.x, b.x) + radius,
                 std::min(a.y, b.y) - radius, std::max(a.y, b.y) + radius);
    const int x0 = static_cast<int>(std::floor(std::min(a.x, b.x) - radius));
    const int x1 = static_cast<int>(std::ceil(std::max(a.x, b.x) + radius));
    const int y0 = static_cast<int>(std::floor(std::min(a.y, b.y) - radius));
    const int y1 = static_cast<int>(std::ceil(std::max(a.y, b.y) + radius));
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        double s = len2 > 0 ? ((x - a.x) * dx + (y - a.y) * dy) / len2 : 0.0;
        s = std::clamp(s, 0.0, 1.0);
        const double ex = a.x + s * dx - x;
        const double ey = a.y + s * dy - y;
        if (ex * ex + ey * ey <= radius * radius) mask_.set(x, y, true);
      }
    }
  }

  void disc(Point c, double radius) { capsule(c, c, radius); }

  void rect(double x0, double y0, double x1, double y1) {
    check_extent(x0, x1, y0, y1);
    for (int y = static_cast<int>(std::ceil(y0)); y <= static_cast<int>(std::floor(y1)); ++y)
      for (int x = static_cast<int>(std::ceil(x0)); x <= static_cast<int>(std::floor(x1)); ++x)
        mask_.set(x, y, true);
  }

  BinaryMask take() && { return std::move(mask_); }

 private:
  void check_extent(double x0, double x1, double y0, double y1) const {
    if (x0 < 1.0 || y0 < 1.0 || x1 > mask_.width() - 2.0 || y1 > mask_.height() - 2.0) {
      throw GeometryError("walker does not fit in the " + std::to_string(mask_.width()) + "x" +
                          std::to_string(mask_.height()) + " frame");
    }
  }

  BinaryMask mask_;
};

BinaryMask mirror(const BinaryMask& m) {
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) out.set(m.width() - 1 - x, y, m.at(x, y));
  return out;
}

}  // namespace

void SubjectProfile::validate() const {
  auto fail = [&](const std::string& what) {
    throw ParameterError("subject " + std::to_string(subject_id) + ": " + what);
  };
  if (!(thigh_len > 0 && shin_len > 0 && torso_len > 0 && head_radius > 0 && limb_thickness > 0)) {
    fail("all lengths must be positive");
  }
  if (!(hip_amp > 0 && hip_amp < 90)) fail("hip_amp must be in (0, 90) degrees");
  if (!(knee_amp > 0 && knee_amp < 90)) fail("knee_amp must be in (0, 90) degrees");
  if (cadence < 8) fail("cadence must be >= 8 frames");
}

GaitPhase gait_phase(long t, int cadence) {
  check_cadence(cadence);
  const long tm = cycle_frame(t, cadence);
  return {static_cast<double>(tm) / cadence, 2 * tm < cadence ? Leg::kLeft : Leg::kRight};
}

bool in_stance(Leg leg, long t, int cadence) {
  check_cadence(cadence);
  const long c = cadence;
  const long tm = cycle_frame(t, cadence);
  if (leg == Leg::kLeft) return 10 * tm < 6 * c;
  // Right leg phase in half-frame units: (2 tm + c) / 2c.
  const long half = (2 * tm + c) % (2 * c);
  return 10 * half < 12 * c;
}

double knee_profile(double leg_phase) {
  if (leg_phase >= kStanceFraction) {
    const double swing = (leg_phase - kStanceFraction) / (2.0 * (1.0 - kStanceFraction));
    return std::max(0.0, std::sin(2.0 * kPi * swing));
  }
  constexpr double kStanceWeight = 0.1;
  return kStanceWeight * std::max(0.0, std::sin(2.0 * kPi * leg_phase / (2.0 * kStanceFraction)));
}

Pose joint_angles(const SubjectProfile& profile, long t, double root_x0, double root_y0,
                  double speed) {
  const double phase = gait_phase(t, profile.cadence).phase;
  const double left = phase;
  const double right = std::fmod(phase + 0.5, 1.0);
  Pose pose;
  pose.left_hip = profile.hip_amp * std::sin(2.0 * kPi * (left + profile.phase_offset));
  pose.right_hip = profile.hip_amp * std::sin(2.0 * kPi * (right + profile.phase_offset));
  pose.left_knee = profile.knee_amp * knee_profile(left);
  pose.right_knee = profile.knee_amp * knee_profile(right);
  pose.root_x = root_x0 + speed * static_cast<double>(t);
  pose.root_y = root_y0 + (profile.torso_len / 30.0) * std::cos(4.0 * kPi * phase);
  return pose;
}

BinaryMask render_pose(const Pose& pose, const SubjectProfile& profile, int frame_h,
                       int frame_w) {
  profile.validate();
  Canvas canvas(frame_w, frame_h);
  const double limb_r = profile.limb_thickness / 2.0;
  const double torso_r = limb_r * 1.6 * (profile.carry == Carry::kCoat ? 1.4 : 1.0);
  const Point hip{pose.root_x, pose.root_y};
  const Point shoulder{pose.root_x, pose.root_y - profile.torso_len};
  canvas.capsule(hip, shoulder, torso_r);
  canvas.disc({shoulder.x, shoulder.y - profile.head_radius * 0.9}, profile.head_radius);
  for (const auto& [hip_deg, knee_deg] :
       std::array{std::pair{pose.left_hip, pose.left_knee}, std::pair{pose.right_hip, pose.right_knee}}) {
    const double a = deg2rad(hip_deg);
    const double shin_a = deg2rad(hip_deg - knee_deg);
    const Point knee{hip.x + profile.thigh_len * std::sin(a), hip.y + profile.thigh_len * std::cos(a)};
    const Point foot{knee.x + profile.shin_len * std::sin(shin_a),
                     knee.y + profile.shin_len * std::cos(shin_a)};
    canvas.capsule(hip, knee, limb_r);
    canvas.capsule(knee, foot, limb_r);
  }
  if (profile.carry == Carry::kBag) {
    const double bag_w = 0.45 * profile.torso_len;
    const double bag_h = 0.5 * profile.torso_len;
    const double top = pose.root_y - 0.45 * profile.torso_len;
    canvas.rect(pose.root_x - torso_r - bag_w, top, pose.root_x, top + bag_h);
  }
  return std::move(canvas).take();
}

RenderedSequence render_sequence(const SubjectProfile& profile, int n_frames,
                                 std::uint64_t noise_seed, const SequenceOptions& options) {
  if (n_frames < 1) throw ParameterError("n_frames must be >= 1");
  profile.validate();
  const int w = options.frame_w;
  const int h = options.frame_h;
  Rng rng(noise_seed);

  // Static textured background: a few random plane waves plus per-pixel grain.
  GrayFrame background(w, h);
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::array<Wave, 3> waves{};
  for (auto& wv : waves) {
    wv = {rng.uniform(0.01, 0.08), rng.uniform(0.01, 0.08), rng.uniform(0.0, 2.0 * kPi),
          rng.uniform(6.0, 12.0)};
  }
  const double base = rng.uniform(55.0, 80.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = base + rng.uniform(-10.0, 10.0);
      for (const auto& wv : waves) v += wv.amp * std::sin(wv.fx * x + wv.fy * y + wv.phase);
      background.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }

  const double leg = profile.thigh_len + profile.shin_len;
  const double root_y0 = h - 4.0 - leg - profile.limb_thickness / 2.0;
  const double travel = options.speed * std::max(0, n_frames - 2);
  const double root_x0 = 0.5 * w - 0.5 * travel;

  RenderedSequence seq;
  seq.frames.reserve(static_cast<std::size_t>(n_frames));
  seq.truth.reserve(static_cast<std::size_t>(n_frames));
  constexpr int kSensorNoise = 6;        // well below the default threshold
  constexpr int kForegroundOffset = 90;  // >= 2x the default threshold
  for (int k = 0; k < n_frames; ++k) {
    BinaryMask truth(w, h);
    if (k > 0) {
      const long t = options.start_frame + (k - 1);
      Pose pose = joint_angles(profile, t, 0.0, root_y0, 0.0);
      pose.root_x = root_x0 + options.speed * (k - 1);
      truth = render_pose(pose, profile, h, w);
      if (options.mirrored) truth = mirror(truth);
    }
    GrayFrame frame = background;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        int v = background.at(x, y) + rng.uniform_int(-kSensorNoise, kSensorNoise);
        if (truth.at(x, y) && !rng.bernoulli(0.005)) v += kForegroundOffset;
        if (!truth.at(x, y) && rng.bernoulli(0.0005)) v += kForegroundOffset;
        frame.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
      }
    seq.frames.push_back(std::move(frame));
    seq.truth.push_back(std::move(truth));
  }
  return seq;
}

std::vector<GrayFrame> generate_sequence(const SubjectProfile& profile, int n_frames,
                                         std::uint64_t noise_seed,
                                         const SequenceOptions& options) {
  return render_sequence(profile, n_frames, noise_seed, options).frames;
}

std::vector<SubjectProfile> sample_profiles(int n_subjects, std::uint64_t seed,
                                            const ProfileRanges& rg, double min_separation) {
  if (n_subjects < 1) throw ParameterError("n_subjects must be >= 1");
  Rng rng(derive_seed(seed, stream::kProfiles));
  std::vector<SubjectProfile> out;
  auto normalized = [&](const SubjectProfile& p) {
    return std::array<double, 8>{
        (p.thigh_len - rg.thigh_lo) / (rg.thigh_hi - rg.thigh_lo),
        (p.shin_len - rg.shin_lo) / (rg.shin_hi - rg.shin_lo),
        (p.torso_len - rg.torso_lo) / (rg.torso_hi - rg.torso_lo),
        (p.head_radius - rg.head_lo) / (rg.head_hi - rg.head_lo),
        (p.hip_amp - rg.hip_lo) / (rg.hip_hi - rg.hip_lo),
        (p.knee_amp - rg.knee_lo) / (rg.knee_hi - rg.knee_lo),
        static_cast<double>(p.cadence - rg.cadence_lo) / (rg.cadence_hi - rg.cadence_lo),
        (p.limb_thickness - rg.thickness_lo) / (rg.thickness_hi - rg.thickness_lo),
    };
  };
  for (int s = 0; s < n_subjects; ++s) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      SubjectProfile p;
      p.subject_id = s + 1;
      p.thigh_len = rng.uniform(rg.thigh_lo, rg.thigh_hi);
      p.shin_len = rng.uniform(rg.shin_lo, rg.shin_hi);
      p.torso_len = rng.uniform(rg.torso_lo, rg.torso_hi);
      p.head_radius = rng.uniform(rg.head_lo, rg.head_hi);
      p.hip_amp = rng.uniform(rg.hip_lo, rg.hip_hi);
      p.knee_amp = rng.uniform(rg.knee_lo, rg.knee_hi);
      p.cadence = rng.uniform_int(rg.cadence_lo, rg.cadence_hi);
      p.limb_thickness = rng.uniform(rg.thickness_lo, rg.thickness_hi);
      p.phase_offset = rng.uniform();
      const auto np = normalized(p);
      placed = std::all_of(out.begin(), out.end(), [&](const SubjectProfile& q) {
        const auto nq = normalized(q);
        double sep = 0.0;
        for (std::size_t k = 0; k < np.size(); ++k) sep = std::max(sep, std::abs(np[k] - nq[k]));
        return sep >= min_separation;
      });
      if (placed) out.push_back(p);
    }
    if (!placed) {
      throw GenerationError("could not place subject " + std::to_string(s + 1) +
                            " with the required separation after 1000 attempts");
    }
  }
  return out;
}

pipeline::Manifest generate_dataset(const DatasetOptions& options, const fs::path& out_root) {
  if (options.n_subjects < 2) throw ParameterError("need at least 2 subjects");
  if (options.sequences_per_subject < 2) throw ParameterError("need at least 2 sequences per subject");
  if (options.statuses.empty()) throw ParameterError("need at least one walking status");
  if (options.angles.empty()) throw ParameterError("need at least one angle");
  for (int a : options.angles) {
    if (a != 90 && a != 270) {
      throw ParameterError("only the side view (90) and its mirror (270) can be synthesized");
    }
  }
  if (options.frames_per_sequence < 2) throw ParameterError("need at least 2 frames per sequence");

  const auto profiles = sample_profiles(options.n_subjects, options.seed);
  pipeline::Manifest manifest;
  manifest.root = out_root;
  const std::uint64_t seq_root = derive_seed(options.seed, stream::kSequence);
  for (const auto& base : profiles) {
    std::map<std::pair<Status, int>, int> takes;
    for (int i = 0; i < options.sequences_per_subject; ++i) {
      const std::size_t ns = options.statuses.size();
      const Status status = options.statuses[static_cast<std::size_t>(i) % ns];
      const int angle = options.angles[(static_cast<std::size_t>(i) / ns) % options.angles.size()];
      const int take = ++takes[{status, angle}];

      SubjectProfile profile = base;
      profile.carry = status == Status::kBG   ? Carry::kBag
                      : status == Status::kCL ? Carry::kCoat
                                              : Carry::kNone;
      const std::uint64_t seq_seed =
          derive_seed(seq_root, static_cast<std::uint64_t>(base.subject_id) * 100000u + i);
      Rng seq_rng(seq_seed);
      SequenceOptions so;
      so.frame_h = options.frame_h;
      so.frame_w = options.frame_w;
      so.start_frame = seq_rng.uniform_int(0, profile.cadence - 1);
      so.speed = seq_rng.uniform(1.3, 1.7);
      so.mirrored = angle == 270;
      const auto frames =
          generate_sequence(profile, options.frames_per_sequence, seq_rng.next(), so);

      pipeline::SequenceRecord rec;
      rec.sequence_dir = pipeline::sequence_relpath(base.subject_id, status, take, angle);
      rec.subject_id = base.subject_id;
      rec.status = status;
      rec.angle = angle;
      rec.frame_count = options.frames_per_sequence;
      const fs::path dir = out_root / rec.sequence_dir;
      fs::create_directories(dir);
      for (int k = 0; k < rec.frame_count; ++k) {
        write_pgm(pipeline::frame_path(dir, k), frames[static_cast<std::size_t>(k)]);
      }
      manifest.records.push_back(std::move(rec));
    }
  }
  pipeline::write_manifest(out_root / "manifest.tsv", manifest);
  return manifest;
}

}  // namespace gait3d::synth

#include "gait3d/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "gait3d/image_io.hpp"
#include "gait3d/rng.hpp"
#include "gait3d/skeleton.hpp"

namespace gait3d::pipeline {

namespace fs = std::filesystem;

std::string_view to_string(Status s) {
  switch (s) {
    case Status::kNM: return "NM";
    case Status::kCL: return "CL";
    case Status::kBG: return "BG";
  }
  return "?";
}

Status parse_status(std::string_view text) {
  if (text == "NM") return Status::kNM;
  if (text == "CL") return Status::kCL;
  if (text == "BG") return Status::kBG;
  throw ParameterError("unknown walking status '" + std::string(text) +
                       "' (expected NM, CL or BG)");
}

std::string_view to_string(InputMode m) {
  switch (m) {
    case InputMode::kSilhouette: return "silhouette";
    case InputMode::kSkeleton: return "skeleton";
    case InputMode::kMedial: return "medial";
  }
  return "?";
}

InputMode parse_input_mode(std::string_view text) {
  if (text == "silhouette") return InputMode::kSilhouette;
  if (text == "skeleton") return InputMode::kSkeleton;
  if (text == "medial") return InputMode::kMedial;
  throw ParameterError("unknown input mode '" + std::string(text) +
                       "' (expected silhouette, skeleton or medial)");
}

int Manifest::num_subjects() const {
  int n = 0;
  for (const auto& r : records) n = std::max(n, r.subject_id);
  return n;
}

void Manifest::validate(bool check_files) const {
  if (records.empty()) throw DatasetError("manifest has no records");
  std::set<int> ids;
  for (const auto& r : records) ids.insert(r.subject_id);
  if (*ids.begin() != 1 || *ids.rbegin() != static_cast<int>(ids.size())) {
    throw DatasetError("subject ids must be contiguous from 1; found " +
                       std::to_string(ids.size()) + " distinct ids up to " +
                       std::to_string(*ids.rbegin()));
  }
  if (!check_files) return;
  for (const auto& r : records) {
    const fs::path dir = absolute_dir(r);
    if (!fs::is_directory(dir)) throw DatasetError("missing sequence directory " + dir.string());
    for (int k = 0; k < r.frame_count; ++k) {
      if (!fs::exists(frame_path(dir, k))) {
        throw DatasetError("missing frame " + frame_path(dir, k).string());
      }
    }
  }
}

Manifest parse_manifest(std::string_view text, fs::path root) {
  Manifest m;
  m.root = std::move(root);
  std::istringstream lines{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    auto fail = [&](const std::string& why) {
      throw DatasetError("manifest line " + std::to_string(line_no) + ": " + why);
    };
    if (fields.size() != 5) fail("expected 5 tab-separated fields");
    SequenceRecord r;
    r.sequence_dir = fields[0];
    try {
      r.subject_id = std::stoi(fields[1]);
      r.angle = std::stoi(fields[3]);
      r.frame_count = std::stoi(fields[4]);
    } catch (const std::exception&) {
      fail("non-numeric subject, angle or frame count");
    }
    try {
      r.status = parse_status(fields[2]);
    } catch (const ParameterError& e) {
      fail(e.what());
    }
    if (r.subject_id < 1) fail("subject id must be >= 1");
    if (r.angle < 0 || r.angle >= 360 || r.angle % 18 != 0) fail("angle must be a multiple of 18 in [0, 360)");
    if (r.frame_count < 1) fail("frame count must be >= 1");
    m.records.push_back(std::move(r));
  }
  return m;
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  Manifest m = parse_manifest(ss.str(), path.parent_path());
  m.validate(false);
  return m;
}

std::string format_manifest(const Manifest& manifest) {
  std::string out = "# sequence_dir\tsubject_id\tstatus\tangle\tframe_count\n";
  for (const auto& r : manifest.records) {
    out += r.sequence_dir.generic_string();
    out += '\t' + std::to_string(r.subject_id);
    out += '\t' + std::string(to_string(r.status));
    out += '\t' + std::to_string(r.angle);
    out += '\t' + std::to_string(r.frame_count) + '\n';
  }
  return out;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << format_manifest(manifest);
}

fs::path sequence_relpath(int subject_id, Status status, int take, int angle) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%03d/%s-%02d/%03d", subject_id,
                std::string(to_string(status)).c_str(), take, angle);
  return buf;
}

fs::path frame_path(const fs::path& sequence_dir, int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04d.pgm", k);
  return sequence_dir / buf;
}

std::vector<GrayFrame> load_sequence(const fs::path& dir, int frame_count) {
  std::vector<GrayFrame> frames;
  frames.reserve(static_cast<std::size_t>(frame_count));
  for (int k = 0; k < frame_count; ++k) frames.push_back(read_gray(frame_path(dir, k)));
  return frames;
}

std::vector<FrameStages> process_frames(const std::vector<GrayFrame>& frames,
                                        const SegmentationConfig& config) {
  std::vector<FrameStages> out;
  if (frames.empty()) return out;
  const GrayFrame background =
      config.background ? read_gray(*config.background) : frames.front();
  const std::size_t first = config.background ? 0 : 1;
  const long pixels = static_cast<long>(background.width()) * background.height();
  const long min_area =
      std::max(1L, static_cast<long>(std::ceil(config.min_area_fraction * pixels)));
  std::optional<BoundingBox> previous;
  for (std::size_t k = first; k < frames.size(); ++k) {
    FrameStages st;
    st.frame_index = static_cast<int>(k);
    st.gray = frames[k];
    st.mask = seg::background_subtract(st.gray, background, config.threshold);
    st.denoised = seg::denoise(st.mask);
    const auto detections = seg::detect_objects(st.denoised, min_area);
    st.box = seg::select_tracked(detections, previous);
    if (st.box) {
      previous = st.box;
      st.silhouette = seg::extract_silhouette(st.denoised, *st.box, config.out_h, config.out_w);
    }
    out.push_back(std::move(st));
  }
  return out;
}

std::vector<seg::Silhouette> extract_silhouettes(const std::vector<GrayFrame>& frames,
                                                 const SegmentationConfig& config) {
  std::vector<seg::Silhouette> out;
  for (auto& st : process_frames(frames, config)) {
    if (st.silhouette) out.push_back(std::move(*st.silhouette));
  }
  return out;
}

std::vector<BinaryMask> apply_input_mode(const std::vector<seg::Silhouette>& silhouettes,
                                         InputMode mode) {
  std::vector<BinaryMask> out;
  out.reserve(silhouettes.size());
  for (const auto& s : silhouettes) {
    switch (mode) {
      case InputMode::kSilhouette: out.push_back(s.mask()); break;
      case InputMode::kSkeleton: out.push_back(skel::thin(s.mask())); break;
      case InputMode::kMedial: out.push_back(skel::medial_axis(s.mask())); break;
    }
  }
  return out;
}

std::vector<Clip> build_clips(const std::vector<BinaryMask>& frames, int clip_len,
                              int stride, std::size_t label, const std::string& sequence) {
  if (stride < 1) throw ParameterError("clip stride must be >= 1");
  if (clip_len < 1) throw ParameterError("clip length must be >= 1");
  std::vector<Clip> clips;
  const int n = static_cast<int>(frames.size());
  if (n < clip_len) {
    std::cerr << "warning: sequence " << sequence << " has " << n
              << " usable frames, fewer than clip length " << clip_len << "; skipped\n";
    return clips;
  }
  const int h = frames.front().height();
  const int w = frames.front().width();
  for (const auto& f : frames) {
    if (f.width() != w || f.height() != h) throw DimensionError("clip frames differ in size");
  }
  for (int start = 0; start + clip_len <= n; start += stride) {
    Clip c;
    c.data = nn::Tensor4(nn::Shape4{1, static_cast<std::size_t>(clip_len),
                                    static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
    auto v = c.data.values();
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int t = 0; t < clip_len; ++t) {
      const auto& src = frames[static_cast<std::size_t>(start + t)].data();
      for (std::size_t i = 0; i < plane; ++i) v[t * plane + i] = src[i] ? 1.0 : 0.0;
    }
    c.label = label;
    c.sequence = sequence;
    c.start_frame = start;
    clips.push_back(std::move(c));
  }
  return clips;
}

Split split_dataset(const Manifest& manifest, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ParameterError("split ratio must be in (0, 1)");
  std::map<int, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    by_subject[manifest.records[i].subject_id].push_back(i);
  }
  Rng rng(derive_seed(seed, stream::kSplit));
  Split split;
  for (auto& [subject, idx] : by_subject) {
    if (idx.size() < 2) {
      throw DatasetError("subject " + std::to_string(subject) +
                         " has fewer than 2 sequences; cannot split");
    }
    rng.shuffle(std::span<std::size_t>(idx));
    const long count = static_cast<long>(idx.size());
    const long n_train = std::clamp(std::lround(ratio * static_cast<double>(count)), 1L, count - 1);
    for (long k = 0; k < count; ++k) {
      (k < n_train ? split.train : split.test).push_back(manifest.records[idx[static_cast<std::size_t>(k)]]);
    }
  }
  return split;
}

}  // namespace gait3d::pipeline

#include "gait3d/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <tuple>

namespace gait3d::seg {

namespace {

void require_same(int w1, int h1, int w2, int h2, const char* what) {
  if (w1 != w2 || h1 != h2) {
    throw DimensionError(std::string(what) + ": dimensions differ (" +
                         std::to_string(w1) + "x" + std::to_string(h1) + " vs " +
                         std::to_string(w2) + "x" + std::to_string(h2) + ")");
  }
}

// Separable 3x3 min/max with background outside the image.
template <bool kDilate>
BinaryMask morph(const BinaryMask& in) {
  const int w = in.width();
  const int h = in.height();
  BinaryMask horiz(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool l = in.get(x - 1, y);
      const bool c = in.at(x, y);
      const bool r = in.get(x + 1, y);
      horiz.set(x, y, kDilate ? (l || c || r) : (l && c && r));
    }
  }
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool u = horiz.get(x, y - 1);
      const bool c = horiz.at(x, y);
      const bool d = horiz.get(x, y + 1);
      out.set(x, y, kDilate ? (u || c || d) : (u && c && d));
    }
  }
  return out;
}

// Row-major order of top-left corners.
bool corner_before(const BoundingBox& a, const BoundingBox& b) {
  return std::tie(a.y0, a.x0) < std::tie(b.y0, b.x0);
}

}  // namespace

GrayFrame to_grayscale(const GrayFrame& r, const GrayFrame& g, const GrayFrame& b) {
  require_same(r.width(), r.height(), g.width(), g.height(), "to_grayscale");
  require_same(r.width(), r.height(), b.width(), b.height(), "to_grayscale");
  GrayFrame out(r.width(), r.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double y = 0.299 * r.data()[i] + 0.587 * g.data()[i] + 0.114 * b.data()[i];
    out.data()[i] = static_cast<std::uint8_t>(std::clamp<long>(std::lround(y), 0, 255));
  }
  return out;
}

BinaryMask background_subtract(const GrayFrame& frame, const GrayFrame& background,
                               int threshold) {
  require_same(frame.width(), frame.height(), background.width(),
               background.height(), "background_subtract");
  if (threshold < 0 || threshold > 255) {
    throw ParameterError("threshold must be in [0, 255]");
  }
  BinaryMask out(frame.width(), frame.height());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const int d = std::abs(int{frame.data()[i]} - int{background.data()[i]});
    out.data()[i] = d > threshold ? 1 : 0;
  }
  return out;
}

BinaryMask erode(const BinaryMask& mask) { return morph<false>(mask); }
BinaryMask dilate(const BinaryMask& mask) { return morph<true>(mask); }
BinaryMask close(const BinaryMask& mask) { return erode(dilate(mask)); }
BinaryMask open(const BinaryMask& mask) { return dilate(erode(mask)); }
BinaryMask denoise(const BinaryMask& mask) { return open(close(mask)); }

Labeling label_components(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  Labeling out;
  out.labels.assign(mask.size(), 0);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      if (!mask.at(x, y) || out.labels[idx] != 0) continue;
      const int label = static_cast<int>(out.components.size()) + 1;
      int x_min = x, x_max = x, y_min = y, y_max = y;
      long area = 0;
      out.labels[idx] = label;
      stack.assign(1, {x, y});
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        ++area;
        x_min = std::min(x_min, cx);
        x_max = std::max(x_max, cx);
        y_min = std::min(y_min, cy);
        y_max = std::max(y_max, cy);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx;
            const int ny = cy + dy;
            if (!mask.get(nx, ny)) continue;
            const std::size_t n = static_cast<std::size_t>(ny) * w + nx;
            if (out.labels[n] != 0) continue;
            out.labels[n] = label;
            stack.emplace_back(nx, ny);
          }
        }
      }
      out.components.push_back(
          {BoundingBox{x_min, y_min, x_max - x_min + 1, y_max - y_min + 1}, area});
    }
  }
  return out;
}

std::vector<BoundingBox> detect_objects(const BinaryMask& mask, long min_area) {
  if (min_area < 1) throw ParameterError("min_area must be >= 1");
  std::vector<BoundingBox> boxes;
  for (const auto& c : label_components(mask).components) {
    if (c.area >= min_area) boxes.push_back(c.box);
  }
  return boxes;
}

std::optional<BoundingBox> detect_object(const BinaryMask& mask, long min_area) {
  if (min_area < 1) throw ParameterError("min_area must be >= 1");
  std::optional<Component> best;
  for (const auto& c : label_components(mask).components) {
    if (c.area >= min_area && (!best || c.area > best->area)) best = c;
  }
  if (!best) return std::nullopt;
  return best->box;
}

std::optional<BoundingBox> select_tracked(std::span<const BoundingBox> detections,
                                          const std::optional<BoundingBox>& previous) {
  if (detections.empty()) return std::nullopt;
  const BoundingBox* best = &detections[0];
  auto distance2 = [&](const BoundingBox& b) {
    const double dx = b.center_x() - previous->center_x();
    const double dy = b.center_y() - previous->center_y();
    return dx * dx + dy * dy;
  };
  for (const auto& cand : detections.subspan(1)) {
    bool better;
    if (previous) {
      const double dc = distance2(cand);
      const double db = distance2(*best);
      better = dc < db ||
               (dc == db && (cand.area() > best->area() ||
                             (cand.area() == best->area() && corner_before(cand, *best))));
    } else {
      better = cand.area() > best->area() ||
               (cand.area() == best->area() && corner_before(cand, *best));
    }
    if (better) best = &cand;
  }
  return *best;
}

Silhouette::Silhouette(BinaryMask mask) : mask_(std::move(mask)) {
  if (mask_.empty_foreground()) {
    throw EmptySilhouetteError("silhouette has no foreground pixel");
  }
}

Silhouette extract_silhouette(const BinaryMask& mask, const BoundingBox& box,
                              int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw ParameterError("output size must be positive");
  if (!box.fits(mask.width(), mask.height())) {
    throw BoundsError("bounding box lies outside the mask");
  }
  const int ch = box.h;
  const int cw = box.w;
  long fg = 0;
  int first_x = -1, first_y = -1;
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      if (mask.at(box.x0 + x, box.y0 + y)) {
        if (fg++ == 0) {
          first_x = x;
          first_y = y;
        }
      }
    }
  }
  if (fg == 0) throw EmptySilhouetteError("crop contains no foreground");

  const double s = std::min(static_cast<double>(out_h) / ch,
                            static_cast<double>(out_w) / cw);
  const int sh = std::clamp(static_cast<int>(std::lround(ch * s)), 1, out_h);
  const int sw = std::clamp(static_cast<int>(std::lround(cw * s)), 1, out_w);
  const int oy = (out_h - sh) / 2;
  const int ox = (out_w - sw) / 2;

  BinaryMask out(out_w, out_h);
  for (int i = 0; i < sh; ++i) {
    const int sy = std::min(ch - 1, static_cast<int>((i + 0.5) * ch / sh));
    for (int j = 0; j < sw; ++j) {
      const int sx = std::min(cw - 1, static_cast<int>((j + 0.5) * cw / sw));
      if (mask.at(box.x0 + sx, box.y0 + sy)) out.set(ox + j, oy + i, true);
    }
  }
  // Sparse crops can fall between sample points; keep the first pixel.
  if (out.empty_foreground()) {
    const int i = std::min(sh - 1, first_y * sh / ch);
    const int j = std::min(sw - 1, first_x * sw / cw);
    out.set(ox + j, oy + i, true);
  }
  return Silhouette(std::move(out));
}

}  // namespace gait3d::seg

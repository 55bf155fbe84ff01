#include "gait3d/skeleton.hpp"

#include "gait3d/segmentation.hpp"

#include <algorithm>
#include <array>
#include <string>

namespace gait3d::skel {

namespace {

// Clockwise ring starting north: N, NE, E, SE, S, SW, W, NW.
constexpr std::array<int, 8> kDx = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr std::array<int, 8> kDy = {-1, -1, 0, 1, 1, 1, 0, -1};
enum Ring { kN = 0, kNE, kE, kSE, kS, kSW, kW, kNW };

std::array<bool, 8> ring(const BinaryMask& m, int x, int y) {
  std::array<bool, 8> r{};
  for (int i = 0; i < 8; ++i) r[i] = m.get(x + kDx[i], y + kDy[i]);
  return r;
}

NeighborStats stats_of(const std::array<bool, 8>& r) {
  NeighborStats s;
  for (int i = 0; i < 8; ++i) {
    s.foreground += r[i] ? 1 : 0;
    s.transitions += (!r[i] && r[(i + 1) % 8]) ? 1 : 0;
  }
  return s;
}

bool zs_removable(const std::array<bool, 8>& r) {
  const NeighborStats s = stats_of(r);
  return s.foreground >= 2 && s.foreground <= 6 && s.transitions == 1;
}

bool zs_direction_ok(const std::array<bool, 8>& r, int sub) {
  if (sub == 0) {
    return !(r[kN] && r[kE] && r[kS]) && !(r[kE] && r[kS] && r[kW]);
  }
  return !(r[kN] && r[kE] && r[kW]) && !(r[kN] && r[kS] && r[kW]);
}

// Counts connected groups among ring cells whose value equals `value`.
// Cells are adjacent when they are 8-neighbours (eight) or 4-neighbours.
int ring_groups(const std::array<bool, 8>& r, bool value, bool eight,
                bool only_touching_center) {
  std::array<int, 8> group{};
  group.fill(-1);
  int groups = 0;
  for (int s = 0; s < 8; ++s) {
    if (r[s] != value || group[s] >= 0) continue;
    group[s] = groups;
    std::array<int, 8> stack{};
    int top = 0;
    stack[top++] = s;
    while (top > 0) {
      const int c = stack[--top];
      for (int n = 0; n < 8; ++n) {
        if (r[n] != value || group[n] >= 0) continue;
        const int dx = std::abs(kDx[c] - kDx[n]);
        const int dy = std::abs(kDy[c] - kDy[n]);
        const bool adj = eight ? (dx <= 1 && dy <= 1) : (dx + dy == 1);
        if (adj) {
          group[n] = groups;
          stack[top++] = n;
        }
      }
    }
    ++groups;
  }
  if (!only_touching_center) return groups;
  // Keep groups containing a 4-neighbour of the centre.
  std::array<bool, 8> touching{};
  for (int i = 0; i < 8; i += 2) {
    if (r[i] == value) touching[group[i]] = true;
  }
  return static_cast<int>(std::count(touching.begin(), touching.begin() + groups, true));
}

// (8, 4) simple point that is not an end point.
bool simple_non_end(const std::array<bool, 8>& r) {
  int fg = 0;
  for (bool v : r) fg += v ? 1 : 0;
  if (fg < 2) return false;
  return ring_groups(r, true, true, false) == 1 &&
         ring_groups(r, false, false, true) == 1;
}

// Foreground neighbours stay 8-connected without the centre; it may still
// enclose a background hole.
bool joins_neighbours(const std::array<bool, 8>& r) {
  int fg = 0;
  for (bool v : r) fg += v ? 1 : 0;
  return fg >= 2 && ring_groups(r, true, true, false) == 1;
}

bool in_full_block(const BinaryMask& m, int x, int y) {
  for (int oy = -1; oy <= 0; ++oy) {
    for (int ox = -1; ox <= 0; ++ox) {
      if (m.get(x + ox, y + oy) && m.get(x + ox + 1, y + oy) &&
          m.get(x + ox, y + oy + 1) && m.get(x + ox + 1, y + oy + 1)) {
        return true;
      }
    }
  }
  return false;
}

}  // namespace

NeighborStats neighbor_stats(const BinaryMask& mask, int x, int y) {
  if (!mask.contains(x, y)) {
    throw BoundsError("neighbor_stats: (" + std::to_string(x) + ", " +
                      std::to_string(y) + ") outside the mask");
  }
  return stats_of(ring(mask, x, y));
}

SkeletonMask thin(const BinaryMask& mask) {
  SkeletonMask out = mask;
  const int w = out.width();
  const int h = out.height();
  std::vector<std::pair<int, int>> flagged;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int sub = 0; sub < 2; ++sub) {
      flagged.clear();
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (!out.at(x, y)) continue;
          const auto r = ring(out, x, y);
          if (zs_removable(r) && zs_direction_ok(r, sub)) flagged.emplace_back(x, y);
        }
      }
      for (const auto& [x, y] : flagged) {
        if (zs_removable(ring(out, x, y))) {
          out.set(x, y, false);
          changed = true;
        }
      }
    }
    // Blocks ZS leaves behind: first remove simple points, then accept
    // opening a background hole where that is the only way to break the
    // block without splitting the foreground.
    for (const auto removable : {simple_non_end, joins_neighbours}) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (out.at(x, y) && in_full_block(out, x, y) && removable(ring(out, x, y))) {
            out.set(x, y, false);
            changed = true;
          }
        }
      }
    }
    if (changed) continue;
    // Last resort: the ring test is local, so a pixel can look like the only
    // link to an arm that is joined to the rest by a longer path. Ask the
    // whole mask instead.
    std::size_t parts = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!out.at(x, y) || !in_full_block(out, x, y)) continue;
        const auto r = ring(out, x, y);
        if (std::count(r.begin(), r.end(), true) < 2) continue;
        if (parts == 0) parts = seg::label_components(out).components.size();
        out.set(x, y, false);
        if (seg::label_components(out).components.size() == parts) {
          changed = true;
        } else {
          out.set(x, y, true);
        }
      }
    }
  }
  return out;
}

std::vector<int> chessboard_distance(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<int> d(mask.size(), 0);
  auto at = [&](int x, int y) -> int {
    return (x < 0 || y < 0 || x >= w || y >= h) ? 0 : d[static_cast<std::size_t>(y) * w + x];
  };
  const int big = w + h;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      int m = big;
      m = std::min({m, at(x - 1, y - 1), at(x, y - 1), at(x + 1, y - 1), at(x - 1, y)});
      d[static_cast<std::size_t>(y) * w + x] = m + 1;
    }
  }
  for (int y = h - 1; y >= 0; --y) {
    for (int x = w - 1; x >= 0; --x) {
      if (!mask.at(x, y)) continue;
      auto& cur = d[static_cast<std::size_t>(y) * w + x];
      const int m = std::min({at(x + 1, y + 1), at(x, y + 1), at(x - 1, y + 1), at(x + 1, y)});
      cur = std::min(cur, m + 1);
    }
  }
  return d;
}

SkeletonMask medial_axis(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  const auto d = chessboard_distance(mask);
  auto at = [&](int x, int y) -> int {
    return (x < 0 || y < 0 || x >= w || y >= h) ? 0 : d[static_cast<std::size_t>(y) * w + x];
  };
  BinaryMask ridge(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int v = at(x, y);
      if (v == 0) continue;
      bool peak = true;
      for (int i = 0; i < 8 && peak; ++i) peak = v >= at(x + kDx[i], y + kDy[i]);
      ridge.set(x, y, peak);
    }
  }
  return thin(ridge);
}

}  // namespace gait3d::skel

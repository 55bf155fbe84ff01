#include <gtest/gtest.h>

#include <cmath>

#include "gait3d/segmentation.hpp"
#include "support/oracles.hpp"

using namespace gait3d;
using namespace gait3d::seg;

namespace {

BinaryMask block(int w, int h, int x0, int y0, int bw, int bh) {
  BinaryMask m(w, h);
  for (int y = y0; y < y0 + bh; ++y)
    for (int x = x0; x < x0 + bw; ++x) m.set(x, y, true);
  return m;
}

// Pads with a one-pixel background frame.
BinaryMask pad(const BinaryMask& m) {
  BinaryMask out(m.width() + 2, m.height() + 2);
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) out.set(x + 1, y + 1, m.at(x, y));
  return out;
}

BinaryMask crop_inner(const BinaryMask& m) {
  BinaryMask out(m.width() - 2, m.height() - 2);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out.set(x, y, m.at(x + 1, y + 1));
  return out;
}

}  // namespace

TEST(Grayscale, Extremes) {
  const GrayFrame zero(1, 1, 0), full(1, 1, 255);
  EXPECT_EQ(to_grayscale(zero, zero, zero).at(0, 0), 0);
  EXPECT_EQ(to_grayscale(full, full, full).at(0, 0), 255);
}

TEST(Grayscale, PureRed) {
  const GrayFrame r(1, 1, 255), z(1, 1, 0);
  EXPECT_EQ(to_grayscale(r, z, z).at(0, 0), std::lround(0.299 * 255));
  EXPECT_EQ(to_grayscale(r, z, z).at(0, 0), 76);
}

TEST(Grayscale, MatchesWeightedSum) {
  Rng rng(5);
  GrayFrame r(7, 5), g(7, 5), b(7, 5);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r.data()[i] = static_cast<std::uint8_t>(rng.below(256));
    g.data()[i] = static_cast<std::uint8_t>(rng.below(256));
    b.data()[i] = static_cast<std::uint8_t>(rng.below(256));
  }
  const GrayFrame out = to_grayscale(r, g, b);
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double v = 0.299 * r.data()[i] + 0.587 * g.data()[i] + 0.114 * b.data()[i];
    EXPECT_LE(std::abs(out.data()[i] - v), 0.5 + 1e-9);
  }
}

TEST(Grayscale, DimensionMismatchThrows) {
  EXPECT_THROW(to_grayscale(GrayFrame(2, 2), GrayFrame(2, 2), GrayFrame(3, 2)), DimensionError);
}

TEST(BackgroundSubtract, IdenticalFramesAreEmpty) {
  Rng rng(1);
  GrayFrame f(9, 6);
  for (auto& v : f.data()) v = static_cast<std::uint8_t>(rng.below(256));
  for (int tau : {0, 1, 30, 255}) EXPECT_TRUE(background_subtract(f, f, tau).empty_foreground());
}

TEST(BackgroundSubtract, StrictThreshold) {
  GrayFrame bg(4, 4, 100), f = bg;
  f.at(1, 2) = 130;
  EXPECT_TRUE(background_subtract(f, bg, 30).empty_foreground());
  f.at(1, 2) = 131;
  const BinaryMask m = background_subtract(f, bg, 30);
  EXPECT_EQ(m.count(), 1u);
  EXPECT_TRUE(m.at(1, 2));
  f.at(1, 2) = 69;  // darker by 31
  EXPECT_EQ(background_subtract(f, bg, 30).count(), 1u);
}

TEST(BackgroundSubtract, DimensionMismatchThrows) {
  EXPECT_THROW(background_subtract(GrayFrame(2, 2), GrayFrame(2, 3), 10), DimensionError);
}

TEST(Morphology, DilateSinglePixel) {
  EXPECT_EQ(dilate(block(5, 5, 2, 2, 1, 1)), block(5, 5, 1, 1, 3, 3));
}

TEST(Morphology, ErodeBlock) {
  EXPECT_EQ(erode(block(5, 5, 1, 1, 3, 3)), block(5, 5, 2, 2, 1, 1));
}

TEST(Morphology, ErodeTreatsOutsideAsBackground) {
  EXPECT_TRUE(erode(BinaryMask(3, 3, true)) == block(3, 3, 1, 1, 1, 1));
}

TEST(Morphology, ClosingFillsHole) {
  BinaryMask holed = block(5, 5, 1, 1, 3, 3);
  holed.set(2, 2, false);
  const BinaryMask expected = oracle::erode_ref(oracle::dilate_ref(holed));
  EXPECT_EQ(expected, block(5, 5, 1, 1, 3, 3));
  EXPECT_EQ(close(holed), expected);
}

TEST(Morphology, MatchesDefinitionOnRandomMasks) {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const BinaryMask m = oracle::random_mask(rng, 24);
    ASSERT_EQ(erode(m), oracle::erode_ref(m)) << "mask " << i;
    ASSERT_EQ(dilate(m), oracle::dilate_ref(m)) << "mask " << i;
  }
}

TEST(Morphology, DualityAndMonotonicity) {
  Rng rng(12);
  for (int i = 0; i < 300; ++i) {
    const BinaryMask m = oracle::random_mask(rng, 32);
    // Padding makes the complement's border foreground, matching dilate's
    // background-outside convention.
    EXPECT_EQ(crop_inner(erode(complement(pad(m)))), complement(dilate(m)));
    BinaryMask bigger = m;
    for (auto& v : bigger.data())
      if (rng.bernoulli(0.2)) v = 1;
    ASSERT_TRUE(is_subset(m, bigger));
    EXPECT_TRUE(is_subset(dilate(m), dilate(bigger)));
    EXPECT_TRUE(is_subset(erode(m), erode(bigger)));
  }
}

TEST(Denoise, Examples) {
  EXPECT_TRUE(denoise(BinaryMask(12, 12)).empty_foreground());
  const BinaryMask square = block(20, 20, 5, 5, 10, 10);
  EXPECT_EQ(oracle::dilate_ref(oracle::erode_ref(oracle::erode_ref(oracle::dilate_ref(square)))), square);
  EXPECT_EQ(denoise(square), square);
  EXPECT_TRUE(denoise(block(9, 9, 4, 4, 1, 1)).empty_foreground());
}

TEST(Denoise, IsOpeningOfClosing) {
  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    const BinaryMask m = oracle::random_mask(rng, 20);
    const BinaryMask closed = oracle::erode_ref(oracle::dilate_ref(m));
    EXPECT_EQ(denoise(m), oracle::dilate_ref(oracle::erode_ref(closed)));
  }
}

TEST(Detect, Examples) {
  EXPECT_FALSE(detect_object(BinaryMask(10, 10), 1).has_value());

  const BinaryMask fifty = block(20, 20, 3, 4, 10, 5);
  const auto box = detect_object(fifty, 20);
  ASSERT_TRUE(box.has_value());
  EXPECT_EQ(*box, (BoundingBox{3, 4, 10, 5}));

  BinaryMask two = block(30, 30, 2, 2, 10, 6);
  for (int y = 20; y < 22; ++y)
    for (int x = 20; x < 25; ++x) two.set(x, y, true);
  const auto big = detect_object(two, 20);
  ASSERT_TRUE(big.has_value());
  EXPECT_EQ(*big, (BoundingBox{2, 2, 10, 6}));
  EXPECT_EQ(detect_objects(two, 20).size(), 1u);
  EXPECT_FALSE(detect_object(two, 61).has_value());
}

TEST(Detect, DiagonalPixelsAreOneComponent) {
  BinaryMask m(4, 4);
  m.set(0, 0, true);
  m.set(1, 1, true);
  m.set(2, 2, true);
  EXPECT_EQ(label_components(m).components.size(), 1u);
}

TEST(Detect, AgreesWithFloodFillOracle) {
  Rng rng(21);
  for (int i = 0; i < 500; ++i) {
    const BinaryMask m = oracle::random_mask(rng, 32);
    const auto ref = oracle::flood_components(m);
    const auto lab = label_components(m);
    ASSERT_EQ(lab.components.size(), ref.size()) << "mask " << i;
    for (std::size_t k = 0; k < ref.size(); ++k) {
      EXPECT_EQ(lab.components[k].box, ref[k].box);
      EXPECT_EQ(lab.components[k].area, ref[k].area);
    }
    const long min_area = rng.uniform_int(1, 40);
    std::optional<BoundingBox> expect;
    long best = 0;
    for (const auto& c : ref) {
      if (c.area >= min_area && c.area > best) {
        best = c.area;
        expect = c.box;
      }
    }
    EXPECT_EQ(detect_object(m, min_area), expect) << "mask " << i;
  }
}

TEST(Track, Examples) {
  EXPECT_FALSE(select_tracked({}, std::nullopt).has_value());
  EXPECT_FALSE(select_tracked({}, BoundingBox{0, 0, 3, 3}).has_value());

  const std::vector<BoundingBox> areas = {{0, 0, 5, 6}, {10, 10, 5, 8}};
  EXPECT_EQ(*select_tracked(areas, std::nullopt), areas[1]);

  // Centres (11,10) and (50,50); previous centre (10,10).
  const std::vector<BoundingBox> near_far = {{49, 49, 3, 3}, {10, 9, 3, 3}};
  EXPECT_EQ(*select_tracked(near_far, BoundingBox{9, 9, 3, 3}), near_far[1]);
}

TEST(Track, TieBreaks) {
  const BoundingBox prev{10, 10, 1, 1};
  // Equal distances: larger area wins.
  const std::vector<BoundingBox> by_area = {{4, 9, 3, 3}, {14, 8, 3, 5}};
  EXPECT_EQ(*select_tracked(by_area, prev), by_area[1]);
  // Equal distance and area: row-major first corner.
  const std::vector<BoundingBox> by_corner = {{14, 9, 3, 3}, {4, 9, 3, 3}};
  EXPECT_EQ(*select_tracked(by_corner, prev), by_corner[1]);
}

TEST(Silhouette, IdentityScale) {
  Rng rng(3);
  const BinaryMask m = oracle::random_mask(rng, 16, 12, oracle::MaskKind::kBlobs);
  BinaryMask seeded = m;
  seeded.set(0, 0, true);
  EXPECT_EQ(extract_silhouette(seeded, {0, 0, 16, 12}, 12, 16).mask(), seeded);
}

TEST(Silhouette, TwoByTwoToOnePixel) {
  const Silhouette s = extract_silhouette(block(4, 4, 1, 1, 2, 2), {1, 1, 2, 2}, 1, 1);
  EXPECT_EQ(s.mask(), BinaryMask(1, 1, true));
}

TEST(Silhouette, TallCropIsCentred) {
  const Silhouette s = extract_silhouette(BinaryMask(32, 64, true), {0, 0, 32, 64}, 64, 64);
  EXPECT_EQ(s.mask(), block(64, 64, 16, 0, 32, 64));
}

TEST(Silhouette, Errors) {
  EXPECT_THROW(extract_silhouette(BinaryMask(8, 8), {0, 0, 4, 4}, 8, 8), EmptySilhouetteError);
  EXPECT_THROW(extract_silhouette(BinaryMask(8, 8, true), {6, 6, 4, 4}, 8, 8), BoundsError);
  EXPECT_THROW(Silhouette(BinaryMask(4, 4)), EmptySilhouetteError);
}

TEST(Silhouette, AlwaysNonEmptyWithConfiguredSize) {
  Rng rng(31);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    const BinaryMask m = oracle::random_mask(rng, 40);
    const auto box = detect_object(m, 1);
    if (!box) continue;
    const int oh = rng.uniform_int(1, 48), ow = rng.uniform_int(1, 48);
    const Silhouette s = extract_silhouette(m, *box, oh, ow);
    EXPECT_EQ(s.height(), oh);
    EXPECT_EQ(s.width(), ow);
    EXPECT_FALSE(s.mask().empty_foreground());
    ++checked;
  }
  EXPECT_GT(checked, 200);
}

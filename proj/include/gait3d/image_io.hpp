#pragma once

#include <filesystem>

#include "gait3d/image.hpp"

namespace gait3d {

/// Three equally sized channel planes.
struct RgbImage {
  GrayFrame r;
  GrayFrame g;
  GrayFrame b;
};

// Binary PGM (P5, maxval 255).
void write_pgm(const std::filesystem::path& path, const GrayFrame& frame);
GrayFrame read_pgm(const std::filesystem::path& path);

// Foreground written as 255.
void write_mask_pgm(const std::filesystem::path& path, const BinaryMask& mask);
// Any non-zero pixel is foreground.
BinaryMask read_mask_pgm(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const GrayFrame& frame);

// Reads PGM (P5), PPM (P6) or PNG; colour inputs are returned per channel.
RgbImage read_rgb(const std::filesystem::path& path);

// Reads any supported format and converts colour to luminance.
GrayFrame read_gray(const std::filesystem::path& path);

}  // namespace gait3d

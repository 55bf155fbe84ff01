#include "gait3d/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "gait3d/segmentation.hpp"

namespace gait3d {

namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::string& header,
                 const std::vector<std::uint8_t>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(body.data()),
            static_cast<std::streamsize>(body.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

// Netpbm header token reader; skips whitespace and '#' comments.
class PnmHeader {
 public:
  PnmHeader(const std::vector<std::uint8_t>& bytes, const fs::path& path)
      : bytes_(bytes), path_(path) {}

  long number() {
    skip_space();
    long v = 0;
    bool any = false;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000) fail("header value too large");
      any = true;
      ++pos_;
    }
    if (!any) fail("expected a number");
    return v;
  }

  std::size_t data_start() {
    // Exactly one whitespace byte separates maxval from the raster.
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      fail("missing separator before raster");
    }
    return pos_ + 1;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(path_.string() + ": " + what + " at offset " +
                      std::to_string(pos_));
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  const fs::path& path_;
  std::size_t pos_ = 2;
};

RgbImage read_pnm(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
  const bool color = bytes[1] == '6';
  PnmHeader header(bytes, path);
  const long w = header.number();
  const long h = header.number();
  const long maxval = header.number();
  if (w < 1 || h < 1) header.fail("non-positive dimensions");
  if (maxval != 255) header.fail("only 8-bit (maxval 255) rasters are supported");
  const std::size_t start = header.data_start();
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const std::size_t need = n * (color ? 3 : 1);
  if (bytes.size() < start + need) {
    throw FormatError(path.string() + ": raster truncated at offset " +
                      std::to_string(bytes.size()));
  }
  const int iw = static_cast<int>(w);
  const int ih = static_cast<int>(h);
  if (!color) {
    GrayFrame g(iw, ih, std::vector<std::uint8_t>(bytes.begin() + static_cast<long>(start),
                                                  bytes.begin() + static_cast<long>(start + n)));
    return {g, g, g};
  }
  RgbImage out{GrayFrame(iw, ih), GrayFrame(iw, ih), GrayFrame(iw, ih)};
  for (std::size_t i = 0; i < n; ++i) {
    out.r.data()[i] = bytes[start + 3 * i];
    out.g.data()[i] = bytes[start + 3 * i + 1];
    out.b.data()[i] = bytes[start + 3 * i + 2];
  }
  return out;
}

RgbImage read_png_file(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw FormatError(path.string() + ": " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw FormatError(path.string() + ": " + msg);
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  if (!color) {
    GrayFrame g(w, h, std::move(buffer));
    return {g, g, g};
  }
  RgbImage out{GrayFrame(w, h), GrayFrame(w, h), GrayFrame(w, h)};
  for (std::size_t i = 0; i < out.r.size(); ++i) {
    out.r.data()[i] = buffer[3 * i];
    out.g.data()[i] = buffer[3 * i + 1];
    out.b.data()[i] = buffer[3 * i + 2];
  }
  return out;
}

}  // namespace

void write_pgm(const fs::path& path, const GrayFrame& frame) {
  const std::string header = "P5\n" + std::to_string(frame.width()) + " " +
                             std::to_string(frame.height()) + "\n255\n";
  write_bytes(path, header, frame.data());
}

GrayFrame read_pgm(const fs::path& path) {
  const auto bytes = read_bytes(path);
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw FormatError(path.string() + ": not a binary PGM (P5) at offset 0");
  }
  return read_pnm(bytes, path).r;
}

void write_mask_pgm(const fs::path& path, const BinaryMask& mask) {
  write_pgm(path, to_frame(mask));
}

BinaryMask read_mask_pgm(const fs::path& path) {
  const GrayFrame f = read_pgm(path);
  BinaryMask m(f.width(), f.height());
  for (std::size_t i = 0; i < f.size(); ++i) m.data()[i] = f.data()[i] ? 1 : 0;
  return m;
}

void write_png(const fs::path& path, const GrayFrame& frame) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.width());
  image.height = static_cast<png_uint_32>(frame.height());
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, frame.data().data(), 0,
                               nullptr)) {
    throw IoError(path.string() + ": " + image.message);
  }
}

RgbImage read_rgb(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".png") return read_png_file(path);
  const auto bytes = read_bytes(path);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw FormatError(path.string() + ": unsupported image format at offset 0");
  }
  return read_pnm(bytes, path);
}

GrayFrame read_gray(const fs::path& path) {
  const RgbImage rgb = read_rgb(path);
  if (rgb.r == rgb.g && rgb.g == rgb.b) return rgb.r;
  return seg::to_grayscale(rgb.r, rgb.g, rgb.b);
}

}  // namespace gait3d

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gait3d/model.hpp"

namespace gait3d::nn {

inline constexpr char kModelMagic[4] = {'G', '3', 'D', 'C'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Model file layout, all integers little-endian:
///   "G3DC", u32 version,
///   u32 input c, t, h, w, u32 layer count, then per layer a u8 kind tag
///   followed by its fields (conv3d: u32 filters kt kh kw; maxpool3d:
///   u32 wt wh ww st sh sw; dropout: f64 rate; dense: u32 units,
///   u8 activation; flatten/softmax: nothing),
///   u64 FNV-1a checksum of the per-layer (weights, bias) sizes,
///   u64 parameter count, f64 parameters in declaration order,
///   u64 FNV-1a checksum of every preceding byte.
std::vector<std::uint8_t> serialize_model(const ModelSpec& spec,
                                          const ModelParams& params);

struct LoadedModel {
  ModelSpec spec;
  ModelParams params;
};

// Throws FormatError naming the byte offset of the first problem.
LoadedModel deserialize_model(const std::vector<std::uint8_t>& bytes);

void save_model(const std::filesystem::path& path, const ModelSpec& spec,
                const ModelParams& params);
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace gait3d::nn

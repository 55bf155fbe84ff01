#include "gait3d/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace gait3d::nn {

namespace {

enum class Tag : std::uint8_t {
  kConv3d = 1,
  kMaxPool3d = 2,
  kFlatten = 3,
  kDropout = 4,
  kDense = 5,
  kSoftmax = 6,
};

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n,
                    std::uint64_t h = kFnvOffset) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= kFnvPrime;
  }
  return h;
}

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void size32(std::size_t v) {
    if (v > 0xffffffffULL) throw FormatError("value does not fit the model format");
    u32(static_cast<std::uint32_t>(v));
  }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  std::size_t offset() const { return pos_; }

  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw FormatError("model file: " + what + " at offset " + std::to_string(at));
  }
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) fail("truncated (need " + std::to_string(n) + " bytes)", pos_);
  }
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{in_[pos_++]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{in_[pos_++]} << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

std::uint64_t shape_checksum(const ModelSpec& spec) {
  Writer w;
  for (const auto& [weights, bias] : spec.param_sizes()) {
    w.u64(weights);
    w.u64(bias);
  }
  return fnv1a(w.data().data(), w.data().size());
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const ModelSpec& spec, const ModelParams& params) {
  const auto sizes = spec.param_sizes();
  if (sizes.size() != params.blocks.size()) {
    throw ShapeError("parameters do not match the model spec");
  }
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (params.blocks[i].weights.size() != sizes[i].first ||
        params.blocks[i].bias.size() != sizes[i].second) {
      throw ShapeError("parameter block " + std::to_string(i) + " has the wrong size");
    }
  }
  Writer w;
  w.bytes(kModelMagic, 4);
  w.u32(kModelFormatVersion);
  w.size32(spec.input.c);
  w.size32(spec.input.t);
  w.size32(spec.input.h);
  w.size32(spec.input.w);
  w.size32(spec.layers.size());
  for (const auto& layer : spec.layers) {
    if (const auto* c = std::get_if<Conv3dSpec>(&layer)) {
      w.u8(static_cast<std::uint8_t>(Tag::kConv3d));
      w.size32(c->filters);
      w.size32(c->kt);
      w.size32(c->kh);
      w.size32(c->kw);
    } else if (const auto* p = std::get_if<MaxPool3dSpec>(&layer)) {
      w.u8(static_cast<std::uint8_t>(Tag::kMaxPool3d));
      for (std::size_t v : {p->pool.wt, p->pool.wh, p->pool.ww, p->pool.st, p->pool.sh, p->pool.sw}) {
        w.size32(v);
      }
    } else if (std::holds_alternative<FlattenSpec>(layer)) {
      w.u8(static_cast<std::uint8_t>(Tag::kFlatten));
    } else if (const auto* d = std::get_if<DropoutSpec>(&layer)) {
      w.u8(static_cast<std::uint8_t>(Tag::kDropout));
      w.f64(d->rate);
    } else if (const auto* d = std::get_if<DenseSpec>(&layer)) {
      w.u8(static_cast<std::uint8_t>(Tag::kDense));
      w.size32(d->units);
      w.u8(static_cast<std::uint8_t>(d->activation));
    } else {
      w.u8(static_cast<std::uint8_t>(Tag::kSoftmax));
    }
  }
  w.u64(shape_checksum(spec));
  w.u64(spec.param_count());
  for (const auto& block : params.blocks) {
    for (double v : block.weights) w.f64(v);
    for (double v : block.bias) w.f64(v);
  }
  w.u64(fnv1a(w.data().data(), w.data().size()));
  return std::move(w.data());
}

LoadedModel deserialize_model(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  r.need(4);
  if (std::memcmp(bytes.data(), kModelMagic, 4) != 0) r.fail("bad magic (expected G3DC)", 0);
  for (int i = 0; i < 4; ++i) r.u8();
  const std::size_t version_at = r.offset();
  if (const auto version = r.u32(); version != kModelFormatVersion) {
    r.fail("unsupported format version " + std::to_string(version), version_at);
  }
  LoadedModel m;
  m.spec.input.c = r.u32();
  m.spec.input.t = r.u32();
  m.spec.input.h = r.u32();
  m.spec.input.w = r.u32();
  const std::size_t count_at = r.offset();
  const std::uint32_t layer_count = r.u32();
  if (layer_count == 0 || layer_count > 4096) r.fail("implausible layer count", count_at);
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    const std::size_t tag_at = r.offset();
    switch (static_cast<Tag>(r.u8())) {
      case Tag::kConv3d: {
        Conv3dSpec c;
        c.filters = r.u32();
        c.kt = r.u32();
        c.kh = r.u32();
        c.kw = r.u32();
        m.spec.layers.emplace_back(c);
        break;
      }
      case Tag::kMaxPool3d: {
        MaxPool3dSpec p;
        p.pool.wt = r.u32();
        p.pool.wh = r.u32();
        p.pool.ww = r.u32();
        p.pool.st = r.u32();
        p.pool.sh = r.u32();
        p.pool.sw = r.u32();
        m.spec.layers.emplace_back(p);
        break;
      }
      case Tag::kFlatten:
        m.spec.layers.emplace_back(FlattenSpec{});
        break;
      case Tag::kDropout:
        m.spec.layers.emplace_back(DropoutSpec{r.f64()});
        break;
      case Tag::kDense: {
        DenseSpec d;
        d.units = r.u32();
        const std::size_t act_at = r.offset();
        const auto act = r.u8();
        if (act > 1) r.fail("unknown activation " + std::to_string(act), act_at);
        d.activation = static_cast<Activation>(act);
        m.spec.layers.emplace_back(d);
        break;
      }
      case Tag::kSoftmax:
        m.spec.layers.emplace_back(SoftmaxSpec{});
        break;
      default:
        r.fail("unknown layer tag", tag_at);
    }
  }
  const std::size_t checksum_at = r.offset();
  const std::uint64_t stored_shape_sum = r.u64();
  try {
    if (shape_checksum(m.spec) != stored_shape_sum) {
      r.fail("layer shape checksum mismatch", checksum_at);
    }
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    r.fail(std::string("invalid model spec (") + e.what() + ")", checksum_at);
  }
  const std::size_t count2_at = r.offset();
  const std::uint64_t n = r.u64();
  if (n != m.spec.param_count()) r.fail("parameter count mismatch", count2_at);
  r.need(n * 8 + 8);
  for (const auto& [wn, bn] : m.spec.param_sizes()) {
    ParamBlock b;
    b.weights.resize(wn);
    b.bias.resize(bn);
    for (auto& v : b.weights) v = r.f64();
    for (auto& v : b.bias) v = r.f64();
    m.params.blocks.push_back(std::move(b));
  }
  const std::size_t sum_at = r.offset();
  const std::uint64_t expected = fnv1a(bytes.data(), sum_at);
  if (r.u64() != expected) r.fail("payload checksum mismatch", sum_at);
  if (r.offset() != bytes.size()) r.fail("trailing bytes", r.offset());
  return m;
}

void save_model(const std::filesystem::path& path, const ModelSpec& spec,
                const ModelParams& params) {
  const auto bytes = serialize_model(spec, params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                  std::istreambuf_iterator<char>()};
  return deserialize_model(bytes);
}

}  // namespace gait3d::nn

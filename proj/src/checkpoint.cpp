// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pnp/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>

#include "pnp/error.hpp"

namespace pnp {

namespace {

constexpr char kMagic[4] = {'P', 'N', 'P', 'D'};
constexpr std::uint32_t kMaxCount = 1u << 20;

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  Bytes& bytes() { return bytes_; }

 private:
  Bytes bytes_;
};

class Reader {
 public:
  Reader(const Bytes& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_++]} << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t{bytes_[pos_++]} << (8 * i);
    return std::bit_cast<double>(bits);
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (end_ - pos_ < n) throw IoError("checkpoint corrupt: truncated");
  }
  const Bytes& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t checked_count(Reader& r, const char* what) {
  const std::uint32_t n = r.u32();
  if (n > kMaxCount) throw IoError(std::string("checkpoint corrupt: implausible ") + what);
  return n;
}

}  // namespace

std::uint32_t crc32_of(const Bytes& bytes, std::size_t length) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; checkpoints are far below 4 GiB.
  crc = ::crc32(crc, bytes.data(), static_cast<uInt>(length));
  return static_cast<std::uint32_t>(crc);
}

Bytes serialize_model(const Model& model) {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(model.arch()));
  w.u32(static_cast<std::uint32_t>(model.input_mode()));
  w.u32(static_cast<std::uint32_t>(model.layers().size()));
  for (const Layer& layer : model.layers()) {
    w.u32(static_cast<std::uint32_t>(layer.kind));
    w.u32(static_cast<std::uint32_t>(layer.in_channels));
    w.u32(static_cast<std::uint32_t>(layer.out_channels));
    w.u32(static_cast<std::uint32_t>(layer.kernel));
    w.u32(static_cast<std::uint32_t>(layer.stride));
    w.u32(static_cast<std::uint32_t>(layer.padding));
    w.u32(layer.relu ? 1u : 0u);
    w.u32(static_cast<std::uint32_t>(layer.name.size()));
    w.raw(layer.name.data(), layer.name.size());
  }
  w.u32(static_cast<std::uint32_t>(model.params().size()));
  for (const Tensor& p : model.params()) {
    w.u32(static_cast<std::uint32_t>(p.rank()));
    for (std::size_t d : p.shape()) w.u32(static_cast<std::uint32_t>(d));
  }
  for (const Tensor& p : model.params())
    for (double v : p.data()) w.f64(v);
  w.u32(crc32_of(w.bytes(), w.bytes().size()));
  return std::move(w.bytes());
}

Model deserialize_model(const Bytes& bytes) {
  if (bytes.size() < 4 + 4 + 4) throw IoError("checkpoint corrupt: too short");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw IoError("checkpoint corrupt: bad magic");
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= std::uint32_t{bytes[body + i]} << (8 * i);
  if (stored != crc32_of(bytes, body)) throw IoError("checkpoint corrupt: CRC mismatch");

  Reader r(bytes, body);
  r.str(4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw IoError("checkpoint corrupt: unsupported version " + std::to_string(version));
  }
  const std::uint32_t arch = r.u32();
  const std::uint32_t mode = r.u32();
  if (arch > static_cast<std::uint32_t>(Arch::kCustom) ||
      mode > static_cast<std::uint32_t>(InputMode::kRgbSd)) {
    throw IoError("checkpoint corrupt: bad architecture or input mode");
  }
  std::vector<Layer> layers(checked_count(r, "layer count"));
  for (Layer& layer : layers) {
    const std::uint32_t kind = r.u32();
    if (kind > static_cast<std::uint32_t>(LayerKind::kConcatInput)) {
      throw IoError("checkpoint corrupt: bad layer kind");
    }
    layer.kind = static_cast<LayerKind>(kind);
    layer.in_channels = r.u32();
    layer.out_channels = r.u32();
    layer.kernel = r.u32();
    layer.stride = r.u32();
    layer.padding = r.u32();
    layer.relu = r.u32() != 0;
    layer.name = r.str(checked_count(r, "name length"));
  }
  std::vector<Shape> shapes(checked_count(r, "parameter count"));
  std::size_t total = 0;
  for (Shape& s : shapes) {
    s.resize(checked_count(r, "rank"));
    if (s.size() > 8) throw IoError("checkpoint corrupt: implausible rank");
    std::size_t numel = 1;
    for (std::size_t& d : s) {
      d = checked_count(r, "extent");
      numel *= d;
      if (numel > body) throw IoError("checkpoint corrupt: implausible shape");
    }
    total += numel;
  }
  if (total * 8 != body - r.pos()) throw IoError("checkpoint corrupt: payload size mismatch");
  std::vector<Tensor> params;
  for (const Shape& s : shapes) {
    Tensor t(s);
    for (double& v : t.data()) v = r.f64();
    params.push_back(std::move(t));
  }
  if (r.pos() != body) throw IoError("checkpoint corrupt: trailing bytes");
  try {
    return Model(static_cast<Arch>(arch), static_cast<InputMode>(mode), std::move(layers),
                 std::move(params));
  } catch (const ConfigError& e) {
    throw IoError(std::string("checkpoint corrupt: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  write_file(path, serialize_model(model));
}

Model load_checkpoint(const std::filesystem::path& path) {
  try {
    return deserialize_model(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace pnp

// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pnp/tensor.hpp"

namespace pnp {

using Bytes = std::vector<std::uint8_t>;

/// Binary 16-bit graymap (P5, maxval 65535, big-endian samples). Each value of
/// the 1 x 1 x H x W tensor is multiplied by `scale`, rounded and clamped.
Bytes encode_pgm16(const Tensor& image, double scale);
/// Inverse of encode_pgm16: samples divided by `scale`.
Tensor decode_pgm16(const Bytes& bytes, double scale, const std::string& origin = "<memory>");

/// Binary 8-bit pixmap (P6, maxval 255) from a 1 x 3 x H x W tensor in [0, 1].
Bytes encode_ppm(const Tensor& rgb);
Tensor decode_ppm(const Bytes& bytes, const std::string& origin = "<memory>");

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Bytes& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

// Depth images are stored in millimetres.
inline constexpr double kMillimetresPerMetre = 1000.0;

inline void write_depth_pgm(const std::filesystem::path& path, const Tensor& depth) {
  write_file(path, encode_pgm16(depth, kMillimetresPerMetre));
}
inline Tensor read_depth_pgm(const std::filesystem::path& path) {
  return decode_pgm16(read_file(path), kMillimetresPerMetre, path.string());
}
inline void write_rgb_ppm(const std::filesystem::path& path, const Tensor& rgb) {
  write_file(path, encode_ppm(rgb));
}
inline Tensor read_rgb_ppm(const std::filesystem::path& path) {
  return decode_ppm(read_file(path), path.string());
}

}  // namespace pnp

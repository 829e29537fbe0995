// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

#include "pnp/image_io.hpp"
#include "pnp/model.hpp"

namespace pnp {

// Layout, all integers little-endian:
//   "PNPD" | u32 version | u32 arch | u32 input_mode
//   u32 n_layers, per layer: u32 kind, in, out, kernel, stride, padding, relu,
//                            name_len, name bytes
//   u32 n_params, per param: u32 rank, u32 dims[rank]
//   f64 payload (params in order, row-major)
//   u32 CRC-32 (zlib polynomial) of every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

Bytes serialize_model(const Model& model);
/// Throws IoError("checkpoint corrupt: ...") on bad magic, CRC or layout.
Model deserialize_model(const Bytes& bytes);

void save_checkpoint(const std::filesystem::path& path, const Model& model);
Model load_checkpoint(const std::filesystem::path& path);

std::uint32_t crc32_of(const Bytes& bytes, std::size_t length);

}  // namespace pnp

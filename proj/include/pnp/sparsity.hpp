// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pnp/sparse_depth.hpp"
#include "pnp/tensor.hpp"

namespace pnp {

/// Exactly `n` distinct pixels chosen uniformly without replacement.
SparseDepth sample_uniform(const Tensor& depth, std::size_t n, std::uint64_t seed);

struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;

  /// fx = fy = 4H (about 14 degrees vertical field of view), principal point
  /// at the image centre.
  static Intrinsics defaults(std::size_t height, std::size_t width);
};

struct LidarSpec {
  std::string name = "custom";
  double fov_deg = 30.0;         // total vertical field of view
  double vres_deg = 2.0;         // vertical angular resolution
  double rot_noise_deg = 0.05;   // per-scanline elevation jitter (std dev)
  double mount_height_m = 0.0;   // sensor offset above the camera
  double pitch_center_deg = 0.0; // elevation of the middle scanline

  /// floor(fov / vres) + 1
  std::size_t channels() const;
  void validate() const;
};

/// VLP-16, VLP-32C, HDL-32E, HDL-64E.
std::vector<LidarSpec> lidar_presets();
LidarSpec lidar_preset(std::string_view name);

struct LidarSample {
  SparseDepth sparse;
  std::size_t scanlines = 0;  // channels attempted
};

/// Projects each jittered scanline into the image column by column:
/// v = cy - fy * (tan(theta) + mount_height / depth). The nearest in-bounds
/// pixel is marked; repeated hits collapse.
LidarSample sample_lidar(const Tensor& depth, const LidarSpec& spec, const Intrinsics& camera,
                         std::uint64_t seed);

}  // namespace pnp

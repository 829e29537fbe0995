// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pnp/sparsity.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "pnp/error.hpp"
#include "pnp/rng.hpp"

namespace pnp {

namespace {

constexpr double kLidarFocalPerRow = 4.0;

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

void require_depth_image(const Tensor& depth) {
  if (depth.rank() != 4 || depth.batch() != 1 || depth.channels() != 1) {
    throw ConfigError("sparse sampling expects a 1x1xHxW depth map, got " +
                      shape_to_string(depth.shape()));
  }
}

}  // namespace

SparseDepth sample_uniform(const Tensor& depth, std::size_t n, std::uint64_t seed) {
  require_depth_image(depth);
  const std::size_t total = depth.numel();
  if (n > total) {
    throw ConfigError("requested " + std::to_string(n) + " samples from " +
                      std::to_string(total) + " pixels");
  }
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  Tensor mask(depth.shape(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.below(total - i);
    std::swap(order[i], order[j]);
    mask[order[i]] = 1.0;
  }
  return SparseDepth::from_mask(depth, std::move(mask));
}

Intrinsics Intrinsics::defaults(std::size_t height, std::size_t width) {
  const double f = kLidarFocalPerRow * static_cast<double>(height);
  return {f, f, static_cast<double>(width) / 2.0, static_cast<double>(height) / 2.0};
}

std::size_t LidarSpec::channels() const {
  validate();
  // Small epsilon so that e.g. 30 / 2.0 is not floored below 15 by rounding.
  return static_cast<std::size_t>(std::floor(fov_deg / vres_deg + 1e-9)) + 1;
}

void LidarSpec::validate() const {
  if (!(fov_deg > 0.0) || !(vres_deg > 0.0) || !(rot_noise_deg >= 0.0) ||
      !std::isfinite(mount_height_m) || !std::isfinite(pitch_center_deg)) {
    throw ConfigError("lidar spec '" + name + "' requires fov > 0, vres > 0, rot_noise >= 0");
  }
}

std::vector<LidarSpec> lidar_presets() {
  return {
      {"VLP-16", 30.0, 2.0},
      {"VLP-32C", 40.0, 0.3},
      {"HDL-32E", 41.0, 1.3},
      {"HDL-64E", 27.0, 0.4},
  };
}

LidarSpec lidar_preset(std::string_view name) {
  std::string valid;
  for (const LidarSpec& spec : lidar_presets()) {
    if (spec.name == name) return spec;
    valid += (valid.empty() ? "" : ", ") + spec.name;
  }
  throw ConfigError("unknown lidar preset '" + std::string(name) + "' (valid: " + valid + ")");
}

LidarSample sample_lidar(const Tensor& depth, const LidarSpec& spec, const Intrinsics& camera,
                         std::uint64_t seed) {
  require_depth_image(depth);
  spec.validate();
  if (camera.fy == 0.0 || camera.fx == 0.0 || !std::isfinite(camera.fy) ||
      !std::isfinite(camera.cy)) {
    throw ConfigError("degenerate camera intrinsics (fx and fy must be non-zero)");
  }
  const std::size_t height = depth.height();
  const std::size_t width = depth.width();
  const std::size_t channels = spec.channels();

  Rng rng(seed);
  Tensor mask(depth.shape(), 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    const double elevation = spec.pitch_center_deg - spec.fov_deg / 2.0 +
                             static_cast<double>(c) * spec.vres_deg +
                             rng.normal(0.0, spec.rot_noise_deg);
    const double slope = std::tan(radians(elevation));
    for (std::size_t u = 0; u < width; ++u) {
      long long row = -1;
      if (spec.mount_height_m == 0.0) {
        const double v = camera.cy - camera.fy * slope;
        if (std::isfinite(v)) row = std::llround(v);
      } else {
        // Parallax depends on the depth seen at the hit; take the row whose
        // predicted projection is closest to itself.
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t v = 0; v < height; ++v) {
          const double d = depth.at(0, 0, v, u);
          if (!(d > 0.0)) continue;
          const double predicted = camera.cy - camera.fy * (slope + spec.mount_height_m / d);
          const double miss = std::abs(predicted - static_cast<double>(v));
          if (miss < best) {
            best = miss;
            row = static_cast<long long>(v);
          }
        }
        if (best > 0.5) row = -1;
      }
      if (row >= 0 && row < static_cast<long long>(height)) {
        mask.at(0, 0, static_cast<std::size_t>(row), u) = 1.0;
      }
    }
  }
  return {SparseDepth::from_mask(depth, std::move(mask)), channels};
}

}  // namespace pnp

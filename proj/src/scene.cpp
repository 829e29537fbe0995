// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pnp/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pnp/error.hpp"
#include "pnp/rng.hpp"

namespace pnp {

namespace {

constexpr std::array<double, 3> kGroundAlbedo{0.55, 0.5, 0.45};
constexpr double kShadingNoise = 0.01;

}  // namespace

void SceneParams::validate() const {
  if (height < 16 || width < 16) {
    throw ConfigError("scene size must be at least 16x16, got " + std::to_string(height) + "x" +
                      std::to_string(width));
  }
  if (!(d_min > 0.0) || !(d_min < d_max) || !std::isfinite(d_max)) {
    throw ConfigError("scene depth bounds require 0 < d_min < d_max");
  }
}

double ground_depth(const SceneParams& params, std::size_t row) {
  const double t = static_cast<double>(row) / static_cast<double>(params.height - 1);
  return params.d_max - (params.d_max - params.d_min) * t;
}

double object_depth(const SceneObject& obj, std::size_t row, std::size_t col) {
  constexpr double kMiss = std::numeric_limits<double>::infinity();
  if (obj.kind == SceneObject::Kind::kBox) {
    if (row < obj.top || row >= obj.bottom || col < obj.left || col >= obj.right) return kMiss;
    return obj.depth;
  }
  const double dr = static_cast<double>(row) - obj.center_row;
  const double dc = static_cast<double>(col) - obj.center_col;
  const double rho2 = (dr * dr + dc * dc) / (obj.radius * obj.radius);
  if (rho2 > 1.0) return kMiss;
  return obj.depth - obj.bulge * std::sqrt(1.0 - rho2);
}

Scene generate_scene(std::uint64_t seed, const SceneParams& params) {
  params.validate();
  Rng rng(seed);
  const double range = params.d_max - params.d_min;
  const auto h = static_cast<double>(params.height);
  const auto w = static_cast<double>(params.width);

  Scene scene;
  scene.seed = seed;
  for (std::size_t k = 0; k < params.n_objects; ++k) {
    SceneObject obj;
    for (auto& a : obj.albedo) a = rng.uniform(0.3, 1.0);
    if (rng.uniform() < 0.5) {
      obj.kind = SceneObject::Kind::kBox;
      const auto bh = static_cast<std::size_t>(rng.uniform(h / 8.0, h / 3.0));
      const auto bw = static_cast<std::size_t>(rng.uniform(w / 8.0, w / 3.0));
      // Top edge in the upper half, below row 0, so an occlusion edge is visible.
      obj.top = 1 + rng.below(params.height / 2 - 1);
      obj.left = rng.below(params.width - bw + 1);
      obj.bottom = std::min(params.height, obj.top + std::max<std::size_t>(bh, 2));
      obj.right = std::min(params.width, obj.left + std::max<std::size_t>(bw, 2));
      obj.depth = params.d_min + rng.uniform(0.05, 0.35) * range;
    } else {
      obj.kind = SceneObject::Kind::kSphere;
      obj.radius = rng.uniform(h / 10.0, h / 4.0);
      obj.center_row = rng.uniform(h / 4.0, 3.0 * h / 4.0);
      obj.center_col = rng.uniform(0.0, w);
      obj.bulge = 0.05 * range;
      obj.depth = params.d_min + rng.uniform(0.1, 0.35) * range;
    }
    scene.objects.push_back(obj);
  }

  scene.depth = Tensor::image(1, params.height, params.width);
  scene.rgb = Tensor::image(3, params.height, params.width);
  for (std::size_t i = 0; i < params.height; ++i) {
    for (std::size_t j = 0; j < params.width; ++j) {
      double d = ground_depth(params, i);
      std::array<double, 3> albedo = kGroundAlbedo;
      for (const SceneObject& obj : scene.objects) {
        const double od = object_depth(obj, i, j);
        if (od < d) {
          d = od;
          albedo = obj.albedo;
        }
      }
      d = std::clamp(d, params.d_min, params.d_max);
      scene.depth.at(0, 0, i, j) = d;
      const double shade = 1.0 - (d - params.d_min) / range;
      for (std::size_t c = 0; c < 3; ++c) {
        scene.rgb.at(0, c, i, j) =
            std::clamp(albedo[c] * shade + rng.normal(0.0, kShadingNoise), 0.0, 1.0);
      }
    }
  }
  return scene;
}

std::vector<Scene> generate_scenes(std::uint64_t seed, std::size_t count,
                                   const SceneParams& params) {
  std::vector<Scene> scenes;
  scenes.reserve(count);
  for (std::size_t i = 0; i < count; ++i) scenes.push_back(generate_scene(mix_seed(seed, i), params));
  return scenes;
}

}  // namespace pnp

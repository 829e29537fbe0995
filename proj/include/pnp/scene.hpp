// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "pnp/tensor.hpp"

namespace pnp {

struct SceneParams {
  std::size_t height = 48;
  std::size_t width = 64;
  double d_min = 0.5;
  double d_max = 10.0;
  std::size_t n_objects = 4;

  void validate() const;
};

/// Image-space primitive rendered into the z-buffer. Boxes are fronto-parallel
/// rectangles at constant depth; spheres are discs whose depth bulges towards
/// the camera by `bulge` metres at the centre.
struct SceneObject {
  enum class Kind { kBox, kSphere };
  Kind kind = Kind::kBox;
  // Box: rows [top, bottom), cols [left, right).
  std::size_t top = 0, bottom = 0, left = 0, right = 0;
  // Sphere: centre and radius in pixels.
  double center_row = 0.0, center_col = 0.0, radius = 0.0, bulge = 0.0;
  double depth = 0.0;  // box depth, or sphere rim depth
  std::array<double, 3> albedo{};
};

struct Scene {
  Tensor rgb;    // 1 x 3 x H x W in [0, 1]
  Tensor depth;  // 1 x 1 x H x W in [d_min, d_max]
  std::uint64_t seed = 0;
  std::vector<SceneObject> objects;
};

/// Ground-plane depth ramp: d_max at the top row, d_min at the bottom row.
double ground_depth(const SceneParams& params, std::size_t row);

/// Depth of `obj` at pixel (row, col), or +inf when the object does not cover it.
double object_depth(const SceneObject& obj, std::size_t row, std::size_t col);

Scene generate_scene(std::uint64_t seed, const SceneParams& params = {});

/// `count` scenes with seeds derived from `seed`.
std::vector<Scene> generate_scenes(std::uint64_t seed, std::size_t count,
                                   const SceneParams& params = {});

}  // namespace pnp

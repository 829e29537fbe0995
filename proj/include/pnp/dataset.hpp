// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pnp/scene.hpp"

namespace pnp {

inline constexpr const char* kManifestName = "manifest.txt";

/// Writes scene_NNNN.ppm (rgb) and scene_NNNN_depth.pgm (millimetres) per
/// scene plus manifest.txt; returns the manifest text.
std::string save_scene_set(const std::filesystem::path& dir, const std::vector<Scene>& scenes);

/// Reads a directory written by save_scene_set. Depth and colour come back
/// quantised (1 mm, 1/255). IoError names the offending file.
std::vector<Scene> load_scene_set(const std::filesystem::path& dir);

}  // namespace pnp

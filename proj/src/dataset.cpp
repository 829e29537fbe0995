// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pnp/dataset.hpp"

#include <cstdio>
#include <sstream>

#include "pnp/error.hpp"
#include "pnp/image_io.hpp"

namespace pnp {

namespace {
constexpr const char* kManifestHeader = "# pnpdepth scenes v1: index seed rgb depth";
}

std::string save_scene_set(const std::filesystem::path& dir, const std::vector<Scene>& scenes) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir.string() + ": cannot create directory: " + ec.message());
  std::string manifest = std::string(kManifestHeader) + "\n";
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    char rgb_name[32], depth_name[32];
    std::snprintf(rgb_name, sizeof rgb_name, "scene_%04zu.ppm", i);
    std::snprintf(depth_name, sizeof depth_name, "scene_%04zu_depth.pgm", i);
    write_rgb_ppm(dir / rgb_name, scenes[i].rgb);
    write_depth_pgm(dir / depth_name, scenes[i].depth);
    manifest += std::to_string(i) + " " + std::to_string(scenes[i].seed) + " " + rgb_name + " " +
                depth_name + "\n";
  }
  write_text(dir / kManifestName, manifest);
  return manifest;
}

std::vector<Scene> load_scene_set(const std::filesystem::path& dir) {
  const std::filesystem::path manifest_path = dir / kManifestName;
  const Bytes bytes = read_file(manifest_path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::vector<Scene> scenes;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::string rgb_name, depth_name;
    if (!(fields >> index >> seed >> rgb_name >> depth_name)) {
      throw IoError(manifest_path.string() + ": malformed line '" + line + "'");
    }
    Scene scene;
    scene.seed = seed;
    scene.rgb = read_rgb_ppm(dir / rgb_name);
    scene.depth = read_depth_pgm(dir / depth_name);
    if (scene.rgb.height() != scene.depth.height() || scene.rgb.width() != scene.depth.width()) {
      throw IoError((dir / depth_name).string() + ": size differs from " + rgb_name);
    }
    for (double d : scene.depth.data()) {
      if (!(d > 0.0)) throw IoError((dir / depth_name).string() + ": non-positive depth");
    }
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

}  // namespace pnp

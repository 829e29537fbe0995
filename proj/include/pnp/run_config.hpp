// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pnp/model.hpp"
#include "pnp/refine.hpp"
#include "pnp/scene.hpp"

namespace pnp {

/// Settings shared by the command-line tools, read from `key = value` files.
/// Unknown keys are rejected. Defaults are listed in `describe_keys()`.
struct RunConfig {
  Arch arch = Arch::kPlainCnn;
  InputMode input_mode = InputMode::kSd;
  std::string tap;  // empty: shallowest tap
  double alpha = 0.01;
  std::size_t iterations = 5;
  LossKind loss = LossKind::kL1;
  UpdateRule update_rule = UpdateRule::kSign;
  std::size_t n_samples = 0;  // 0: 1% of the pixels
  std::string lidar_preset;   // non-empty: LiDAR masks instead of uniform samples
  std::uint64_t seed = 1;
  SceneParams scene;
  std::filesystem::path output_dir = "out";
  std::filesystem::path scene_dir = "scenes";
  // training
  std::size_t epochs = 30;
  std::size_t batch_size = 4;
  double learning_rate = 1e-2;
  std::size_t train_min_samples = 10;
  std::size_t train_max_samples = 500;

  PnPConfig pnp() const;
  TrainConfig training() const;
};

/// Parses `key = value` lines; '#' starts a comment. `origin` names the source
/// in error messages.
RunConfig parse_run_config(std::string_view text, const std::string& origin = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

/// Applies PNP_SEED from the environment when set.
void apply_environment(RunConfig& cfg);

/// Canonical `key = value` rendering; parse_run_config(to_text(c)) == c.
std::string to_text(const RunConfig& cfg);

/// (key, default, description) for every accepted key.
struct ConfigKey {
  std::string key;
  std::string default_value;
  std::string description;
};
std::vector<ConfigKey> describe_keys();

}  // namespace pnp

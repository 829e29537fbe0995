// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pnp/run_config.hpp"

#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>

#include "pnp/error.hpp"
#include "pnp/image_io.hpp"
#include "pnp/sparsity.hpp"

namespace pnp {

PnPConfig RunConfig::pnp() const {
  PnPConfig c;
  c.tap = tap;
  c.alpha = alpha;
  c.iterations = iterations;
  c.loss = loss;
  c.rule = update_rule;
  return c;
}

TrainConfig RunConfig::training() const {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = batch_size;
  c.learning_rate = learning_rate;
  c.loss = loss;
  c.seed = seed;
  c.min_samples = train_min_samples;
  c.max_samples = train_max_samples;
  return c;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0') throw ConfigError("key '" + key + "': not a number: '" + v + "'");
  return d;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  char* end = nullptr;
  if (v.empty() || v[0] == '-') {
    throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
  const unsigned long long u = std::strtoull(v.c_str(), &end, 10);
  if (*end != '\0') {
    throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
  return u;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct KeyDef {
  const char* description;
  Setter set;
  Getter get;
};

const std::map<std::string, KeyDef>& key_table() {
  static const std::map<std::string, KeyDef> table = {
      {"arch",
       {"network architecture: plain_cnn | encdec | coarse_fine",
        [](RunConfig& c, const auto&, const auto& v) { c.arch = parse_arch(v); },
        [](const RunConfig& c) { return std::string(arch_name(c.arch)); }}},
      {"input_mode",
       {"network input: rgb | sd | rgb+sd",
        [](RunConfig& c, const auto&, const auto& v) { c.input_mode = parse_input_mode(v); },
        [](const RunConfig& c) { return std::string(input_mode_name(c.input_mode)); }}},
      {"tap",
       {"feature map optimised at inference (empty: shallowest tap)",
        [](RunConfig& c, const auto&, const auto& v) { c.tap = v; },
        [](const RunConfig& c) { return c.tap; }}},
      {"alpha",
       {"refinement step size",
        [](RunConfig& c, const auto& k, const auto& v) { c.alpha = to_double(k, v); },
        [](const RunConfig& c) { return fmt_double(c.alpha); }}},
      {"iterations",
       {"refinement iterations",
        [](RunConfig& c, const auto& k, const auto& v) { c.iterations = to_uint(k, v); },
        [](const RunConfig& c) { return std::to_string(c.iterations); }}},
      {"loss",
       {"loss: l1 | l2 | berhu (training and refinement)",
        [](RunConfig& c, const auto&, const auto& v) { c.loss = parse_loss(v); },
        [](const RunConfig& c) { return std::string(loss_name(c.loss)); }}},
      {"update_rule",
       {"refinement update: sign | raw_gradient | adam",
        [](RunConfig& c, const auto&, const auto& v) { c.update_rule = parse_update_rule(v); },
        [](const RunConfig& c) { return std::string(update_rule_name(c.update_rule)); }}},
      {"n_samples",
       {"uniform sparse samples per scene (0: 1% of pixels)",
        [](RunConfig& c, const auto& k, const auto& v) { c.n_samples = to_uint(k, v); },
        [](const RunConfig& c) { return std::to_string(c.n_samples); }}},
      {"lidar_preset",
       {"VLP-16 | VLP-32C | HDL-32E | HDL-64E (empty: uniform sampling)",
        [](RunConfig& c, const auto&, const auto& v) {
          if (!v.empty()) lidar_preset(v);
          c.lidar_preset = v;
        },
        [](const RunConfig& c) { return c.lidar_preset; }}},
      {"seed",
       {"master seed (PNP_SEED overrides)",
        [](RunConfig& c, const auto& k, const auto& v) { c.seed = to_uint(k, v); },
        [](const RunConfig& c) { return std::to_string(c.seed); }}},
      {"height",
       {"scene height in pixels",
        [](RunConfig& c, const auto& k, const auto& v) { c.scene.height = to_uint(k, v); },
        [](const RunConfig& c) { return std::to_string(c.scene.height); }}},
      {"width",
       {"scene width in pixels",
        [](RunConfig& c, const auto& k, const auto& v) { c.scene.width = to_uint(k, v); },
        [](const RunConfig& c) { return std::to_string(c.scene.width); }}},
      {"d_min",
       {"minimum scene depth (m)",
        [](RunConfig& c, const auto& k, const auto& v) { c.scene.d_min = to_double(k, v); },
        [](const RunConfig& c) { return fmt_double(c.scene.d_min); }}},
      {"d_max",
       {"maximum scene depth (m)",
        [](RunConfig& c, const auto& k, const auto& v) { c.scene.d_max = to_double(k, v); },
        [](const RunConfig& c) { return fmt_double(c.scene.d_max); }}},
      {"n_objects",
       {"objects per scene",
        [](RunConfig& c, const auto& k, const auto& v) { c.scene.n_objects = to_uint(k, v); },
        [](const RunConfig& c) { return std::to_string(c.scene.n_objects); }}},
      {"output_dir",
       {"directory for reports, images and checkpoints",
        [](RunConfig& c, const auto&, const auto& v) { c.output_dir = v; },
        [](const RunConfig& c) { return c.output_dir.string(); }}},
      {"scene_dir",
       {"directory written by `gen` and read by train/refine/sweep/time",
        [](RunConfig& c, const auto&, const auto& v) { c.scene_dir = v; },
        [](const RunConfig& c) { return c.scene_dir.string(); }}},
      {"epochs",
       {"training epochs",
        [](RunConfig& c, const auto& k, const auto& v) { c.epochs = to_uint(k, v); },
        [](const RunConfig& c) { return std::to_string(c.epochs); }}},
      {"batch_size",
       {"training minibatch size",
        [](RunConfig& c, const auto& k, const auto& v) { c.batch_size = to_uint(k, v); },
        [](const RunConfig& c) { return std::to_string(c.batch_size); }}},
      {"learning_rate",
       {"training SGD learning rate",
        [](RunConfig& c, const auto& k, const auto& v) { c.learning_rate = to_double(k, v); },
        [](const RunConfig& c) { return fmt_double(c.learning_rate); }}},
      {"train_min_samples",
       {"fewest sparse samples per training scene",
        [](RunConfig& c, const auto& k, const auto& v) { c.train_min_samples = to_uint(k, v); },
        [](const RunConfig& c) { return std::to_string(c.train_min_samples); }}},
      {"train_max_samples",
       {"most sparse samples per training scene",
        [](RunConfig& c, const auto& k, const auto& v) { c.train_max_samples = to_uint(k, v); },
        [](const RunConfig& c) { return std::to_string(c.train_max_samples); }}},
  };
  return table;
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const std::string& origin) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    const std::string where = origin + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    const auto it = key_table().find(key);
    if (it == key_table().end()) throw ConfigError(where + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + ": duplicate key '" + key + "'");
    try {
      it->second.set(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  if (!cfg.lidar_preset.empty() && cfg.n_samples > 0) {
    throw ConfigError(origin + ": set either n_samples or lidar_preset, not both");
  }
  cfg.scene.validate();
  cfg.pnp().validate();
  cfg.training().validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  return parse_run_config(std::string(bytes.begin(), bytes.end()), path.string());
}

void apply_environment(RunConfig& cfg) {
  if (const char* env = std::getenv("PNP_SEED"); env && *env) {
    cfg.seed = to_uint("PNP_SEED", env);
  }
}

std::string to_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& [key, def] : key_table()) out += key + " = " + def.get(cfg) + "\n";
  return out;
}

std::vector<ConfigKey> describe_keys() {
  const RunConfig defaults;
  std::vector<ConfigKey> keys;
  for (const auto& [key, def] : key_table()) keys.push_back({key, def.get(defaults), def.description});
  return keys;
}

}  // namespace pnp

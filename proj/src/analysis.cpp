// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pnp/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "pnp/error.hpp"
#include "pnp/rng.hpp"

namespace pnp {

// ---------------------------------------------------------------------------
// Influential field

std::size_t InfluentialField::count() const {
  std::size_t n = 0;
  for (double v : affected.data()) n += v != 0.0;
  return n;
}

bool InfluentialField::contains(const InfluentialField& other) const {
  if (affected.shape() != other.affected.shape()) return false;
  for (std::size_t i = 0; i < affected.numel(); ++i) {
    if (other.affected[i] != 0.0 && affected[i] == 0.0) return false;
  }
  return true;
}

Shape tap_shape(const Model& model, std::string_view tap, std::size_t input_height,
                std::size_t input_width) {
  const Cascade cascade = split(model, tap);
  return cascade.front(Tensor::image(model.input_channels(), input_height, input_width)).shape();
}

namespace {

Model geometric_probe_model(const Model& model) {
  std::vector<Tensor> params = model.params();
  for (Tensor& p : params) {
    if (p.rank() == 1) {
      p.fill(0.0);
    } else {
      for (double& v : p.data()) v = std::abs(v);
    }
  }
  return Model(model.arch(), model.input_mode(), model.layers(), std::move(params));
}

}  // namespace

InfluentialField influential_field(const Model& model, std::string_view tap, std::size_t row,
                                   std::size_t col, std::size_t channel, std::size_t input_height,
                                   std::size_t input_width, ProbeMode mode, const Tensor* x) {
  const bool geometric = mode == ProbeMode::kGeometric;
  const Model probe = geometric ? geometric_probe_model(model) : model;
  const Cascade cascade = split(probe, tap);
  const Tensor input = (x && !geometric)
                           ? *x
                           : Tensor::image(model.input_channels(), input_height, input_width);
  Tensor z = cascade.front(input);
  if (geometric) z.fill(0.0);
  if (channel >= z.channels() || row >= z.height() || col >= z.width()) {
    throw ConfigError("probe location (c=" + std::to_string(channel) + ", " + std::to_string(row) +
                      ", " + std::to_string(col) + ") outside feature map " +
                      shape_to_string(z.shape()) + " at tap '" + std::string(tap) + "'");
  }
  const ApplyOptions options{geometric};
  auto rear = [&](const Tensor& zz) {
    Graph graph;
    const NodeId zn = graph.leaf(zz);
    const NodeId xn = graph.leaf(input);
    return graph.value(cascade.rear_graph(graph, zn, xn, options));
  };
  const Tensor base = rear(z);
  z.at(0, channel, row, col) += 1.0;
  const Tensor perturbed = rear(z);

  InfluentialField field;
  field.tap = std::string(tap);
  field.row = row;
  field.col = col;
  field.channel = channel;
  field.affected = Tensor::image(1, base.height(), base.width());
  std::size_t r0 = base.height(), r1 = 0, c0 = base.width(), c1 = 0;
  bool any = false;
  for (std::size_t c = 0; c < base.channels(); ++c)
    for (std::size_t i = 0; i < base.height(); ++i)
      for (std::size_t j = 0; j < base.width(); ++j) {
        if (std::abs(perturbed.at(0, c, i, j) - base.at(0, c, i, j)) > 0.0) {
          field.affected.at(0, 0, i, j) = 1.0;
          r0 = std::min(r0, i);
          r1 = std::max(r1, i);
          c0 = std::min(c0, j);
          c1 = std::max(c1, j);
          any = true;
        }
      }
  if (any) {
    field.top = r0;
    field.left = c0;
    field.height = r1 - r0 + 1;
    field.width = c1 - c0 + 1;
  }
  return field;
}

// ---------------------------------------------------------------------------
// Masked-gradient decomposition

ResidualDecomposition residual_decomposition(const Model& model, const Tensor& x,
                                             const SparseDepth& sparse, std::string_view tap,
                                             LossKind loss) {
  const Cascade cascade = split(model, tap);
  const Tensor z = cascade.front(x);

  Graph graph;
  const NodeId zn = graph.leaf(z);
  const NodeId xn = graph.leaf(x);
  const NodeId pred = cascade.rear_graph(graph, zn, xn);
  const LossNode total = graph.masked_loss(pred, sparse, loss, Reduction::kSum);
  if (total.no_observation) throw ConfigError("residual decomposition needs a non-empty mask");

  ResidualDecomposition out;
  out.g_hat = graph.backward_to(total.node, zn);
  out.g_masked_sum = Tensor(z.shape(), 0.0);
  for (std::size_t i = 0; i < sparse.mask.numel(); ++i) {
    if (sparse.mask[i] == 0.0) continue;
    Tensor single(sparse.mask.shape(), 0.0);
    single[i] = 1.0;
    const SparseDepth one{sparse.values, std::move(single)};
    const LossNode pixel = graph.masked_loss(pred, one, loss, Reduction::kSum);
    const Tensor g = graph.backward_to(pixel.node, zn);
    for (std::size_t k = 0; k < g.numel(); ++k) out.g_masked_sum[k] += g[k];
  }
  for (std::size_t k = 0; k < z.numel(); ++k) {
    out.residual_norm =
        std::max(out.residual_norm, std::abs(out.g_hat[k] - out.g_masked_sum[k]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

std::string_view sweep_kind_name(SweepKind kind) {
  switch (kind) {
    case SweepKind::kIterations: return "iters";
    case SweepKind::kTap: return "tap";
    case SweepKind::kSamples: return "samples";
    case SweepKind::kLidar: return "lidar";
  }
  return "unknown";
}

SweepKind parse_sweep_kind(std::string_view name) {
  if (name == "iters" || name == "iterations") return SweepKind::kIterations;
  if (name == "tap") return SweepKind::kTap;
  if (name == "samples") return SweepKind::kSamples;
  if (name == "lidar") return SweepKind::kLidar;
  throw ConfigError("unknown sweep kind '" + std::string(name) +
                    "' (expected iters, tap, samples, lidar)");
}

std::vector<std::string> default_settings(SweepKind kind, const Model& model) {
  switch (kind) {
    case SweepKind::kIterations: return {"0", "1", "2", "5", "10", "20"};
    case SweepKind::kSamples: return {"10", "50", "100", "500"};
    case SweepKind::kTap: return model.taps();
    case SweepKind::kLidar: {
      std::vector<std::string> names;
      for (const LidarSpec& s : lidar_presets()) names.push_back(s.name);
      return names;
    }
  }
  return {};
}

namespace {

std::size_t parse_count(const std::string& text) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty() || text[0] == '-') {
    throw ConfigError("expected a non-negative integer setting, got '" + text + "'");
  }
  return static_cast<std::size_t>(v);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

SweepResult sweep(const Model& model, std::span<const Scene> scenes, const PnPConfig& base,
                  const SweepSpec& spec) {
  if (scenes.empty()) throw ConfigError("sweep requires at least one scene");
  const std::vector<std::string> settings =
      spec.settings.empty() ? default_settings(spec.kind, model) : spec.settings;
  const std::vector<std::string> taps = model.taps();

  SweepResult result;
  result.kind = spec.kind;
  for (std::size_t s = 0; s < settings.size(); ++s) {
    const std::string& setting = settings[s];
    SweepRow row;
    row.label = setting;
    try {
      PnPConfig cfg = base;
      std::size_t n_samples = spec.n_samples;
      std::optional<LidarSpec> lidar;
      switch (spec.kind) {
        case SweepKind::kIterations:
          cfg.iterations = parse_count(setting);
          row.setting = static_cast<double>(cfg.iterations);
          break;
        case SweepKind::kSamples:
          n_samples = parse_count(setting);
          row.setting = static_cast<double>(n_samples);
          break;
        case SweepKind::kTap: {
          cfg.tap = setting;
          const std::size_t idx = model.tap_index(setting);
          row.setting = taps.size() > 1 ? static_cast<double>(idx) / (taps.size() - 1) : 0.0;
          break;
        }
        case SweepKind::kLidar:
          lidar = lidar_preset(setting);
          row.setting = static_cast<double>(s);
          break;
      }

      std::vector<BenchmarkCase> cases;
      double coverage = 0.0;
      for (std::size_t i = 0; i < scenes.size(); ++i) {
        const Scene& scene = scenes[i];
        const std::uint64_t mask_seed = mix_seed(spec.seed, i);
        SparseDepth sparse;
        if (lidar) {
          const Intrinsics cam = spec.camera.value_or(
              Intrinsics::defaults(scene.depth.height(), scene.depth.width()));
          sparse = sample_lidar(scene.depth, *lidar, cam, mask_seed).sparse;
        } else {
          const std::size_t n =
              n_samples > 0 ? n_samples
                            : std::max<std::size_t>(
                                  1, static_cast<std::size_t>(
                                         std::llround(0.01 * scene.depth.numel())));
          sparse = sample_uniform(scene.depth, n, mask_seed);
        }
        coverage += static_cast<double>(sparse.count()) / scene.depth.numel();
        cases.push_back({make_input(model.input_mode(), scene.rgb, sparse), scene.depth, sparse});
      }
      row.coverage = coverage / static_cast<double>(scenes.size());

      if (spec.kind == SweepKind::kTap) {
        const Shape zs = tap_shape(model, setting, scenes[0].depth.height(), scenes[0].depth.width());
        row.field_area = influential_field(model, setting, zs[2] / 2, zs[3] / 2, 0,
                                           scenes[0].depth.height(), scenes[0].depth.width())
                             .area();
      }

      const auto t0 = std::chrono::steady_clock::now();
      const BatchResult batch = refine_batch(model, cases, cfg);
      const auto t1 = std::chrono::steady_clock::now();
      row.runtime_s = std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-9);
      row.failures = batch.failures + (cases.size() - batch.records.size());
      if (!batch.records.empty()) {
        row.before = batch.mean_before();
        row.after = batch.mean_after();
        std::vector<double> rb, ra;
        for (const BatchRecord& r : batch.records) {
          rb.push_back(r.before.rmse);
          ra.push_back(r.after.rmse);
        }
        row.median_rmse_before = median(rb);
        row.median_rmse_after = median(ra);
      }
    } catch (const NumericError&) {
      row.failures = scenes.size();
    }
    result.rows.push_back(row);
  }
  return result;
}

std::string SweepResult::to_csv(bool include_runtime) const {
  // Coverage rank: 1 = densest observations.
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rows[a].coverage > rows[b].coverage; });
  std::vector<std::size_t> rank(rows.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r + 1;

  std::string out =
      "kind,label,setting,coverage,coverage_rank,rmse_before,rmse_after,rmse_improvement,"
      "mae_before,mae_after,median_rmse_before,median_rmse_after,d1_before,d1_after,field_area,"
      "failures";
  if (include_runtime) out += ",runtime_s";
  out += "\n";
  char buf[512];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& r = rows[i];
    const std::string area = r.field_area ? std::to_string(*r.field_area) : "";
    std::snprintf(buf, sizeof buf,
                  "%s,%s,%.6g,%.6f,%zu,%.6f,%.6f,%s,%.6f,%.6f,%.6f,%.6f,%.2f,%.2f,%s,%zu",
                  std::string(sweep_kind_name(kind)).c_str(), r.label.c_str(), r.setting,
                  r.coverage, rank[i], r.before.rmse, r.after.rmse,
                  format_improvement(improvement_percent(r.before.rmse, r.after.rmse)).c_str(),
                  r.before.mae, r.after.mae, r.median_rmse_before, r.median_rmse_after,
                  100.0 * r.before.delta1, 100.0 * r.after.delta1, area.c_str(), r.failures);
    out += buf;
    if (include_runtime) {
      std::snprintf(buf, sizeof buf, ",%.6f", r.runtime_s);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Timing

TimingResult time_inference(const Model& model, const Tensor& x, const SparseDepth& sparse,
                            const PnPConfig& cfg, std::size_t runs) {
  if (runs == 0) throw ConfigError("timing requires at least one run");
  using Clock = std::chrono::steady_clock;
  // Warm-up so that first-touch allocation does not land in either mean.
  model.run(x);
  refine(model, x, sparse, cfg);

  TimingResult t;
  t.runs = runs;
  double base = 0.0, pnp = 0.0;
  auto time_base = [&] {
    const auto t0 = Clock::now();
    const Tensor y = model.run(x);
    base += std::chrono::duration<double>(Clock::now() - t0).count();
  };
  auto time_pnp = [&] {
    const auto t0 = Clock::now();
    const RefineResult r = refine(model, x, sparse, cfg);
    pnp += std::chrono::duration<double>(Clock::now() - t0).count();
  };
  // Alternate the order so cache and allocator state favour neither side.
  for (std::size_t i = 0; i < runs; ++i) {
    if (i % 2 == 0) {
      time_base();
      time_pnp();
    } else {
      time_pnp();
      time_base();
    }
  }
  t.base_mean_s = base / static_cast<double>(runs);
  t.pnp_mean_s = pnp / static_cast<double>(runs);
  return t;
}

// ---------------------------------------------------------------------------
// Improvement maps

ImprovementMap improvement_map(const Tensor& before, const Tensor& after, const Tensor& gt) {
  if (before.shape() != gt.shape() || after.shape() != gt.shape() || gt.rank() != 4 ||
      gt.channels() != 1 || gt.batch() != 1) {
    throw ConfigError("improvement map expects matching 1x1xHxW tensors");
  }
  ImprovementMap map;
  map.signed_gain = Tensor(gt.shape());
  double peak = 0.0;
  for (std::size_t i = 0; i < gt.numel(); ++i) {
    map.signed_gain[i] = std::abs(before[i] - gt[i]) - std::abs(after[i] - gt[i]);
    peak = std::max(peak, std::abs(map.signed_gain[i]));
  }
  map.metres_per_count = peak > 0.0 ? peak / 32767.0 : 1e-6;
  Tensor counts(gt.shape());
  for (std::size_t i = 0; i < gt.numel(); ++i) {
    counts[i] = std::clamp(32768.0 + std::round(map.signed_gain[i] / map.metres_per_count), 0.0,
                           65535.0);
  }
  map.graymap = encode_pgm16(counts, 1.0);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "encoding: gain_m = (value - 32768) * metres_per_count\n"
                "metres_per_count: %.9g\n"
                "zero: 32768\n"
                "positive: improvement (|err_before| - |err_after| > 0)\n",
                map.metres_per_count);
  map.sidecar = buf;
  return map;
}

}  // namespace pnp

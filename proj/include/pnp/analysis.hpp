// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pnp/image_io.hpp"
#include "pnp/metrics.hpp"
#include "pnp/model.hpp"
#include "pnp/refine.hpp"
#include "pnp/scene.hpp"
#include "pnp/sparsity.hpp"

namespace pnp {

// ---------------------------------------------------------------------------
// Influential field

enum class ProbeMode {
  // relu treated as identity, |weights|, zero biases: the geometric support
  // of the rear segment, free of cancellations.
  kGeometric,
  // The actual network around z = front(x).
  kDataDependent,
};

struct InfluentialField {
  std::string tap;
  std::size_t row = 0, col = 0, channel = 0;  // source location in z
  Tensor affected;                            // 1 x 1 x H x W, 1 where the output changed
  std::size_t top = 0, left = 0, height = 0, width = 0;  // bounding box

  std::size_t area() const { return height * width; }
  std::size_t count() const;
  /// Set inclusion of the affected pixels.
  bool contains(const InfluentialField& other) const;
};

/// Output pixels that change when z at (channel, row, col) is perturbed by 1.
/// `input_height/width` fix the network input size. `x` is used by the
/// data-dependent probe (zeros when null).
InfluentialField influential_field(const Model& model, std::string_view tap, std::size_t row,
                                   std::size_t col, std::size_t channel, std::size_t input_height,
                                   std::size_t input_width,
                                   ProbeMode mode = ProbeMode::kGeometric,
                                   const Tensor* x = nullptr);

/// Shape of z at `tap` for an input of the given size.
Shape tap_shape(const Model& model, std::string_view tap, std::size_t input_height,
                std::size_t input_width);

// ---------------------------------------------------------------------------
// Masked-gradient decomposition

struct ResidualDecomposition {
  Tensor g_hat;         // d(sum_ij M_ij L_ij)/dz in one backward pass
  Tensor g_masked_sum;  // sum_ij M_ij dL_ij/dz, one backward per observed pixel
  double residual_norm = 0.0;  // ||g_hat - g_masked_sum||_inf
};

ResidualDecomposition residual_decomposition(const Model& model, const Tensor& x,
                                             const SparseDepth& sparse, std::string_view tap,
                                             LossKind loss = LossKind::kL2);

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepKind { kIterations, kTap, kSamples, kLidar };

std::string_view sweep_kind_name(SweepKind kind);
SweepKind parse_sweep_kind(std::string_view name);

struct SweepSpec {
  SweepKind kind = SweepKind::kIterations;
  std::vector<std::string> settings;  // empty: default_settings()
  std::size_t n_samples = 0;          // uniform samples for non-sample sweeps; 0 = 1% of pixels
  std::uint64_t seed = 1;             // mask seeds
  std::optional<Intrinsics> camera;   // lidar sweeps; default Intrinsics::defaults
};

/// iterations {0,1,2,5,10,20}; samples {10,50,100,500}; every tap; every preset.
std::vector<std::string> default_settings(SweepKind kind, const Model& model);

struct SweepRow {
  std::string label;
  double setting = 0.0;  // numeric value; normalised tap depth in [0, 1] for tap sweeps
  MetricRecord before;
  MetricRecord after;
  double median_rmse_before = 0.0;
  double median_rmse_after = 0.0;
  double coverage = 0.0;  // mean fraction of observed pixels
  std::optional<std::size_t> field_area;  // tap sweeps: bbox area at the tap centre
  std::size_t failures = 0;
  double runtime_s = 0.0;
};

struct SweepResult {
  SweepKind kind = SweepKind::kIterations;
  std::vector<SweepRow> rows;

  /// One row per setting; runtime only when requested (it is not reproducible).
  std::string to_csv(bool include_runtime = false) const;
};

/// Runs refine_batch per setting over the same scenes. Per-setting failures
/// are recorded, not rethrown.
SweepResult sweep(const Model& model, std::span<const Scene> scenes, const PnPConfig& base,
                  const SweepSpec& spec);

// ---------------------------------------------------------------------------
// Timing

struct TimingResult {
  std::size_t runs = 0;
  double base_mean_s = 0.0;
  double pnp_mean_s = 0.0;
  double ratio() const { return pnp_mean_s / base_mean_s; }
};

/// Mean wall time of model.run(x) and of refine(model, x, sparse, cfg).
TimingResult time_inference(const Model& model, const Tensor& x, const SparseDepth& sparse,
                            const PnPConfig& cfg, std::size_t runs);

// ---------------------------------------------------------------------------
// Improvement maps

struct ImprovementMap {
  Tensor signed_gain;        // |err_before| - |err_after| per pixel, metres
  double metres_per_count;   // graymap value v encodes (v - 32768) * metres_per_count
  Bytes graymap;             // 16-bit graymap, 32768 = no change
  std::string sidecar;       // text record of the encoding
};

ImprovementMap improvement_map(const Tensor& before, const Tensor& after, const Tensor& gt);

}  // namespace pnp

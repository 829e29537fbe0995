// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pnp/graph.hpp"
#include "pnp/metrics.hpp"
#include "pnp/model.hpp"
#include "pnp/sparse_depth.hpp"
#include "pnp/tensor.hpp"

namespace pnp {

enum class UpdateRule { kSign, kRawGradient, kAdam };

std::string_view update_rule_name(UpdateRule rule);
UpdateRule parse_update_rule(std::string_view name);

/// Inference-time refinement settings. Only the feature map at `tap` is
/// optimised; network parameters stay frozen.
struct PnPConfig {
  std::string tap;  // empty: the model's shallowest tap
  double alpha = 0.01;
  std::size_t iterations = 5;
  LossKind loss = LossKind::kL1;
  UpdateRule rule = UpdateRule::kSign;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  bool keep_snapshots = false;

  void validate() const;
};

enum class RefineStatus { kOk, kNoObservation, kNumericFailure };

std::string_view refine_status_name(RefineStatus status);

struct RefineStep {
  double sparse_loss = 0.0;      // L(f_rear(z_k), D_s)
  double update_inf_norm = 0.0;  // ||alpha * U(g)||_inf of the step into z_k, zero for k = 0
  std::optional<Tensor> prediction;
};

/// One entry per iterate z_0 .. z_K.
struct RefineTrace {
  std::vector<RefineStep> steps;
  std::string to_csv() const;  // iteration,sparse_loss,update_inf_norm
};

struct RefineResult {
  Tensor depth;
  Tensor base;  // rear(z_0), bitwise equal to model.run(x)
  RefineTrace trace;
  RefineStatus status = RefineStatus::kOk;
  std::string message;
};

/// z_0 = front(x); z_{k+1} = z_k - alpha * U(dL(rear(z_k), D_s)/dz_k);
/// returns rear(z_K).
RefineResult refine(const Model& model, const Tensor& x, const SparseDepth& sparse,
                    const PnPConfig& cfg);

/// Same, starting from an explicit z_0 at the cascade's tap.
RefineResult refine_from(const Cascade& cascade, const Tensor& z0, const Tensor& x,
                         const SparseDepth& sparse, const PnPConfig& cfg);

/// One evaluation case: network input, dense ground truth, observations.
struct BenchmarkCase {
  Tensor input;
  Tensor gt;
  SparseDepth sparse;
};

struct BatchRecord {
  MetricRecord before;
  MetricRecord after;
  Improvement delta;
  RefineStatus status = RefineStatus::kOk;
  double loss_first = 0.0;  // sparse loss at k = 0
  double loss_last = 0.0;   // sparse loss at k = K
};

struct BatchResult {
  std::vector<BatchRecord> records;
  std::size_t failures = 0;
  MetricRecord mean_before() const;
  MetricRecord mean_after() const;
};

/// Refines every case and evaluates base and refined predictions against the
/// dense ground truth. Per-case errors are counted, not rethrown.
BatchResult refine_batch(const Model& model, std::span<const BenchmarkCase> cases,
                         const PnPConfig& cfg);

}  // namespace pnp

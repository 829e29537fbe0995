// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "pnp/tensor.hpp"

namespace pnp {

/// Standard dense-depth error metrics. Deltas are fractions in [0, 1].
struct MetricRecord {
  double rmse = 0.0;
  double mae = 0.0;
  double mre = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::size_t n_pixels = 0;
};

/// Metrics over pixels where `valid` is non-zero (all pixels when null).
/// Predictions are clamped to >= 1e-6 before the ratio metrics.
MetricRecord evaluate(const Tensor& pred, const Tensor& gt, const Tensor* valid = nullptr);

/// Field-wise mean of several records (n_pixels summed).
MetricRecord mean_record(std::span<const MetricRecord> records);

/// Relative error reduction 100 * (before - after) / before; nullopt when
/// `before` is zero.
std::optional<double> improvement_percent(double before, double after);

struct Improvement {
  std::optional<double> rmse;
  std::optional<double> mae;
  std::optional<double> mre;
};

Improvement improvement(const MetricRecord& before, const MetricRecord& after);

/// "+43.8%" style, or "n/a".
std::string format_improvement(std::optional<double> percent);

/// CSV header/row in table column order:
/// method,n_samples,pct_samples,rmse,mae,mre,d1,d2,d3 (deltas as percentages).
std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& method, std::size_t n_samples, double pct_samples,
                            const MetricRecord& record,
                            const Improvement* annotate = nullptr);

}  // namespace pnp

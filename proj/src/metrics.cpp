// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pnp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pnp/error.hpp"

namespace pnp {

MetricRecord evaluate(const Tensor& pred, const Tensor& gt, const Tensor* valid) {
  if (pred.shape() != gt.shape() || (valid && valid->shape() != gt.shape())) {
    throw ConfigError("evaluate: shape mismatch " + shape_to_string(pred.shape()) + " vs " +
                      shape_to_string(gt.shape()));
  }
  double se = 0.0, ae = 0.0, re = 0.0;
  std::size_t n = 0, d1 = 0, d2 = 0, d3 = 0;
  for (std::size_t i = 0; i < gt.numel(); ++i) {
    if (valid && (*valid)[i] == 0.0) continue;
    const double d = gt[i];
    if (!(d > 0.0)) throw ConfigError("evaluate: ground truth must be positive on valid pixels");
    const double p = pred[i];
    const double err = p - d;
    se += err * err;
    ae += std::abs(err);
    re += std::abs(err) / d;
    const double pc = std::max(p, 1e-6);
    const double ratio = std::max(pc / d, d / pc);
    d1 += ratio < 1.25;
    d2 += ratio < 1.25 * 1.25;
    d3 += ratio < 1.25 * 1.25 * 1.25;
    ++n;
  }
  if (n == 0) throw ConfigError("empty evaluation set");
  const auto dn = static_cast<double>(n);
  return {std::sqrt(se / dn), ae / dn, re / dn, d1 / dn, d2 / dn, d3 / dn, n};
}

MetricRecord mean_record(std::span<const MetricRecord> records) {
  if (records.empty()) throw ConfigError("mean of zero metric records");
  MetricRecord m;
  for (const MetricRecord& r : records) {
    m.rmse += r.rmse;
    m.mae += r.mae;
    m.mre += r.mre;
    m.delta1 += r.delta1;
    m.delta2 += r.delta2;
    m.delta3 += r.delta3;
    m.n_pixels += r.n_pixels;
  }
  const auto k = static_cast<double>(records.size());
  m.rmse /= k;
  m.mae /= k;
  m.mre /= k;
  m.delta1 /= k;
  m.delta2 /= k;
  m.delta3 /= k;
  return m;
}

std::optional<double> improvement_percent(double before, double after) {
  if (before == 0.0) return std::nullopt;
  return 100.0 * (before - after) / before;
}

Improvement improvement(const MetricRecord& before, const MetricRecord& after) {
  return {improvement_percent(before.rmse, after.rmse), improvement_percent(before.mae, after.mae),
          improvement_percent(before.mre, after.mre)};
}

std::string format_improvement(std::optional<double> percent) {
  if (!percent) return "n/a";
  // Avoid printing "-0.0%" for tiny regressions that round to zero.
  double v = *percent;
  if (std::abs(v) < 0.05) return "0.0%";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.1f%%", v);
  return buf;
}

std::string metrics_csv_header() { return "method,n_samples,pct_samples,rmse,mae,mre,d1,d2,d3"; }

std::string metrics_csv_row(const std::string& method, std::size_t n_samples, double pct_samples,
                            const MetricRecord& r, const Improvement* annotate) {
  auto annotated = [&](double value, const std::optional<double>& pct) {
    char buf[64];
    if (annotate) {
      std::snprintf(buf, sizeof buf, "%.4f (%s)", value, format_improvement(pct).c_str());
    } else {
      std::snprintf(buf, sizeof buf, "%.4f", value);
    }
    return std::string(buf);
  };
  char tail[128];
  std::snprintf(tail, sizeof tail, ",%.1f,%.1f,%.1f", 100.0 * r.delta1, 100.0 * r.delta2,
                100.0 * r.delta3);
  char head[64];
  std::snprintf(head, sizeof head, ",%zu,%.3f,", n_samples, pct_samples);
  return method + head + annotated(r.rmse, annotate ? annotate->rmse : std::nullopt) + "," +
         annotated(r.mae, annotate ? annotate->mae : std::nullopt) + "," +
         annotated(r.mre, annotate ? annotate->mre : std::nullopt) + tail;
}

}  // namespace pnp

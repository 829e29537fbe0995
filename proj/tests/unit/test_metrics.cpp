// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "pnp/error.hpp"
#include "pnp/metrics.hpp"

namespace pnp {
namespace {

Tensor row(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor({1, 1, 1, n}, std::move(v));
}

TEST(Metrics, IdentityIsPerfect) {
  const Tensor gt = row({1.0, 2.5, 7.0});
  const MetricRecord m = evaluate(gt, gt);
  EXPECT_EQ(m.rmse, 0.0);
  EXPECT_EQ(m.mae, 0.0);
  EXPECT_EQ(m.mre, 0.0);
  EXPECT_EQ(m.delta1, 1.0);
  EXPECT_EQ(m.delta2, 1.0);
  EXPECT_EQ(m.delta3, 1.0);
  EXPECT_EQ(m.n_pixels, 3u);
}

TEST(Metrics, TwoPixelExample) {
  const MetricRecord m = evaluate(row({2.0, 2.0}), row({1.0, 2.0}));
  EXPECT_NEAR(m.rmse, std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(m.rmse, 0.70711, 5e-6);
  EXPECT_DOUBLE_EQ(m.mae, 0.5);
  EXPECT_DOUBLE_EQ(m.mre, 0.5);
  EXPECT_DOUBLE_EQ(m.delta1, 0.5);
}

TEST(Metrics, DoubledPrediction) {
  const Tensor gt = row({0.7, 1.0, 3.0, 9.5});
  Tensor pred = gt;
  for (double& v : pred.data()) v *= 2.0;
  const MetricRecord m = evaluate(pred, gt);
  EXPECT_DOUBLE_EQ(m.mre, 1.0);
  EXPECT_EQ(m.delta3, 0.0);  // 2 > 1.25^3 = 1.953125
}

TEST(Metrics, MatchesBruteForceOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor gt = testing::random_tensor({1, 1, 16, 16}, rng, 0.5, 10.0);
    Tensor pred = gt;
    for (double& v : pred.data()) v = v * rng.uniform(0.4, 2.2) + rng.uniform(-0.3, 0.3);
    pred[0] = -0.2;  // exercises the clamp for ratio metrics
    const MetricRecord m = evaluate(pred, gt);
    const auto ref = testing::reference_metrics(pred.values(), gt.values());
    EXPECT_NEAR(m.rmse, ref.rmse, 1e-12);
    EXPECT_NEAR(m.mae, ref.mae, 1e-12);
    EXPECT_NEAR(m.mre, ref.mre, 1e-12);
    EXPECT_NEAR(m.delta1, ref.d1, 1e-12);
    EXPECT_NEAR(m.delta2, ref.d2, 1e-12);
    EXPECT_NEAR(m.delta3, ref.d3, 1e-12);
  }
}

TEST(Metrics, ScaleInvariance) {
  Rng rng(5);
  const Tensor gt = testing::random_tensor({1, 1, 16, 16}, rng, 0.5, 10.0);
  Tensor pred = gt;
  for (double& v : pred.data()) v *= rng.uniform(0.6, 1.6);
  const MetricRecord m = evaluate(pred, gt);
  for (double c : {0.25, 3.0, 17.0}) {
    Tensor ps = pred, gs = gt;
    for (double& v : ps.data()) v *= c;
    for (double& v : gs.data()) v *= c;
    const MetricRecord s = evaluate(ps, gs);
    EXPECT_NEAR(s.rmse, c * m.rmse, 1e-12 * c);
    EXPECT_NEAR(s.mae, c * m.mae, 1e-12 * c);
    EXPECT_NEAR(s.mre, m.mre, 1e-12);
    EXPECT_EQ(s.delta1, m.delta1);
    EXPECT_EQ(s.delta2, m.delta2);
    EXPECT_EQ(s.delta3, m.delta3);
  }
}

TEST(Metrics, Invariants) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor gt = testing::random_tensor({1, 1, 8, 8}, rng, 0.5, 10.0);
    const Tensor pred = testing::random_tensor({1, 1, 8, 8}, rng, 0.1, 12.0);
    const MetricRecord m = evaluate(pred, gt);
    EXPECT_GE(m.rmse, m.mae);
    EXPECT_GE(m.mae, 0.0);
    EXPECT_LE(m.delta1, m.delta2);
    EXPECT_LE(m.delta2, m.delta3);
    EXPECT_LE(m.delta3, 1.0);
  }
}

TEST(Metrics, ValidMaskRestrictsPixels) {
  const Tensor gt = row({1.0, 2.0, 4.0});
  const Tensor pred = row({1.0, 3.0, 100.0});
  const Tensor valid = row({1.0, 1.0, 0.0});
  const MetricRecord m = evaluate(pred, gt, &valid);
  EXPECT_EQ(m.n_pixels, 2u);
  EXPECT_DOUBLE_EQ(m.mae, 0.5);
  try {
    const Tensor none = row({0.0, 0.0, 0.0});
    evaluate(pred, gt, &none);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("empty evaluation set"), std::string::npos);
  }
}

TEST(Improvement, TableStyle) {
  EXPECT_EQ(format_improvement(improvement_percent(0.8933, 0.5021)), "+43.8%");
  EXPECT_EQ(format_improvement(improvement_percent(0.5, 0.25)), "+50.0%");
  EXPECT_EQ(format_improvement(improvement_percent(0.4, 0.5)), "-25.0%");
  EXPECT_EQ(format_improvement(improvement_percent(1.0, 1.0)), "0.0%");
  EXPECT_EQ(format_improvement(improvement_percent(0.0, 0.3)), "n/a");
}

TEST(Improvement, IdenticalRecordsAreZero) {
  const MetricRecord r{1.0, 0.8, 0.2, 0.5, 0.7, 0.9, 10};
  const Improvement d = improvement(r, r);
  EXPECT_EQ(format_improvement(d.rmse), "0.0%");
  EXPECT_EQ(format_improvement(d.mae), "0.0%");
  EXPECT_EQ(format_improvement(d.mre), "0.0%");
}

TEST(Improvement, CsvRowOrderAndAnnotation) {
  EXPECT_EQ(metrics_csv_header(), "method,n_samples,pct_samples,rmse,mae,mre,d1,d2,d3");
  const MetricRecord before{0.8933, 0.6, 0.2, 0.5, 0.7, 0.9, 10};
  const MetricRecord after{0.5021, 0.3, 0.1, 0.6, 0.8, 0.95, 10};
  const Improvement d = improvement(before, after);
  const std::string r = metrics_csv_row("eigen", 200, 0.1, after, &d);
  EXPECT_EQ(r.rfind("eigen,200,", 0), 0u) << r;
  EXPECT_NE(r.find("0.5021 (+43.8%)"), std::string::npos) << r;
  EXPECT_NE(r.find("(+50.0%)"), std::string::npos) << r;
}

}  // namespace
}  // namespace pnp

// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pnp/refine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pnp/error.hpp"

namespace pnp {

std::string_view update_rule_name(UpdateRule rule) {
  switch (rule) {
    case UpdateRule::kSign: return "sign";
    case UpdateRule::kRawGradient: return "raw_gradient";
    case UpdateRule::kAdam: return "adam";
  }
  return "unknown";
}

UpdateRule parse_update_rule(std::string_view name) {
  if (name == "sign") return UpdateRule::kSign;
  if (name == "raw_gradient" || name == "raw") return UpdateRule::kRawGradient;
  if (name == "adam") return UpdateRule::kAdam;
  throw ConfigError("unknown update_rule '" + std::string(name) +
                    "' (expected sign, raw_gradient, adam)");
}

std::string_view refine_status_name(RefineStatus status) {
  switch (status) {
    case RefineStatus::kOk: return "ok";
    case RefineStatus::kNoObservation: return "no-observation";
    case RefineStatus::kNumericFailure: return "numeric-failure";
  }
  return "unknown";
}

void PnPConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be positive");
  if (rule == UpdateRule::kAdam &&
      !(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0 &&
        adam_epsilon > 0.0)) {
    throw ConfigError("adam requires 0 <= beta1, beta2 < 1 and epsilon > 0");
  }
}

std::string RefineTrace::to_csv() const {
  std::string out = "iteration,sparse_loss,update_inf_norm\n";
  char buf[96];
  for (std::size_t k = 0; k < steps.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g\n", k, steps[k].sparse_loss,
                  steps[k].update_inf_norm);
    out += buf;
  }
  return out;
}

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

struct Evaluation {
  Tensor prediction;
  double loss = 0.0;
  bool no_observation = false;
  Tensor grad;  // d loss / d z, only when requested
};

Evaluation evaluate_rear(const Cascade& cascade, const Tensor& z, const Tensor& x,
                         const SparseDepth& sparse, LossKind loss_kind, bool want_grad) {
  Graph graph;
  const NodeId zn = graph.leaf(z);
  const NodeId xn = graph.leaf(x);
  const NodeId pred = cascade.rear_graph(graph, zn, xn);
  const LossNode loss = graph.masked_loss(pred, sparse, loss_kind);
  Evaluation e{graph.value(pred), graph.value(loss.node)[0], loss.no_observation, {}};
  if (want_grad && !loss.no_observation) e.grad = graph.backward_to(loss.node, zn);
  return e;
}

}  // namespace

RefineResult refine(const Model& model, const Tensor& x, const SparseDepth& sparse,
                    const PnPConfig& cfg) {
  cfg.validate();
  const std::vector<std::string> taps = model.taps();
  if (taps.empty()) throw ConfigError("model has no taps");
  const Cascade cascade = split(model, cfg.tap.empty() ? taps.front() : cfg.tap);
  return refine_from(cascade, cascade.front(x), x, sparse, cfg);
}

RefineResult refine_from(const Cascade& cascade, const Tensor& z0, const Tensor& x,
                         const SparseDepth& sparse, const PnPConfig& cfg) {
  cfg.validate();
  RefineResult result;
  const std::size_t K = cfg.iterations;

  // Base prediction: numeric failure here is not recoverable.
  Evaluation current = evaluate_rear(cascade, z0, x, sparse, cfg.loss, K > 0);
  result.base = current.prediction;

  if (current.no_observation) {
    result.depth = current.prediction;
    result.status = RefineStatus::kNoObservation;
    result.message = "empty observation mask";
    result.trace.steps.assign(K + 1, RefineStep{});
    return result;
  }

  Tensor z = z0;
  Tensor adam_m, adam_v;
  if (cfg.rule == UpdateRule::kAdam) {
    adam_m = Tensor(z.shape(), 0.0);
    adam_v = Tensor(z.shape(), 0.0);
  }
  double update_norm = 0.0;

  for (std::size_t k = 0;; ++k) {
    RefineStep step;
    step.sparse_loss = current.loss;
    step.update_inf_norm = update_norm;
    if (cfg.keep_snapshots) step.prediction = current.prediction;
    result.trace.steps.push_back(std::move(step));
    if (k == K) break;

    Tensor next = z;
    update_norm = 0.0;
    const Tensor& g = current.grad;
    const double t = static_cast<double>(k + 1);
    for (std::size_t i = 0; i < next.numel(); ++i) {
      double direction = 0.0;
      switch (cfg.rule) {
        case UpdateRule::kSign: direction = sign(g[i]); break;
        case UpdateRule::kRawGradient: direction = g[i]; break;
        case UpdateRule::kAdam: {
          adam_m[i] = cfg.adam_beta1 * adam_m[i] + (1.0 - cfg.adam_beta1) * g[i];
          adam_v[i] = cfg.adam_beta2 * adam_v[i] + (1.0 - cfg.adam_beta2) * g[i] * g[i];
          const double m_hat = adam_m[i] / (1.0 - std::pow(cfg.adam_beta1, t));
          const double v_hat = adam_v[i] / (1.0 - std::pow(cfg.adam_beta2, t));
          direction = m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
          break;
        }
      }
      const double step = cfg.alpha * direction;
      next[i] = z[i] - step;
      update_norm = std::max(update_norm, std::abs(step));
    }

    try {
      if (!next.all_finite()) throw NumericError("non-finite feature map");
      current = evaluate_rear(cascade, next, x, sparse, cfg.loss, k + 1 < K);
    } catch (const NumericError& e) {
      result.depth = result.trace.steps.back().prediction.value_or(current.prediction);
      result.status = RefineStatus::kNumericFailure;
      result.message = "iteration " + std::to_string(k + 1) + ": " + e.what();
      return result;
    }
    z = std::move(next);
  }
  result.depth = std::move(current.prediction);
  return result;
}

MetricRecord BatchResult::mean_before() const {
  std::vector<MetricRecord> r;
  for (const BatchRecord& b : records) r.push_back(b.before);
  return mean_record(r);
}

MetricRecord BatchResult::mean_after() const {
  std::vector<MetricRecord> r;
  for (const BatchRecord& b : records) r.push_back(b.after);
  return mean_record(r);
}

BatchResult refine_batch(const Model& model, std::span<const BenchmarkCase> cases,
                         const PnPConfig& cfg) {
  BatchResult out;
  for (const BenchmarkCase& c : cases) {
    try {
      const RefineResult r = refine(model, c.input, c.sparse, cfg);
      BatchRecord rec;
      rec.before = evaluate(r.base, c.gt);
      rec.after = evaluate(r.depth, c.gt);
      rec.delta = improvement(rec.before, rec.after);
      rec.status = r.status;
      rec.loss_first = r.trace.steps.front().sparse_loss;
      rec.loss_last = r.trace.steps.back().sparse_loss;
      if (r.status == RefineStatus::kNumericFailure) ++out.failures;
      out.records.push_back(rec);
    } catch (const NumericError&) {
      ++out.failures;
    }
  }
  return out;
}

}  // namespace pnp

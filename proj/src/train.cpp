// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pnp/error.hpp"
#include "pnp/model.hpp"
#include "pnp/rng.hpp"
#include "pnp/sparsity.hpp"

namespace pnp {

void TrainConfig::validate() const {
  if (batch_size == 0 || !(learning_rate > 0.0) || min_samples == 0 ||
      min_samples > max_samples) {
    throw ConfigError("train config requires batch_size > 0, learning_rate > 0 and "
                      "0 < min_samples <= max_samples");
  }
}

namespace {

std::size_t draw_sample_count(Rng& rng, const TrainConfig& cfg, std::size_t pixels) {
  const double lo = std::log(static_cast<double>(cfg.min_samples));
  const double hi = std::log(static_cast<double>(cfg.max_samples));
  const auto n = static_cast<std::size_t>(std::llround(std::exp(rng.uniform(lo, hi))));
  return std::min(std::clamp(n, cfg.min_samples, cfg.max_samples), pixels);
}

}  // namespace

TrainResult train(Model model, std::span<const Scene> scenes, const TrainConfig& cfg) {
  cfg.validate();
  if (scenes.empty()) throw ConfigError("training requires at least one scene");

  TrainResult result{model, {}, false, {}};
  if (cfg.epochs == 0) return result;

  Rng rng(cfg.seed);
  const bool sparse_input = model.input_mode() != InputMode::kRgb;

  // Start the output bias at the mean training depth; the remaining layers
  // then only have to learn deviations from it.
  {
    double sum = 0.0;
    std::size_t count = 0;
    for (const Scene& s : scenes) {
      for (double d : s.depth.data()) sum += d;
      count += s.depth.numel();
    }
    std::vector<Tensor>& params = model.mutable_params();
    params.back().fill(sum / static_cast<double>(count));
  }

  std::vector<std::size_t> order(scenes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double epoch_total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<Tensor> inputs, depths;
      for (std::size_t b = start; b < stop; ++b) {
        const Scene& scene = scenes[order[b]];
        SparseDepth sparse;
        if (sparse_input) {
          const std::size_t n = draw_sample_count(rng, cfg, scene.depth.numel());
          sparse = sample_uniform(scene.depth, n, rng.next_u64());
        }
        inputs.push_back(make_input(model.input_mode(), scene.rgb, sparse));
        depths.push_back(scene.depth);
      }
      const Tensor x = stack_batch(inputs);
      const Tensor gt = stack_batch(depths);
      const SparseDepth dense{gt, Tensor(gt.shape(), 1.0)};

      std::vector<Tensor> updated = model.params();
      double batch_loss = 0.0;
      try {
        Graph graph;
        const auto params = model.bind_params(graph, true);
        const NodeId input = graph.leaf(x);
        const NodeId pred = model.apply(graph, params, input, input, 0, model.layers().size());
        const LossNode loss = graph.masked_loss(pred, dense, cfg.loss);
        batch_loss = graph.value(loss.node)[0];
        graph.backward(loss.node);
        for (std::size_t p = 0; p < params.size(); ++p) {
          const Tensor* g = graph.grad(params[p]);
          if (!g) continue;
          for (std::size_t k = 0; k < updated[p].numel(); ++k) {
            updated[p][k] -= cfg.learning_rate * (*g)[k];
          }
          if (!updated[p].all_finite()) throw NumericError("non-finite parameter after update");
        }
      } catch (const NumericError& e) {
        result.model = model;
        result.diverged = true;
        result.message = "diverged in epoch " + std::to_string(epoch + 1) + ": " + e.what();
        return result;
      }
      model.mutable_params() = std::move(updated);
      epoch_total += batch_loss;
      ++batches;
    }
    result.epoch_loss.push_back(epoch_total / static_cast<double>(batches));
  }
  result.model = std::move(model);
  return result;
}

}  // namespace pnp

// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pnp/graph.hpp"
#include "pnp/scene.hpp"
#include "pnp/sparse_depth.hpp"
#include "pnp/tensor.hpp"

namespace pnp {

enum class Arch : std::uint32_t { kPlainCnn = 0, kEncDec = 1, kCoarseFine = 2, kCustom = 3 };
enum class InputMode : std::uint32_t { kRgb = 0, kSd = 1, kRgbSd = 2 };

std::string_view arch_name(Arch arch);
Arch parse_arch(std::string_view name);
std::string_view input_mode_name(InputMode mode);
InputMode parse_input_mode(std::string_view name);
std::size_t input_channels(InputMode mode);

enum class LayerKind : std::uint32_t { kConv = 0, kDownsample = 1, kUpsample = 2, kConcatInput = 3 };

struct Layer {
  LayerKind kind = LayerKind::kConv;
  std::string name;  // also the name of the tap right after this layer
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t padding = 1;
  bool relu = false;
};

struct ApplyOptions {
  bool linearize = false;  // relu replaced by identity
};

/// Feed-forward depth network: an ordered list of layers whose boundaries
/// are the legal taps. Conv layers own a weight (Co x Ci x k x k) and a bias
/// (Co) in `params()`, in layer order.
class Model {
 public:
  Model(Arch arch, InputMode mode, std::vector<Layer> layers, std::vector<Tensor> params);

  Arch arch() const { return arch_; }
  InputMode input_mode() const { return mode_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const std::vector<Tensor>& params() const { return params_; }
  std::vector<Tensor>& mutable_params() { return params_; }
  std::size_t input_channels() const { return layers_.front().in_channels; }

  /// Names of the inter-layer boundaries, shallow to deep.
  std::vector<std::string> taps() const;
  /// Index of the layer that ends at `tap`; ConfigError lists valid taps.
  std::size_t tap_index(std::string_view tap) const;
  /// Whether layers [begin, end) read the network input (concat layers).
  bool reads_input(std::size_t begin, std::size_t end) const;

  /// Adds every parameter as a leaf.
  std::vector<NodeId> bind_params(Graph& graph, bool requires_grad) const;
  /// Applies layers [begin, end) to `h`. `input` is the network input leaf.
  NodeId apply(Graph& graph, std::span<const NodeId> params, NodeId h, NodeId input,
               std::size_t begin, std::size_t end, const ApplyOptions& options = {}) const;

  Tensor run(const Tensor& x) const;

 private:
  void validate();

  Arch arch_;
  InputMode mode_;
  std::vector<Layer> layers_;
  std::vector<Tensor> params_;
  std::vector<std::size_t> param_offset_;  // first param index per layer
};

/// A model split at a tap: f = rear o front.
class Cascade {
 public:
  Cascade(const Model& model, std::size_t tap_index);

  const Model& model() const { return *model_; }
  std::size_t tap_index() const { return tap_; }
  const std::string& tap_name() const { return model_->layers()[tap_].name; }
  bool rear_reads_input() const;

  Tensor front(const Tensor& x) const;
  /// `x` is only read when the rear segment concatenates the network input.
  Tensor rear(const Tensor& z, const Tensor& x) const;
  Tensor rear(const Tensor& z) const;

  /// Builds the rear segment on `graph` with frozen (non-grad) parameters.
  NodeId rear_graph(Graph& graph, NodeId z, NodeId x, const ApplyOptions& options = {}) const;

 private:
  const Model* model_;
  std::size_t tap_;
};

Cascade split(const Model& model, std::string_view tap);

/// Builds a freshly initialised network (He-normal weights, zero biases).
Model build_model(Arch arch, InputMode mode, std::uint64_t seed = 1);

/// The sparse-depth input channel carries depth in units of 10 m.
inline constexpr double kSparseInputScale = 0.1;

/// Stacks network inputs for one scene: rgb (3ch), sd (scaled values, mask),
/// or both.
Tensor make_input(InputMode mode, const Tensor& rgb, const SparseDepth& sparse);

/// Concatenates 1 x C x H x W tensors along the batch axis.
Tensor stack_batch(std::span<const Tensor> items);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 4;
  double learning_rate = 1e-2;
  LossKind loss = LossKind::kL1;
  std::uint64_t seed = 1;
  // Sparse-input models see a fresh uniform mask per scene and epoch with a
  // sample count drawn log-uniformly from [min_samples, max_samples].
  std::size_t min_samples = 10;
  std::size_t max_samples = 500;

  void validate() const;
};

struct TrainResult {
  Model model;
  std::vector<double> epoch_loss;  // mean training loss per epoch
  bool diverged = false;
  std::string message;
};

/// Plain minibatch SGD on the dense masked loss. On divergence the last
/// finite parameters are returned with `diverged` set.
TrainResult train(Model model, std::span<const Scene> scenes, const TrainConfig& cfg);

}  // namespace pnp

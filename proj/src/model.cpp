// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pnp/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pnp/error.hpp"
#include "pnp/rng.hpp"

namespace pnp {

std::string_view arch_name(Arch arch) {
  switch (arch) {
    case Arch::kPlainCnn: return "plain_cnn";
    case Arch::kEncDec: return "encdec";
    case Arch::kCoarseFine: return "coarse_fine";
    case Arch::kCustom: return "custom";
  }
  return "unknown";
}

Arch parse_arch(std::string_view name) {
  if (name == "plain_cnn") return Arch::kPlainCnn;
  if (name == "encdec") return Arch::kEncDec;
  if (name == "coarse_fine") return Arch::kCoarseFine;
  throw ConfigError("unknown arch '" + std::string(name) +
                    "' (expected plain_cnn, encdec, coarse_fine)");
}

std::string_view input_mode_name(InputMode mode) {
  switch (mode) {
    case InputMode::kRgb: return "rgb";
    case InputMode::kSd: return "sd";
    case InputMode::kRgbSd: return "rgb+sd";
  }
  return "unknown";
}

InputMode parse_input_mode(std::string_view name) {
  if (name == "rgb") return InputMode::kRgb;
  if (name == "sd") return InputMode::kSd;
  if (name == "rgb+sd" || name == "rgbsd") return InputMode::kRgbSd;
  throw ConfigError("unknown input_mode '" + std::string(name) + "' (expected rgb, sd, rgb+sd)");
}

std::size_t input_channels(InputMode mode) {
  switch (mode) {
    case InputMode::kRgb: return 3;
    case InputMode::kSd: return 2;
    case InputMode::kRgbSd: return 5;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Model

Model::Model(Arch arch, InputMode mode, std::vector<Layer> layers, std::vector<Tensor> params)
    : arch_(arch), mode_(mode), layers_(std::move(layers)), params_(std::move(params)) {
  validate();
}

void Model::validate() {
  if (layers_.empty()) throw ConfigError("model has no layers");
  param_offset_.clear();
  std::size_t p = 0;
  std::size_t channels = layers_.front().in_channels;
  for (const Layer& layer : layers_) {
    param_offset_.push_back(p);
    if (layer.in_channels != channels) {
      throw ConfigError("layer '" + layer.name + "' expects " + std::to_string(layer.in_channels) +
                        " channels but receives " + std::to_string(channels));
    }
    switch (layer.kind) {
      case LayerKind::kConv: {
        if (p + 2 > params_.size()) throw ConfigError("missing parameters for '" + layer.name + "'");
        const Shape wshape{layer.out_channels, layer.in_channels, layer.kernel, layer.kernel};
        if (params_[p].shape() != wshape || params_[p + 1].shape() != Shape{layer.out_channels}) {
          throw ConfigError("parameter shape mismatch for layer '" + layer.name + "': weight " +
                            shape_to_string(params_[p].shape()) + " expected " +
                            shape_to_string(wshape));
        }
        p += 2;
        break;
      }
      case LayerKind::kDownsample:
      case LayerKind::kUpsample:
        if (layer.out_channels != layer.in_channels) {
          throw ConfigError("resampling layer '" + layer.name + "' cannot change channels");
        }
        break;
      case LayerKind::kConcatInput:
        if (layer.out_channels != layer.in_channels + layers_.front().in_channels) {
          throw ConfigError("concat layer '" + layer.name + "' has wrong output channel count");
        }
        break;
    }
    channels = layer.out_channels;
  }
  if (p != params_.size()) throw ConfigError("model has unused parameter tensors");
  for (std::size_t i = 0; i < layers_.size(); ++i)
    for (std::size_t j = i + 1; j < layers_.size(); ++j)
      if (layers_[i].name == layers_[j].name) {
        throw ConfigError("duplicate layer name '" + layers_[i].name + "'");
      }
}

std::vector<std::string> Model::taps() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) out.push_back(layers_[i].name);
  return out;
}

std::size_t Model::tap_index(std::string_view tap) const {
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
    if (layers_[i].name == tap) return i;
  }
  std::string valid;
  for (const std::string& t : taps()) valid += (valid.empty() ? "" : ", ") + t;
  throw ConfigError("unknown tap '" + std::string(tap) + "' (valid taps: " + valid + ")");
}

bool Model::reads_input(std::size_t begin, std::size_t end) const {
  for (std::size_t i = begin; i < end && i < layers_.size(); ++i) {
    if (layers_[i].kind == LayerKind::kConcatInput) return true;
  }
  return false;
}

std::vector<NodeId> Model::bind_params(Graph& graph, bool requires_grad) const {
  std::vector<NodeId> ids;
  ids.reserve(params_.size());
  for (const Tensor& p : params_) ids.push_back(graph.leaf(p, requires_grad));
  return ids;
}

NodeId Model::apply(Graph& graph, std::span<const NodeId> params, NodeId h, NodeId input,
                    std::size_t begin, std::size_t end, const ApplyOptions& options) const {
  for (std::size_t i = begin; i < end; ++i) {
    const Layer& layer = layers_[i];
    switch (layer.kind) {
      case LayerKind::kConv: {
        const std::size_t p = param_offset_[i];
        h = graph.conv2d(h, params[p], layer.stride, layer.padding);
        h = graph.bias(h, params[p + 1]);
        if (layer.relu && !options.linearize) h = graph.relu(h);
        break;
      }
      case LayerKind::kDownsample: h = graph.downsample2x(h); break;
      case LayerKind::kUpsample: h = graph.upsample2x(h); break;
      case LayerKind::kConcatInput: h = graph.concat(h, input); break;
    }
  }
  return h;
}

Tensor Model::run(const Tensor& x) const {
  Graph graph;
  const auto params = bind_params(graph, false);
  const NodeId input = graph.leaf(x);
  return graph.value(apply(graph, params, input, input, 0, layers_.size()));
}

// ---------------------------------------------------------------------------
// Cascade

Cascade::Cascade(const Model& model, std::size_t tap_index) : model_(&model), tap_(tap_index) {
  if (tap_index + 1 >= model.layers().size()) {
    throw ConfigError("tap index " + std::to_string(tap_index) + " out of range");
  }
}

bool Cascade::rear_reads_input() const {
  return model_->reads_input(tap_ + 1, model_->layers().size());
}

Tensor Cascade::front(const Tensor& x) const {
  Graph graph;
  const auto params = model_->bind_params(graph, false);
  const NodeId input = graph.leaf(x);
  return graph.value(model_->apply(graph, params, input, input, 0, tap_ + 1));
}

Tensor Cascade::rear(const Tensor& z, const Tensor& x) const {
  Graph graph;
  const NodeId zn = graph.leaf(z);
  const NodeId xn = graph.leaf(x);
  return graph.value(rear_graph(graph, zn, xn));
}

Tensor Cascade::rear(const Tensor& z) const {
  if (rear_reads_input()) {
    throw ContractError("rear segment after tap '" + tap_name() + "' needs the network input");
  }
  Graph graph;
  const NodeId zn = graph.leaf(z);
  return graph.value(rear_graph(graph, zn, zn));
}

NodeId Cascade::rear_graph(Graph& graph, NodeId z, NodeId x, const ApplyOptions& options) const {
  const auto params = model_->bind_params(graph, false);
  return model_->apply(graph, params, z, x, tap_ + 1, model_->layers().size(), options);
}

Cascade split(const Model& model, std::string_view tap) {
  return Cascade(model, model.tap_index(tap));
}

// ---------------------------------------------------------------------------
// Architectures

namespace {

Layer conv(std::string name, std::size_t in, std::size_t out, bool relu) {
  return Layer{LayerKind::kConv, std::move(name), in, out, 3, 1, 1, relu};
}
Layer down(std::string name, std::size_t ch) {
  return Layer{LayerKind::kDownsample, std::move(name), ch, ch, 0, 0, 0, false};
}
Layer up(std::string name, std::size_t ch) {
  return Layer{LayerKind::kUpsample, std::move(name), ch, ch, 0, 0, 0, false};
}

// Two pooling stages, bottleneck at 1/4 resolution, two upsampling stages.
// No skip connections, so every tap fully determines the output.
std::vector<Layer> encdec_layers(std::size_t in, const std::string& prefix) {
  return {
      conv(prefix + "enc1", in, 8, true),
      down(prefix + "down1", 8),
      conv(prefix + "enc2", 8, 16, true),
      down(prefix + "down2", 16),
      conv(prefix + "bottleneck", 16, 32, true),
      up(prefix + "up1", 32),
      conv(prefix + "dec1", 32, 16, true),
      up(prefix + "up2", 16),
      conv(prefix + "dec2", 16, 8, true),
  };
}

std::vector<Layer> layers_for(Arch arch, std::size_t in) {
  switch (arch) {
    case Arch::kPlainCnn:
      return {conv("conv1", in, 8, true), conv("conv2", 8, 8, true), conv("conv3", 8, 8, true),
              conv("conv4", 8, 8, true), conv("output", 8, 1, false)};
    case Arch::kEncDec: {
      auto layers = encdec_layers(in, "");
      layers.push_back(conv("output", 8, 1, false));
      return layers;
    }
    case Arch::kCoarseFine: {
      auto layers = encdec_layers(in, "coarse_");
      layers.push_back(conv("coarse", 8, 1, false));
      layers.push_back(Layer{LayerKind::kConcatInput, "fuse", 1, 1 + in, 0, 0, 0, false});
      layers.push_back(conv("refine1", 1 + in, 8, true));
      layers.push_back(conv("output", 8, 1, false));
      return layers;
    }
    case Arch::kCustom: break;
  }
  throw ConfigError("cannot build a custom architecture by name");
}

}  // namespace

Model build_model(Arch arch, InputMode mode, std::uint64_t seed) {
  std::vector<Layer> layers = layers_for(arch, input_channels(mode));
  Rng rng(seed);
  std::vector<Tensor> params;
  for (const Layer& layer : layers) {
    if (layer.kind != LayerKind::kConv) continue;
    const std::size_t fan_in = layer.in_channels * layer.kernel * layer.kernel;
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    Tensor w({layer.out_channels, layer.in_channels, layer.kernel, layer.kernel});
    for (double& v : w.data()) v = rng.normal(0.0, stddev);
    params.push_back(std::move(w));
    params.emplace_back(Shape{layer.out_channels}, 0.0);
  }
  return Model(arch, mode, std::move(layers), std::move(params));
}

Tensor make_input(InputMode mode, const Tensor& rgb, const SparseDepth& sparse) {
  std::vector<const Tensor*> parts;
  if (mode != InputMode::kSd) parts.push_back(&rgb);
  if (mode != InputMode::kRgb) {
    parts.push_back(&sparse.values);
    parts.push_back(&sparse.mask);
  }
  const Tensor& ref = *parts.front();
  std::size_t channels = 0;
  for (const Tensor* t : parts) {
    if (t->rank() != 4 || t->batch() != 1 || t->height() != ref.height() ||
        t->width() != ref.width()) {
      throw ConfigError("input part has shape " + shape_to_string(t->shape()) + ", expected 1xCx" +
                        std::to_string(ref.height()) + "x" + std::to_string(ref.width()));
    }
    channels += t->channels();
  }
  Tensor x = Tensor::image(channels, ref.height(), ref.width());
  std::size_t offset = 0;
  for (const Tensor* t : parts) {
    const double scale = t == &sparse.values ? kSparseInputScale : 1.0;
    for (std::size_t i = 0; i < t->numel(); ++i) x[offset + i] = scale * (*t)[i];
    offset += t->numel();
  }
  return x;
}

Tensor stack_batch(std::span<const Tensor> items) {
  if (items.empty()) throw ConfigError("cannot stack an empty batch");
  Shape shape = items.front().shape();
  for (const Tensor& t : items) {
    if (t.shape() != shape) {
      throw ConfigError("batch items differ in shape: " + shape_to_string(t.shape()) + " vs " +
                        shape_to_string(shape));
    }
  }
  shape[0] *= items.size();
  std::vector<double> data;
  data.reserve(shape_numel(shape));
  for (const Tensor& t : items) data.insert(data.end(), t.data().begin(), t.data().end());
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace pnp

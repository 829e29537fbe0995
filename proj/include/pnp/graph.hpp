// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "pnp/sparse_depth.hpp"
#include "pnp/tensor.hpp"

namespace pnp {

enum class OpKind {
  kLeaf,
  kConv2d,
  kBias,
  kRelu,
  kAdd,
  kScale,
  kConcat,
  kUpsample2x,
  kDownsample2x,
  kWeightedSum,
  kMaskedLoss,
};

std::string_view op_name(OpKind kind);

enum class LossKind { kL1, kL2, kBerHu };
enum class Reduction { kMean, kSum };

std::string_view loss_name(LossKind kind);
LossKind parse_loss(std::string_view name);

struct NodeId {
  std::size_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

struct LossNode {
  NodeId node;
  bool no_observation = false;  // mask was empty; value is exactly zero
};

/// Eagerly evaluated reverse-mode autodiff tape.
///
/// Every op computes its output at construction time, so node indices are a
/// topological order. Values are checked for finiteness after each op.
/// A Graph is single-threaded; separate instances share nothing.
class Graph {
 public:
  NodeId leaf(Tensor value, bool requires_grad = false);

  /// input N x Ci x H x W, weight Co x Ci x k x k, zero padding.
  NodeId conv2d(NodeId input, NodeId weight, std::size_t stride = 1, std::size_t padding = 0);
  /// Adds a per-channel bias (shape [C]) to an NCHW tensor.
  NodeId bias(NodeId input, NodeId bias);
  NodeId relu(NodeId input);
  NodeId add(NodeId a, NodeId b);
  NodeId scale(NodeId input, double factor);
  /// Channel-axis concatenation of two NCHW tensors.
  NodeId concat(NodeId a, NodeId b);
  /// Nearest-neighbour 2x upsampling.
  NodeId upsample2x(NodeId input);
  /// 2x2 average pooling, stride 2; odd trailing rows/columns are dropped.
  NodeId downsample2x(NodeId input);
  /// Scalar sum(input * weights) with constant weights.
  NodeId weighted_sum(NodeId input, Tensor weights);
  /// Masked per-pixel loss against sparse depth; scalar output.
  LossNode masked_loss(NodeId pred, const SparseDepth& target, LossKind kind,
                       Reduction reduction = Reduction::kMean);

  const Tensor& forward(NodeId node) const { return value(node); }
  const Tensor& value(NodeId node) const;
  /// Accumulated gradient, or nullptr when the node received none.
  const Tensor* grad(NodeId node) const;
  OpKind kind(NodeId node) const;
  std::size_t size() const { return nodes_.size(); }

  /// Leaves only; the new value must keep the shape. Derived nodes are not
  /// recomputed, so this is meant for parameter leaves after backward.
  Tensor& mutable_leaf(NodeId node);

  bool is_ancestor(NodeId ancestor, NodeId node) const;

  /// Full backward from a scalar: gradients reach every requires_grad leaf.
  void backward(NodeId loss);
  /// Truncated backward: returns d loss / d stop_at. Nothing upstream of
  /// stop_at (including parameters) receives a gradient.
  Tensor backward_to(NodeId loss, NodeId stop_at);

 private:
  struct Node {
    OpKind kind = OpKind::kLeaf;
    std::vector<NodeId> parents;
    Tensor value;
    Tensor grad;  // empty when absent
    bool requires_grad = false;
    // op attributes
    std::size_t stride = 1;
    std::size_t padding = 0;
    double factor = 1.0;
    Tensor aux_a;  // loss: target values / weighted_sum: weights
    Tensor aux_b;  // loss: mask
    LossKind loss = LossKind::kL1;
    Reduction reduction = Reduction::kMean;
  };

  NodeId push(Node node);
  const Node& node(NodeId id) const;
  void run_backward(NodeId loss, const std::vector<bool>& active);
  void backward_node(std::size_t index, const std::vector<bool>& active);
  Tensor& grad_buffer(std::size_t index);

  std::vector<Node> nodes_;
};

}  // namespace pnp

// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pnp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pnp/error.hpp"

namespace pnp {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kConv2d: return "conv2d";
    case OpKind::kBias: return "bias";
    case OpKind::kRelu: return "relu";
    case OpKind::kAdd: return "add";
    case OpKind::kScale: return "scale";
    case OpKind::kConcat: return "concat";
    case OpKind::kUpsample2x: return "upsample2x";
    case OpKind::kDownsample2x: return "downsample2x";
    case OpKind::kWeightedSum: return "weighted_sum";
    case OpKind::kMaskedLoss: return "masked_loss";
  }
  return "unknown";
}

std::string_view loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::kL1: return "l1";
    case LossKind::kL2: return "l2";
    case LossKind::kBerHu: return "berhu";
  }
  return "unknown";
}

LossKind parse_loss(std::string_view name) {
  if (name == "l1" || name == "L1") return LossKind::kL1;
  if (name == "l2" || name == "L2") return LossKind::kL2;
  if (name == "berhu" || name == "berHu") return LossKind::kBerHu;
  throw ConfigError("unknown loss '" + std::string(name) + "' (expected l1, l2, berhu)");
}

namespace {

std::string node_label(std::size_t index, OpKind kind) {
  return "node #" + std::to_string(index) + " (" + std::string(op_name(kind)) + ")";
}

void require_rank4(const Tensor& t, std::string_view what) {
  if (t.rank() != 4) {
    throw ConfigError(std::string(what) + " expects an NCHW tensor, got " +
                      shape_to_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view what) {
  if (a.shape() != b.shape()) {
    throw ConfigError(std::string(what) + ": shape mismatch " + shape_to_string(a.shape()) +
                      " vs " + shape_to_string(b.shape()));
  }
}

// Range of output columns [lo, hi) whose input column ow*stride + k - pad lies
// inside [0, in_extent).
struct Span {
  std::size_t lo;
  std::size_t hi;
};

Span valid_outputs(std::size_t out_extent, std::size_t in_extent, std::size_t stride,
                   std::size_t k, std::size_t pad) {
  const long long s = static_cast<long long>(stride);
  const long long off = static_cast<long long>(k) - static_cast<long long>(pad);
  long long lo = 0;
  if (off < 0) lo = (-off + s - 1) / s;
  long long hi_incl = (static_cast<long long>(in_extent) - 1 - off);
  if (hi_incl < 0) return {0, 0};
  hi_incl /= s;
  long long hi = std::min<long long>(hi_incl + 1, static_cast<long long>(out_extent));
  if (hi <= lo) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

std::size_t SparseDepth::count() const {
  std::size_t n = 0;
  for (double m : mask.data()) n += m != 0.0;
  return n;
}

SparseDepth SparseDepth::from_mask(const Tensor& depth, Tensor mask) {
  require_same_shape(depth, mask, "sparse depth");
  Tensor values(depth.shape());
  for (std::size_t i = 0; i < depth.numel(); ++i) values[i] = mask[i] * depth[i];
  return {std::move(values), std::move(mask)};
}

const Graph::Node& Graph::node(NodeId id) const {
  if (id.index >= nodes_.size()) throw GraphError("invalid node id " + std::to_string(id.index));
  return nodes_[id.index];
}

const Tensor& Graph::value(NodeId id) const { return node(id).value; }

const Tensor* Graph::grad(NodeId id) const {
  const Node& n = node(id);
  return n.grad.empty() ? nullptr : &n.grad;
}

OpKind Graph::kind(NodeId id) const { return node(id).kind; }

Tensor& Graph::mutable_leaf(NodeId id) {
  node(id);
  if (nodes_[id.index].kind != OpKind::kLeaf) throw GraphError("mutable_leaf on a derived node");
  return nodes_[id.index].value;
}

NodeId Graph::push(Node n) {
  if (!n.value.all_finite()) {
    throw NumericError("non-finite value in " + node_label(nodes_.size(), n.kind));
  }
  nodes_.push_back(std::move(n));
  return NodeId{nodes_.size() - 1};
}

NodeId Graph::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.kind = OpKind::kLeaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

NodeId Graph::conv2d(NodeId input, NodeId weight, std::size_t stride, std::size_t padding) {
  const Tensor& x = value(input);
  const Tensor& w = value(weight);
  require_rank4(x, "conv2d input");
  require_rank4(w, "conv2d weight");
  if (w.dim(1) != x.channels() || w.dim(2) != w.dim(3) || stride == 0) {
    throw ConfigError("conv2d: incompatible input " + shape_to_string(x.shape()) +
                      " and weight " + shape_to_string(w.shape()));
  }
  const std::size_t k = w.dim(2);
  if (x.height() + 2 * padding < k || x.width() + 2 * padding < k) {
    throw ConfigError("conv2d: kernel " + shape_to_string(w.shape()) + " larger than input " +
                      shape_to_string(x.shape()));
  }
  const std::size_t n_batch = x.batch(), ci_n = x.channels(), co_n = w.dim(0);
  const std::size_t h = x.height(), wd = x.width();
  const std::size_t ho = (h + 2 * padding - k) / stride + 1;
  const std::size_t wo = (wd + 2 * padding - k) / stride + 1;

  Tensor out({n_batch, co_n, ho, wo});
  const double* xd = x.data().data();
  const double* wdat = w.data().data();
  double* od = out.data().data();
  for (std::size_t n = 0; n < n_batch; ++n) {
    for (std::size_t co = 0; co < co_n; ++co) {
      double* oplane = od + (n * co_n + co) * ho * wo;
      for (std::size_t ci = 0; ci < ci_n; ++ci) {
        const double* iplane = xd + (n * ci_n + ci) * h * wd;
        for (std::size_t kh = 0; kh < k; ++kh) {
          const Span rows = valid_outputs(ho, h, stride, kh, padding);
          for (std::size_t kw = 0; kw < k; ++kw) {
            const Span cols = valid_outputs(wo, wd, stride, kw, padding);
            const double wv = wdat[((co * ci_n + ci) * k + kh) * k + kw];
            for (std::size_t oh = rows.lo; oh < rows.hi; ++oh) {
              const double* irow = iplane + (oh * stride + kh - padding) * wd;
              double* orow = oplane + oh * wo;
              if (stride == 1) {
                const double* ip = irow + kw - padding;
                for (std::size_t ow = cols.lo; ow < cols.hi; ++ow) orow[ow] += wv * ip[ow];
              } else {
                for (std::size_t ow = cols.lo; ow < cols.hi; ++ow) {
                  orow[ow] += wv * irow[ow * stride + kw - padding];
                }
              }
            }
          }
        }
      }
    }
  }
  Node node_;
  node_.kind = OpKind::kConv2d;
  node_.parents = {input, weight};
  node_.value = std::move(out);
  node_.stride = stride;
  node_.padding = padding;
  return push(std::move(node_));
}

NodeId Graph::bias(NodeId input, NodeId bias_id) {
  const Tensor& x = value(input);
  const Tensor& b = value(bias_id);
  require_rank4(x, "bias input");
  if (b.rank() != 1 || b.dim(0) != x.channels()) {
    throw ConfigError("bias: shape mismatch " + shape_to_string(x.shape()) + " vs " +
                      shape_to_string(b.shape()));
  }
  Tensor out = x;
  const std::size_t plane = x.height() * x.width();
  for (std::size_t n = 0; n < x.batch(); ++n) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      double* p = out.data().data() + (n * x.channels() + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) p[i] += b[c];
    }
  }
  Node n;
  n.kind = OpKind::kBias;
  n.parents = {input, bias_id};
  n.value = std::move(out);
  return push(std::move(n));
}

NodeId Graph::relu(NodeId input) {
  Tensor out = value(input);
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  Node n;
  n.kind = OpKind::kRelu;
  n.parents = {input};
  n.value = std::move(out);
  return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  require_same_shape(x, y, "add");
  Tensor out = x;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += y[i];
  Node n;
  n.kind = OpKind::kAdd;
  n.parents = {a, b};
  n.value = std::move(out);
  return push(std::move(n));
}

NodeId Graph::scale(NodeId input, double factor) {
  Tensor out = value(input);
  for (double& v : out.data()) v *= factor;
  Node n;
  n.kind = OpKind::kScale;
  n.parents = {input};
  n.value = std::move(out);
  n.factor = factor;
  return push(std::move(n));
}

NodeId Graph::concat(NodeId a, NodeId b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  require_rank4(x, "concat");
  require_rank4(y, "concat");
  if (x.batch() != y.batch() || x.height() != y.height() || x.width() != y.width()) {
    throw ConfigError("concat: shape mismatch " + shape_to_string(x.shape()) + " vs " +
                      shape_to_string(y.shape()));
  }
  const std::size_t plane = x.height() * x.width();
  const std::size_t cx = x.channels(), cy = y.channels();
  Tensor out({x.batch(), cx + cy, x.height(), x.width()});
  for (std::size_t n = 0; n < x.batch(); ++n) {
    std::copy_n(x.data().data() + n * cx * plane, cx * plane,
                out.data().data() + n * (cx + cy) * plane);
    std::copy_n(y.data().data() + n * cy * plane, cy * plane,
                out.data().data() + (n * (cx + cy) + cx) * plane);
  }
  Node node_;
  node_.kind = OpKind::kConcat;
  node_.parents = {a, b};
  node_.value = std::move(out);
  return push(std::move(node_));
}

NodeId Graph::upsample2x(NodeId input) {
  const Tensor& x = value(input);
  require_rank4(x, "upsample2x");
  Tensor out({x.batch(), x.channels(), 2 * x.height(), 2 * x.width()});
  for (std::size_t n = 0; n < x.batch(); ++n)
    for (std::size_t c = 0; c < x.channels(); ++c)
      for (std::size_t i = 0; i < out.height(); ++i)
        for (std::size_t j = 0; j < out.width(); ++j) out.at(n, c, i, j) = x.at(n, c, i / 2, j / 2);
  Node node_;
  node_.kind = OpKind::kUpsample2x;
  node_.parents = {input};
  node_.value = std::move(out);
  return push(std::move(node_));
}

NodeId Graph::downsample2x(NodeId input) {
  const Tensor& x = value(input);
  require_rank4(x, "downsample2x");
  if (x.height() < 2 || x.width() < 2) {
    throw ConfigError("downsample2x: input too small " + shape_to_string(x.shape()));
  }
  Tensor out({x.batch(), x.channels(), x.height() / 2, x.width() / 2});
  for (std::size_t n = 0; n < x.batch(); ++n)
    for (std::size_t c = 0; c < x.channels(); ++c)
      for (std::size_t i = 0; i < out.height(); ++i)
        for (std::size_t j = 0; j < out.width(); ++j)
          out.at(n, c, i, j) = 0.25 * (x.at(n, c, 2 * i, 2 * j) + x.at(n, c, 2 * i, 2 * j + 1) +
                                       x.at(n, c, 2 * i + 1, 2 * j) +
                                       x.at(n, c, 2 * i + 1, 2 * j + 1));
  Node node_;
  node_.kind = OpKind::kDownsample2x;
  node_.parents = {input};
  node_.value = std::move(out);
  return push(std::move(node_));
}

NodeId Graph::weighted_sum(NodeId input, Tensor weights) {
  const Tensor& x = value(input);
  require_same_shape(x, weights, "weighted_sum");
  double s = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) s += x[i] * weights[i];
  Node n;
  n.kind = OpKind::kWeightedSum;
  n.parents = {input};
  n.value = Tensor({1}, s);
  n.aux_a = std::move(weights);
  return push(std::move(n));
}

LossNode Graph::masked_loss(NodeId pred, const SparseDepth& target, LossKind kind,
                            Reduction reduction) {
  const Tensor& p = value(pred);
  require_same_shape(p, target.values, "masked_loss");
  require_same_shape(p, target.mask, "masked_loss mask");

  double count = 0.0;
  double max_residual = 0.0;
  for (std::size_t i = 0; i < p.numel(); ++i) {
    if (target.mask[i] == 0.0) continue;
    count += 1.0;
    max_residual = std::max(max_residual, std::abs(p[i] - target.values[i]));
  }
  const double c = 0.2 * max_residual;
  double total = 0.0;
  for (std::size_t i = 0; i < p.numel(); ++i) {
    if (target.mask[i] == 0.0) continue;
    const double r = p[i] - target.values[i];
    const double a = std::abs(r);
    switch (kind) {
      case LossKind::kL1: total += a; break;
      case LossKind::kL2: total += r * r; break;
      case LossKind::kBerHu: total += (a <= c) ? a : (r * r + c * c) / (2.0 * c); break;
    }
  }
  const double norm = reduction == Reduction::kMean ? std::max(1.0, count) : 1.0;

  Node n;
  n.kind = OpKind::kMaskedLoss;
  n.parents = {pred};
  n.value = Tensor({1}, count == 0.0 ? 0.0 : total / norm);
  n.aux_a = target.values;
  n.aux_b = target.mask;
  n.loss = kind;
  n.reduction = reduction;
  n.factor = c;
  return {push(std::move(n)), count == 0.0};
}

bool Graph::is_ancestor(NodeId ancestor, NodeId descendant) const {
  node(ancestor);
  node(descendant);
  if (ancestor.index > descendant.index) return false;
  std::vector<bool> seen(descendant.index + 1, false);
  std::vector<std::size_t> stack{descendant.index};
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    if (i == ancestor.index) return true;
    if (seen[i]) continue;
    seen[i] = true;
    for (NodeId p : nodes_[i].parents) {
      if (p.index >= ancestor.index && !seen[p.index]) stack.push_back(p.index);
    }
  }
  return false;
}

Tensor& Graph::grad_buffer(std::size_t index) {
  Node& n = nodes_[index];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

void Graph::backward(NodeId loss) {
  if (node(loss).value.numel() != 1) {
    throw ContractError("backward requires a scalar loss, got " +
                        shape_to_string(node(loss).value.shape()));
  }
  std::vector<bool> active(nodes_.size(), false);
  for (std::size_t i = 0; i <= loss.index; ++i) {
    active[i] = nodes_[i].requires_grad;
    for (NodeId p : nodes_[i].parents) active[i] = active[i] || active[p.index];
  }
  run_backward(loss, active);
}

Tensor Graph::backward_to(NodeId loss, NodeId stop_at) {
  if (node(loss).value.numel() != 1) {
    throw ContractError("backward_to requires a scalar loss, got " +
                        shape_to_string(node(loss).value.shape()));
  }
  if (!is_ancestor(stop_at, loss)) {
    throw GraphError("node #" + std::to_string(stop_at.index) +
                     " is not an ancestor of loss node #" + std::to_string(loss.index));
  }
  std::vector<bool> active(nodes_.size(), false);
  active[stop_at.index] = true;
  for (std::size_t i = stop_at.index + 1; i <= loss.index; ++i) {
    for (NodeId p : nodes_[i].parents) active[i] = active[i] || active[p.index];
  }
  run_backward(loss, active);
  return nodes_[stop_at.index].grad.empty() ? Tensor(nodes_[stop_at.index].value.shape(), 0.0)
                                            : nodes_[stop_at.index].grad;
}

void Graph::run_backward(NodeId loss, const std::vector<bool>& active) {
  for (Node& n : nodes_) n.grad = Tensor();
  if (!active[loss.index]) return;
  grad_buffer(loss.index)[0] = 1.0;
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    if (!active[i] || nodes_[i].grad.empty() || nodes_[i].kind == OpKind::kLeaf) continue;
    backward_node(i, active);
  }
  for (std::size_t i = 0; i <= loss.index; ++i) {
    if (!nodes_[i].grad.empty() && !nodes_[i].grad.all_finite()) {
      throw NumericError("non-finite gradient at " + node_label(i, nodes_[i].kind));
    }
  }
}

void Graph::backward_node(std::size_t index, const std::vector<bool>& active) {
  // Copy the parent list: grad_buffer() never reallocates nodes_, but keep
  // references short-lived anyway.
  const std::vector<NodeId> parents = nodes_[index].parents;
  const Tensor& g = nodes_[index].grad;
  const Node& self = nodes_[index];
  auto wants = [&](std::size_t k) { return active[parents[k].index]; };

  switch (self.kind) {
    case OpKind::kLeaf:
      break;
    case OpKind::kConv2d: {
      const Tensor& x = nodes_[parents[0].index].value;
      const Tensor& w = nodes_[parents[1].index].value;
      const std::size_t stride = self.stride, padding = self.padding;
      const std::size_t n_batch = x.batch(), ci_n = x.channels(), co_n = w.dim(0);
      const std::size_t h = x.height(), wd = x.width(), k = w.dim(2);
      const std::size_t ho = g.height(), wo = g.width();
      double* gx = wants(0) ? grad_buffer(parents[0].index).data().data() : nullptr;
      double* gw = wants(1) ? grad_buffer(parents[1].index).data().data() : nullptr;
      const double* xd = x.data().data();
      const double* wdat = w.data().data();
      const double* gd = g.data().data();
      for (std::size_t n = 0; n < n_batch; ++n) {
        for (std::size_t co = 0; co < co_n; ++co) {
          const double* gplane = gd + (n * co_n + co) * ho * wo;
          for (std::size_t ci = 0; ci < ci_n; ++ci) {
            const std::size_t in_off = (n * ci_n + ci) * h * wd;
            for (std::size_t kh = 0; kh < k; ++kh) {
              const Span rows = valid_outputs(ho, h, stride, kh, padding);
              for (std::size_t kw = 0; kw < k; ++kw) {
                const Span cols = valid_outputs(wo, wd, stride, kw, padding);
                const std::size_t widx = ((co * ci_n + ci) * k + kh) * k + kw;
                if (gx) {
                  const double wv = wdat[widx];
                  for (std::size_t oh = rows.lo; oh < rows.hi; ++oh) {
                    double* xrow = gx + in_off + (oh * stride + kh - padding) * wd;
                    const double* grow = gplane + oh * wo;
                    if (stride == 1) {
                      double* xp = xrow + kw - padding;
                      for (std::size_t ow = cols.lo; ow < cols.hi; ++ow) xp[ow] += wv * grow[ow];
                    } else {
                      for (std::size_t ow = cols.lo; ow < cols.hi; ++ow) {
                        xrow[ow * stride + kw - padding] += wv * grow[ow];
                      }
                    }
                  }
                }
                if (gw) {
                  // Four interleaved partial sums; fixed order keeps results deterministic.
                  double acc[4] = {0.0, 0.0, 0.0, 0.0};
                  for (std::size_t oh = rows.lo; oh < rows.hi; ++oh) {
                    const double* xrow = xd + in_off + (oh * stride + kh - padding) * wd;
                    const double* grow = gplane + oh * wo;
                    std::size_t ow = cols.lo;
                    if (stride == 1) {
                      const double* xp = xrow + kw - padding;
                      for (; ow + 4 <= cols.hi; ow += 4) {
                        acc[0] += xp[ow] * grow[ow];
                        acc[1] += xp[ow + 1] * grow[ow + 1];
                        acc[2] += xp[ow + 2] * grow[ow + 2];
                        acc[3] += xp[ow + 3] * grow[ow + 3];
                      }
                    }
                    for (; ow < cols.hi; ++ow) acc[0] += xrow[ow * stride + kw - padding] * grow[ow];
                  }
                  gw[widx] += (acc[0] + acc[1]) + (acc[2] + acc[3]);
                }
              }
            }
          }
        }
      }
      break;
    }
    case OpKind::kBias: {
      const std::size_t plane = g.height() * g.width();
      if (wants(0)) {
        Tensor& gx = grad_buffer(parents[0].index);
        for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
      }
      if (wants(1)) {
        Tensor& gb = grad_buffer(parents[1].index);
        for (std::size_t n = 0; n < g.batch(); ++n)
          for (std::size_t c = 0; c < g.channels(); ++c) {
            const double* p = g.data().data() + (n * g.channels() + c) * plane;
            double s = 0.0;
            for (std::size_t i = 0; i < plane; ++i) s += p[i];
            gb[c] += s;
          }
      }
      break;
    }
    case OpKind::kRelu: {
      if (!wants(0)) break;
      const Tensor& x = nodes_[parents[0].index].value;
      Tensor& gx = grad_buffer(parents[0].index);
      for (std::size_t i = 0; i < g.numel(); ++i) {
        if (x[i] > 0.0) gx[i] += g[i];
      }
      break;
    }
    case OpKind::kAdd: {
      for (std::size_t k = 0; k < 2; ++k) {
        if (!wants(k)) continue;
        Tensor& gx = grad_buffer(parents[k].index);
        for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
      }
      break;
    }
    case OpKind::kScale: {
      if (!wants(0)) break;
      Tensor& gx = grad_buffer(parents[0].index);
      for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += self.factor * g[i];
      break;
    }
    case OpKind::kConcat: {
      const std::size_t plane = g.height() * g.width();
      const std::size_t cx = nodes_[parents[0].index].value.channels();
      const std::size_t cy = nodes_[parents[1].index].value.channels();
      for (std::size_t k = 0; k < 2; ++k) {
        if (!wants(k)) continue;
        Tensor& gp = grad_buffer(parents[k].index);
        const std::size_t cp = k == 0 ? cx : cy;
        for (std::size_t n = 0; n < g.batch(); ++n) {
          const double* src = g.data().data() + (n * (cx + cy) + (k == 0 ? 0 : cx)) * plane;
          double* dst = gp.data().data() + n * cp * plane;
          for (std::size_t i = 0; i < cp * plane; ++i) dst[i] += src[i];
        }
      }
      break;
    }
    case OpKind::kUpsample2x: {
      if (!wants(0)) break;
      Tensor& gx = grad_buffer(parents[0].index);
      for (std::size_t n = 0; n < g.batch(); ++n)
        for (std::size_t c = 0; c < g.channels(); ++c)
          for (std::size_t i = 0; i < g.height(); ++i)
            for (std::size_t j = 0; j < g.width(); ++j) gx.at(n, c, i / 2, j / 2) += g.at(n, c, i, j);
      break;
    }
    case OpKind::kDownsample2x: {
      if (!wants(0)) break;
      Tensor& gx = grad_buffer(parents[0].index);
      for (std::size_t n = 0; n < g.batch(); ++n)
        for (std::size_t c = 0; c < g.channels(); ++c)
          for (std::size_t i = 0; i < g.height(); ++i)
            for (std::size_t j = 0; j < g.width(); ++j) {
              const double v = 0.25 * g.at(n, c, i, j);
              gx.at(n, c, 2 * i, 2 * j) += v;
              gx.at(n, c, 2 * i, 2 * j + 1) += v;
              gx.at(n, c, 2 * i + 1, 2 * j) += v;
              gx.at(n, c, 2 * i + 1, 2 * j + 1) += v;
            }
      break;
    }
    case OpKind::kWeightedSum: {
      if (!wants(0)) break;
      Tensor& gx = grad_buffer(parents[0].index);
      for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += g[0] * self.aux_a[i];
      break;
    }
    case OpKind::kMaskedLoss: {
      if (!wants(0)) break;
      const Tensor& p = nodes_[parents[0].index].value;
      const Tensor& target = self.aux_a;
      const Tensor& mask = self.aux_b;
      double count = 0.0;
      for (double m : mask.data()) count += m != 0.0;
      if (count == 0.0) break;
      const double norm = self.reduction == Reduction::kMean ? std::max(1.0, count) : 1.0;
      const double scale = g[0] / norm;
      const double c = self.factor;
      Tensor& gp = grad_buffer(parents[0].index);
      double dloss_dc = 0.0;
      std::size_t argmax = p.numel();
      double best = -1.0;
      for (std::size_t i = 0; i < p.numel(); ++i) {
        if (mask[i] == 0.0) continue;
        const double r = p[i] - target[i];
        const double a = std::abs(r);
        if (a > best) {
          best = a;
          argmax = i;
        }
        switch (self.loss) {
          case LossKind::kL1: gp[i] += scale * sign(r); break;
          case LossKind::kL2: gp[i] += scale * 2.0 * r; break;
          case LossKind::kBerHu:
            if (a <= c) {
              gp[i] += scale * sign(r);
            } else {
              gp[i] += scale * r / c;
              dloss_dc += 0.5 - (r * r) / (2.0 * c * c);
            }
            break;
        }
      }
      // The berHu threshold c = 0.2 * max|r| depends on the largest residual.
      if (self.loss == LossKind::kBerHu && c > 0.0 && argmax < p.numel()) {
        gp[argmax] += scale * dloss_dc * 0.2 * sign(p[argmax] - target[argmax]);
      }
      break;
    }
  }
}

}  // namespace pnp

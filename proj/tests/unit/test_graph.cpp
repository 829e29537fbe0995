// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "pnp/error.hpp"
#include "pnp/graph.hpp"

namespace pnp {
namespace {

using testing::finite_difference_check;
using testing::GraphBuilder;
using testing::random_away_from_zero;
using testing::random_tensor;

constexpr std::size_t kCoords = 100;

// Projects any node onto a scalar with fixed random weights.
NodeId project(Graph& g, NodeId n, std::uint64_t seed) {
  Rng rng(seed);
  return g.weighted_sum(n, random_tensor(g.value(n).shape(), rng));
}

void expect_fd_pass(const GraphBuilder& build, std::vector<Tensor> leaves, std::uint64_t seed) {
  const auto report = finite_difference_check(build, std::move(leaves), kCoords, seed);
  EXPECT_GE(report.checked, kCoords);
  EXPECT_EQ(report.failed, 0u) << "worst relative error " << report.worst_rel;
}

TEST(GraphGradients, Conv2dStrideOnePadOne) {
  Rng rng(11);
  expect_fd_pass([](Graph& g, const std::vector<NodeId>& l) {
    return project(g, g.conv2d(l[0], l[1], 1, 1), 5);
  }, {random_tensor({2, 3, 7, 6}, rng), random_tensor({4, 3, 3, 3}, rng)}, 1);
}

TEST(GraphGradients, Conv2dStrideTwoNoPad) {
  Rng rng(12);
  expect_fd_pass([](Graph& g, const std::vector<NodeId>& l) {
    return project(g, g.conv2d(l[0], l[1], 2, 0), 6);
  }, {random_tensor({1, 2, 9, 8}, rng), random_tensor({3, 2, 3, 3}, rng)}, 2);
}

TEST(GraphGradients, Conv2dOneByOne) {
  Rng rng(13);
  expect_fd_pass([](Graph& g, const std::vector<NodeId>& l) {
    return project(g, g.conv2d(l[0], l[1]), 7);
  }, {random_tensor({1, 5, 6, 6}, rng), random_tensor({2, 5, 1, 1}, rng)}, 3);
}

TEST(GraphGradients, Bias) {
  Rng rng(14);
  expect_fd_pass([](Graph& g, const std::vector<NodeId>& l) {
    return project(g, g.bias(l[0], l[1]), 8);
  }, {random_tensor({2, 4, 5, 5}, rng), random_tensor({4}, rng)}, 4);
}

TEST(GraphGradients, Relu) {
  Rng rng(15);
  expect_fd_pass([](Graph& g, const std::vector<NodeId>& l) {
    return project(g, g.relu(l[0]), 9);
  }, {random_away_from_zero({1, 4, 6, 6}, rng)}, 5);
}

TEST(GraphGradients, Add) {
  Rng rng(16);
  expect_fd_pass([](Graph& g, const std::vector<NodeId>& l) {
    return project(g, g.add(l[0], l[1]), 10);
  }, {random_tensor({1, 3, 6, 6}, rng), random_tensor({1, 3, 6, 6}, rng)}, 6);
}

TEST(GraphGradients, Scale) {
  Rng rng(17);
  expect_fd_pass([](Graph& g, const std::vector<NodeId>& l) {
    return project(g, g.scale(l[0], -2.5), 11);
  }, {random_tensor({1, 3, 6, 6}, rng)}, 7);
}

TEST(GraphGradients, Concat) {
  Rng rng(18);
  expect_fd_pass([](Graph& g, const std::vector<NodeId>& l) {
    return project(g, g.concat(l[0], l[1]), 12);
  }, {random_tensor({2, 2, 5, 5}, rng), random_tensor({2, 3, 5, 5}, rng)}, 8);
}

TEST(GraphGradients, Upsample2x) {
  Rng rng(19);
  expect_fd_pass([](Graph& g, const std::vector<NodeId>& l) {
    return project(g, g.upsample2x(l[0]), 13);
  }, {random_tensor({1, 4, 5, 6}, rng)}, 9);
}

TEST(GraphGradients, Downsample2x) {
  Rng rng(20);
  expect_fd_pass([](Graph& g, const std::vector<NodeId>& l) {
    return project(g, g.downsample2x(l[0]), 14);
  }, {random_tensor({1, 3, 8, 10}, rng)}, 10);
}

TEST(GraphGradients, WeightedSum) {
  Rng rng(21);
  expect_fd_pass([](Graph& g, const std::vector<NodeId>& l) { return project(g, l[0], 15); },
                 {random_tensor({1, 2, 8, 8}, rng)}, 11);
}

// Predictions offset from the target by residuals bounded away from the
// loss kinks (0 for L1, c for berHu).
struct LossCase {
  Tensor pred;
  SparseDepth target;
};

LossCase loss_case(std::uint64_t seed) {
  Rng rng(seed);
  const Shape shape{1, 1, 12, 12};
  Tensor depth = random_tensor(shape, rng, 1.0, 5.0);
  Tensor mask(shape);
  Tensor pred(shape);
  for (std::size_t i = 0; i < depth.numel(); ++i) {
    mask[i] = rng.uniform() < 0.8 ? 1.0 : 0.0;
    // |r| in [0.05, 0.15] or [0.3, 1.0]; the max residual is pinned to 1
    // below, so c = 0.2 sits in the gap.
    const double m = rng.uniform() < 0.5 ? rng.uniform(0.05, 0.15) : rng.uniform(0.3, 0.95);
    pred[i] = depth[i] + (rng.uniform() < 0.5 ? -m : m);
  }
  mask[0] = 1.0;
  pred[0] = depth[0] + 1.0;
  return {pred, SparseDepth::from_mask(depth, mask)};
}

class LossGradient : public ::testing::TestWithParam<std::tuple<LossKind, Reduction>> {};

TEST_P(LossGradient, MatchesFiniteDifferences) {
  const auto [kind, reduction] = GetParam();
  const LossCase lc = loss_case(30);
  expect_fd_pass([&, kind = kind, reduction = reduction](Graph& g, const std::vector<NodeId>& l) {
    return g.masked_loss(l[0], lc.target, kind, reduction).node;
  }, {lc.pred}, 12);
}

INSTANTIATE_TEST_SUITE_P(AllKinds, LossGradient,
                         ::testing::Combine(::testing::Values(LossKind::kL1, LossKind::kL2,
                                                              LossKind::kBerHu),
                                            ::testing::Values(Reduction::kMean, Reduction::kSum)));

TEST(GraphGradients, FiveLayerConvNet) {
  Rng rng(40);
  std::vector<Tensor> leaves{random_tensor({1, 2, 9, 9}, rng)};
  const std::size_t widths[] = {2, 4, 4, 3, 3, 1};
  for (int layer = 0; layer < 5; ++layer) {
    leaves.push_back(random_tensor({widths[layer + 1], widths[layer], 3, 3}, rng, -0.5, 0.5));
  }
  const auto build = [](Graph& g, const std::vector<NodeId>& l) {
    NodeId h = l[0];
    for (int layer = 0; layer < 5; ++layer) {
      h = g.conv2d(h, l[layer + 1], 1, 1);
      if (layer < 4) h = g.relu(h);
    }
    return project(g, h, 41);
  };
  // Only the input is perturbed; 32 coordinates as in the module example.
  Graph g;
  std::vector<NodeId> ids;
  for (const Tensor& t : leaves) ids.push_back(g.leaf(t));
  const NodeId out = build(g, ids);
  const Tensor dz = g.backward_to(out, ids[0]);
  Rng pick(42);
  double worst = 0.0;
  for (int t = 0; t < 32; ++t) {
    const std::size_t i = pick.below(leaves[0].numel());
    std::vector<Tensor> plus = leaves, minus = leaves;
    plus[0][i] += 1e-5;
    minus[0][i] -= 1e-5;
    const double numeric = (testing::evaluate_scalar(build, plus) -
                            testing::evaluate_scalar(build, minus)) / 2e-5;
    const double scale = std::max({std::abs(numeric), std::abs(dz[i]), 1e-3});
    worst = std::max(worst, std::abs(numeric - dz[i]) / scale);
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(GraphForward, IdentityKernelReproducesInput) {
  Rng rng(1);
  const Tensor x = random_tensor({1, 1, 6, 5}, rng);
  Tensor w({1, 1, 3, 3});
  w.at(0, 0, 1, 1) = 1.0;
  Graph g;
  const NodeId y = g.conv2d(g.leaf(x), g.leaf(w), 1, 1);
  EXPECT_EQ(g.value(y), x);
}

TEST(GraphForward, ConvMatchesReferenceLoops) {
  Rng rng(2);
  const Tensor x = random_tensor({2, 3, 9, 7}, rng);
  const Tensor w = random_tensor({4, 3, 3, 3}, rng);
  for (std::size_t stride : {1, 2}) {
    for (std::size_t pad : {0, 1}) {
      Graph g;
      const Tensor& y = g.value(g.conv2d(g.leaf(x), g.leaf(w), stride, pad));
      const Tensor ref = testing::reference_conv2d(x, w, stride, pad);
      ASSERT_EQ(y.shape(), ref.shape());
      for (std::size_t i = 0; i < y.numel(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-12);
    }
  }
}

TEST(GraphForward, OutputExtentFormula) {
  Graph g;
  const NodeId x = g.leaf(Tensor({1, 1, 11, 10}));
  const Tensor& y = g.value(g.conv2d(x, g.leaf(Tensor({1, 1, 3, 3})), 2, 1));
  EXPECT_EQ(y.height(), (11 + 2 - 3) / 2 + 1);
  EXPECT_EQ(y.width(), (10 + 2 - 3) / 2 + 1);
}

TEST(GraphForward, StackedPaddedConvsPreserveSize) {
  Graph g;
  const NodeId x = g.leaf(Tensor({1, 1, 10, 10}, 1.0));
  const NodeId w = g.leaf(Tensor({1, 1, 3, 3}, 0.1));
  const NodeId y = g.conv2d(g.conv2d(x, w, 1, 1), w, 1, 1);
  EXPECT_EQ(g.value(y).shape(), (Shape{1, 1, 10, 10}));
}

TEST(GraphForward, Relu) {
  Graph g;
  const NodeId y = g.relu(g.leaf(Tensor({1, 1, 1, 3}, {-1.0, 0.0, 2.0})));
  EXPECT_EQ(g.value(y).values(), (std::vector<double>{0.0, 0.0, 2.0}));
}

TEST(GraphForward, ShapeMismatchNamesBothShapes) {
  Graph g;
  const NodeId a = g.leaf(Tensor({1, 2, 3, 3}));
  const NodeId b = g.leaf(Tensor({1, 2, 4, 3}));
  try {
    g.add(a, b);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("1x2x3x3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("1x2x4x3"), std::string::npos) << msg;
  }
}

TEST(GraphForward, NonFiniteValueIsNumericError) {
  Graph g;
  const NodeId x = g.leaf(Tensor({1, 1, 2, 2}, 1e308));
  EXPECT_THROW(g.scale(x, 10.0), NumericError);
}

TEST(GraphBackward, SumOfSquares) {
  Graph g;
  const NodeId z = g.leaf(Tensor({1, 1, 1, 2}, {1.0, 2.0}), true);
  SparseDepth zero{Tensor({1, 1, 1, 2}), Tensor({1, 1, 1, 2}, 1.0)};
  const NodeId loss = g.masked_loss(z, zero, LossKind::kL2, Reduction::kSum).node;
  const Tensor dz = g.backward_to(loss, z);
  EXPECT_EQ(dz.values(), (std::vector<double>{2.0, 4.0}));
}

TEST(GraphBackward, ReluBlocksNegativeInput) {
  Graph g;
  const NodeId z = g.leaf(Tensor({1, 1, 1, 2}, {-1.0, 3.0}), true);
  const NodeId loss = g.weighted_sum(g.relu(z), Tensor({1, 1, 1, 2}, 1.0));
  const Tensor dz = g.backward_to(loss, z);
  EXPECT_EQ(dz.values(), (std::vector<double>{0.0, 1.0}));
}

TEST(GraphBackward, TruncationLeavesAncestorsAndParamsUntouched) {
  Rng rng(3);
  Graph g;
  const NodeId x = g.leaf(random_tensor({1, 2, 6, 6}, rng));
  const NodeId w1 = g.leaf(random_tensor({3, 2, 3, 3}, rng), true);
  const NodeId w2 = g.leaf(random_tensor({1, 3, 3, 3}, rng), true);
  const NodeId b2 = g.leaf(random_tensor({1}, rng), true);
  const NodeId z = g.relu(g.conv2d(x, w1, 1, 1));
  const NodeId pred = g.bias(g.conv2d(z, w2, 1, 1), b2);
  const NodeId loss = project(g, pred, 4);
  const Tensor dz = g.backward_to(loss, z);
  EXPECT_GT(dz.max_abs(), 0.0);
  for (NodeId n : {x, w1, w2, b2}) {
    const Tensor* gr = g.grad(n);
    EXPECT_TRUE(gr == nullptr || gr->max_abs() == 0.0) << "node " << n.index;
  }
  // The ancestor node feeding z (pre-relu conv) gets nothing either.
  const Tensor* pre = g.grad(NodeId{z.index - 1});
  EXPECT_TRUE(pre == nullptr || pre->max_abs() == 0.0);
}

TEST(GraphBackward, StopAtMustBeAncestor) {
  Graph g;
  const NodeId a = g.leaf(Tensor({1, 1, 2, 2}, 1.0), true);
  const NodeId b = g.leaf(Tensor({1, 1, 2, 2}, 1.0), true);
  const NodeId loss = g.weighted_sum(a, Tensor({1, 1, 2, 2}, 1.0));
  EXPECT_THROW(g.backward_to(loss, b), GraphError);
}

TEST(GraphBackward, NonScalarLossIsContractError) {
  Graph g;
  const NodeId a = g.leaf(Tensor({1, 1, 2, 2}, 1.0), true);
  const NodeId y = g.scale(a, 2.0);
  EXPECT_THROW(g.backward_to(y, a), ContractError);
  EXPECT_THROW(g.backward(y), ContractError);
}

TEST(GraphBackward, LinearInLoss) {
  Rng rng(5);
  const Tensor xv = random_tensor({1, 2, 7, 7}, rng);
  const Tensor wv = random_tensor({1, 2, 3, 3}, rng);
  const LossCase lc = loss_case(6);
  const double a = 0.7, b = -1.3;
  auto grad_of = [&](double ca, double cb) {
    Graph g;
    const NodeId x = g.leaf(xv, true);
    const NodeId pred = g.conv2d(g.relu(x), g.leaf(wv), 1, 1);
    Rng r(7);
    const NodeId l1 = g.weighted_sum(pred, random_tensor({1, 1, 7, 7}, r));
    const NodeId l2 = g.weighted_sum(g.relu(pred), random_tensor({1, 1, 7, 7}, r));
    const NodeId total = g.add(g.scale(l1, ca), g.scale(l2, cb));
    return g.backward_to(total, x);
  };
  const Tensor g1 = grad_of(1.0, 0.0);
  const Tensor g2 = grad_of(0.0, 1.0);
  const Tensor gc = grad_of(a, b);
  for (std::size_t i = 0; i < gc.numel(); ++i) {
    EXPECT_NEAR(gc[i], a * g1[i] + b * g2[i], 1e-12);
  }
}

TEST(GraphBackward, GradientsAccumulateOverFanOut) {
  Graph g;
  const NodeId z = g.leaf(Tensor({1, 1, 1, 2}, {1.0, -2.0}), true);
  const NodeId y = g.add(z, z);
  const NodeId loss = g.weighted_sum(y, Tensor({1, 1, 1, 2}, {3.0, 5.0}));
  EXPECT_EQ(g.backward_to(loss, z).values(), (std::vector<double>{6.0, 10.0}));
  // A second backward clears the buffers first.
  EXPECT_EQ(g.backward_to(loss, z).values(), (std::vector<double>{6.0, 10.0}));
}

TEST(GraphBackward, Deterministic) {
  auto run = [] {
    Rng rng(9);
    Graph g;
    const NodeId x = g.leaf(random_tensor({1, 3, 8, 8}, rng), true);
    const NodeId w = g.leaf(random_tensor({2, 3, 3, 3}, rng), true);
    const NodeId y = g.downsample2x(g.relu(g.conv2d(x, w, 1, 1)));
    const NodeId loss = project(g, g.upsample2x(y), 10);
    g.backward(loss);
    return std::make_pair(g.value(loss), *g.grad(x));
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(MaskedLoss, L1Example) {
  Graph g;
  const NodeId p = g.leaf(Tensor({1, 1, 1, 2}, {2.0, 2.0}));
  const SparseDepth t{Tensor({1, 1, 1, 2}, {1.0, 2.0}), Tensor({1, 1, 1, 2}, 1.0)};
  EXPECT_DOUBLE_EQ(g.value(g.masked_loss(p, t, LossKind::kL1).node)[0], 0.5);
}

TEST(MaskedLoss, L2Example) {
  Graph g;
  const NodeId p = g.leaf(Tensor({1, 1, 1, 1}, 3.0));
  const SparseDepth t{Tensor({1, 1, 1, 1}, 1.0), Tensor({1, 1, 1, 1}, 1.0)};
  EXPECT_DOUBLE_EQ(g.value(g.masked_loss(p, t, LossKind::kL2).node)[0], 4.0);
}

TEST(MaskedLoss, EmptyMaskIsZeroWithFlag) {
  for (LossKind kind : {LossKind::kL1, LossKind::kL2, LossKind::kBerHu}) {
    Graph g;
    Rng rng(1);
    const NodeId p = g.leaf(random_tensor({1, 1, 4, 4}, rng), true);
    const SparseDepth t{Tensor({1, 1, 4, 4}), Tensor({1, 1, 4, 4})};
    const LossNode l = g.masked_loss(p, t, kind);
    EXPECT_TRUE(l.no_observation);
    EXPECT_EQ(g.value(l.node)[0], 0.0);
    EXPECT_EQ(g.backward_to(l.node, p).max_abs(), 0.0);
  }
}

TEST(MaskedLoss, BerHuPiecewise) {
  // Residuals 1 and 0.1 with c = 0.2: 1 -> (1 + 0.04) / 0.4, 0.1 -> 0.1.
  Graph g;
  const NodeId p = g.leaf(Tensor({1, 1, 1, 2}, {2.0, 1.1}));
  const SparseDepth t{Tensor({1, 1, 1, 2}, 1.0), Tensor({1, 1, 1, 2}, 1.0)};
  const double expected = ((1.0 + 0.04) / 0.4 + 0.1) / 2.0;
  EXPECT_NEAR(g.value(g.masked_loss(p, t, LossKind::kBerHu).node)[0], expected, 1e-15);
}

TEST(MaskedLoss, L1SubgradientAtZeroIsZero) {
  Graph g;
  const NodeId p = g.leaf(Tensor({1, 1, 1, 2}, {1.0, 3.0}), true);
  const SparseDepth t{Tensor({1, 1, 1, 2}, {1.0, 1.0}), Tensor({1, 1, 1, 2}, 1.0)};
  const LossNode l = g.masked_loss(p, t, LossKind::kL1, Reduction::kSum);
  EXPECT_EQ(g.backward_to(l.node, p).values(), (std::vector<double>{0.0, 1.0}));
}

TEST(MaskedLoss, ParseNames) {
  EXPECT_EQ(parse_loss("l1"), LossKind::kL1);
  EXPECT_EQ(parse_loss("l2"), LossKind::kL2);
  EXPECT_EQ(parse_loss("berhu"), LossKind::kBerHu);
  EXPECT_THROW(parse_loss("huber"), ConfigError);
}

}  // namespace
}  // namespace pnp

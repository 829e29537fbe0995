// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <string>

#include "oracles.hpp"
#include "pnp/checkpoint.hpp"
#include "pnp/error.hpp"
#include "pnp/model.hpp"
#include "pnp/scene.hpp"
#include "pnp/sparsity.hpp"

namespace pnp {
namespace {

const Arch kArchs[] = {Arch::kPlainCnn, Arch::kEncDec, Arch::kCoarseFine};
const InputMode kModes[] = {InputMode::kRgb, InputMode::kSd, InputMode::kRgbSd};

Tensor input_for(InputMode mode, std::uint64_t seed) {
  const Scene s = generate_scene(seed);
  return make_input(mode, s.rgb, sample_uniform(s.depth, 60, seed));
}

TEST(Model, OutputMatchesInputSpatialShape) {
  for (Arch arch : kArchs) {
    for (InputMode mode : kModes) {
      const Model m = build_model(arch, mode, 2);
      const Tensor x = input_for(mode, 1);
      EXPECT_EQ(x.channels(), input_channels(mode));
      EXPECT_EQ(m.run(x).shape(), (Shape{1, 1, 48, 64})) << arch_name(arch);
    }
  }
}

TEST(Model, InputChannelLayout) {
  const Scene s = generate_scene(1);
  const SparseDepth sd = sample_uniform(s.depth, 30, 1);
  const Tensor x = make_input(InputMode::kRgbSd, s.rgb, sd);
  ASSERT_EQ(x.channels(), 5u);
  for (std::size_t i = 0; i < s.depth.numel(); ++i) {
    EXPECT_EQ(x[i], s.rgb[i]);
    EXPECT_EQ(x[3 * s.depth.numel() + i], kSparseInputScale * sd.values[i]);
    EXPECT_EQ(x[4 * s.depth.numel() + i], sd.mask[i]);
  }
}

TEST(Model, EncDecHasQuarterResolutionBottleneck) {
  const Model m = build_model(Arch::kEncDec, InputMode::kRgb);
  const auto taps = m.taps();
  ASSERT_NE(std::find(taps.begin(), taps.end(), "bottleneck"), taps.end());
  const Tensor z = split(m, "bottleneck").front(input_for(InputMode::kRgb, 3));
  EXPECT_EQ(z.height(), 48u / 4);
  EXPECT_EQ(z.width(), 64u / 4);
}

TEST(Model, PlainCnnTaps) {
  const Model m = build_model(Arch::kPlainCnn, InputMode::kSd);
  EXPECT_EQ(m.taps(), (std::vector<std::string>{"conv1", "conv2", "conv3", "conv4"}));
  const Tensor x = input_for(InputMode::kSd, 4);
  // First boundary: z carries the first layer's channels.
  EXPECT_EQ(split(m, "conv1").front(x).channels(), m.layers().front().out_channels);
  // Last boundary: the rear segment is the output convolution alone.
  const Cascade last = split(m, "conv4");
  EXPECT_EQ(last.tap_index() + 2, m.layers().size());
}

TEST(Model, CascadeIdentityAtEveryTap) {
  for (Arch arch : kArchs) {
    for (InputMode mode : kModes) {
      const Model m = build_model(arch, mode, 5);
      for (std::uint64_t seed = 0; seed < 2; ++seed) {
        const Tensor x = input_for(mode, 10 + seed);
        const Tensor y = m.run(x);
        for (const std::string& tap : m.taps()) {
          const Cascade c = split(m, tap);
          EXPECT_EQ(c.rear(c.front(x), x), y) << arch_name(arch) << " tap " << tap;
        }
      }
    }
  }
}

TEST(Model, UnknownTapListsValidTaps) {
  const Model m = build_model(Arch::kPlainCnn, InputMode::kRgb);
  try {
    split(m, "conv9");
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("conv9"), std::string::npos);
    for (const char* t : {"conv1", "conv2", "conv3", "conv4"}) {
      EXPECT_NE(msg.find(t), std::string::npos) << msg;
    }
  }
  EXPECT_THROW(split(m, "output"), ConfigError);
}

TEST(Model, ParseNames) {
  EXPECT_EQ(parse_arch("encdec"), Arch::kEncDec);
  EXPECT_EQ(parse_input_mode("rgb+sd"), InputMode::kRgbSd);
  EXPECT_THROW(parse_arch("resnet"), ConfigError);
  EXPECT_THROW(parse_input_mode("depth"), ConfigError);
}

TEST(Model, SeededInitialisationIsDeterministic) {
  const Model a = build_model(Arch::kEncDec, InputMode::kRgbSd, 9);
  const Model b = build_model(Arch::kEncDec, InputMode::kRgbSd, 9);
  EXPECT_EQ(serialize_model(a), serialize_model(b));
  EXPECT_NE(serialize_model(a), serialize_model(build_model(Arch::kEncDec, InputMode::kRgbSd, 10)));
}

TEST(Model, StackBatchRejectsMismatch) {
  const Tensor a = Tensor::image(1, 4, 4);
  const Tensor b = Tensor::image(1, 4, 5);
  const Tensor both[] = {a, b};
  EXPECT_THROW(stack_batch(both), ConfigError);
  const Tensor same[] = {a, a, a};
  EXPECT_EQ(stack_batch(same).shape(), (Shape{3, 1, 4, 4}));
}

class Training : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { scenes_ = new std::vector<Scene>(generate_scenes(21, 24)); }
  static void TearDownTestSuite() { delete scenes_; }
  static std::vector<Scene>* scenes_;
};
std::vector<Scene>* Training::scenes_ = nullptr;

TEST_F(Training, ZeroEpochsKeepsInitialisation) {
  const Model init = build_model(Arch::kPlainCnn, InputMode::kSd, 3);
  TrainConfig cfg;
  cfg.epochs = 0;
  const TrainResult r = train(init, *scenes_, cfg);
  EXPECT_EQ(serialize_model(r.model), serialize_model(init));
  EXPECT_TRUE(r.epoch_loss.empty());
  EXPECT_FALSE(r.diverged);
}

TEST_F(Training, LossDecreasesAndRunIsDeterministic) {
  TrainConfig cfg;
  cfg.epochs = 4;
  const TrainResult a = train(build_model(Arch::kPlainCnn, InputMode::kSd, 3), *scenes_, cfg);
  const TrainResult b = train(build_model(Arch::kPlainCnn, InputMode::kSd, 3), *scenes_, cfg);
  ASSERT_EQ(a.epoch_loss.size(), 4u);
  EXPECT_LT(a.epoch_loss.back(), a.epoch_loss.front());
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  EXPECT_EQ(serialize_model(a.model), serialize_model(b.model));
}

TEST_F(Training, RgbEncDecTrains) {
  TrainConfig cfg;
  cfg.epochs = 3;
  const TrainResult r = train(build_model(Arch::kEncDec, InputMode::kRgb, 4), *scenes_, cfg);
  EXPECT_FALSE(r.diverged);
  EXPECT_LT(r.epoch_loss.back(), r.epoch_loss.front());
}

TEST_F(Training, DivergenceReturnsLastFiniteModel) {
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.learning_rate = 1e200;
  cfg.loss = LossKind::kL2;
  const TrainResult r = train(build_model(Arch::kPlainCnn, InputMode::kSd, 3), *scenes_, cfg);
  EXPECT_TRUE(r.diverged);
  EXPECT_FALSE(r.message.empty());
  for (const Tensor& p : r.model.params()) EXPECT_TRUE(p.all_finite());
}

TEST_F(Training, InvalidConfigRejected) {
  TrainConfig cfg;
  cfg.batch_size = 0;
  EXPECT_THROW(train(build_model(Arch::kPlainCnn, InputMode::kSd), *scenes_, cfg), ConfigError);
  cfg = {};
  EXPECT_THROW(train(build_model(Arch::kPlainCnn, InputMode::kSd), {}, cfg), ConfigError);
}

}  // namespace
}  // namespace pnp

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "surgdepth/checkpoint.hpp"
#include "surgdepth/loss.hpp"
#include "surgdepth/metrics.hpp"
#include "surgdepth/optim.hpp"
#include "surgdepth/train.hpp"

namespace surgdepth {
namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.image_h = c.image_w = 32;
  c.embed_dim = 16;
  c.depth_blocks = 1;
  c.heads = 2;
  c.fusion_k = 2;
  c.decoder_blocks = 1;
  c.epochs = 1;
  c.augment = false;
  return c;
}

Dataset tiny_dataset(int n = 4) {
  SceneSpec spec;
  Dataset ds;
  ds.num_classes = 4;
  ds.train = generate_dataset(spec, n, 32, 32);
  return ds;
}

LabelMask mask(int h, int w, std::vector<std::uint8_t> v) {
  LabelMask m(h, w);
  m.values = std::move(v);
  return m;
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("surgdepth_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST(AdamW, FirstStepMovesByLr) {
  Tensor p({1}, 1.0f);
  p.set_requires_grad(true);
  AdamW opt({{"p", p}}, AdamWOptions{.lr = 0.1, .weight_decay = 0.0});
  p.grad_slot()[0] = 1.0f;
  opt.step();
  EXPECT_NEAR(p.item(), 0.9, 1e-6);
  EXPECT_EQ(opt.state().step, 1);
}

TEST(AdamW, DecayOnlyShrinksGeometrically) {
  Tensor p({1}, 1.0f);
  p.set_requires_grad(true);
  AdamW opt({{"p", p}}, AdamWOptions{.lr = 0.1, .weight_decay = 0.1});
  for (int i = 0; i < 3; ++i) {
    opt.zero_grad();
    opt.step();
  }
  EXPECT_NEAR(p.item(), std::pow(0.99, 3), 1e-6);
}

TEST(AdamW, ZeroGradZeroDecayIsNoop) {
  Tensor p({2}, std::vector<Scalar>{0.5f, -2.0f});
  p.set_requires_grad(true);
  AdamW opt({{"p", p}}, AdamWOptions{.lr = 0.1, .weight_decay = 0.0});
  opt.zero_grad();
  opt.step();
  EXPECT_EQ(p.data()[0], 0.5f);
  EXPECT_EQ(p.data()[1], -2.0f);
}

TEST(Loss, UniformLogitsGiveLogK) {
  const Tensor logits({4, 2, 2}, 0.0f);
  EXPECT_NEAR(cross_entropy_loss(logits, LabelMask(2, 2, 1)).item(), std::log(4.0), 1e-6);
}

TEST(Loss, IgnoredPixelsExcluded) {
  Tensor logits({2, 1, 2}, std::vector<Scalar>{5, 0, 0, 0});
  const LabelMask m = mask(1, 2, {0, kIgnoreLabel});
  EXPECT_NEAR(cross_entropy_loss(logits, m).item(), std::log(1 + std::exp(-5.0)), 1e-6);
  EXPECT_THROW(cross_entropy_loss(logits, mask(1, 2, {0, 7})), DataError);
}

TEST(Metrics, IdenticalMasksScoreOne) {
  const LabelMask m = mask(2, 2, {0, 1, 1, 2});
  EXPECT_DOUBLE_EQ(mean_iou(m, m, 4).mean_iou, 1.0);
  EXPECT_FALSE(mean_iou(m, m, 4).per_class_iou[3].has_value());
}

TEST(Metrics, DisjointMasksScoreZero) {
  const MetricsReport r = mean_iou(LabelMask(2, 2, 0), LabelMask(2, 2, 1), 2);
  EXPECT_DOUBLE_EQ(*r.per_class_iou[0], 0.0);
  EXPECT_DOUBLE_EQ(*r.per_class_iou[1], 0.0);
}

TEST(Metrics, SymmetricPerClass) {
  const LabelMask a = mask(2, 3, {0, 0, 1, 1, 2, 2}), b = mask(2, 3, {0, 1, 1, 2, 2, 0});
  const MetricsReport ab = mean_iou(a, b, 3), ba = mean_iou(b, a, 3);
  for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(*ab.per_class_iou[c], *ba.per_class_iou[c]);
}

TEST(Metrics, DatasetUsesGlobalCounts) {
  // Per-image averaging would give (1 + 0.5) / 2 for class 0; pooled counts give 2/3.
  ConfusionMatrix cm(2);
  cm.add(mask(1, 1, {0}), mask(1, 1, {0}));
  cm.add(mask(1, 2, {0, 0}), mask(1, 2, {0, 1}));
  EXPECT_NEAR(*cm.iou(0), 2.0 / 3.0, 1e-12);
}

TEST(Model, SameSeedSameParameters) {
  EXPECT_EQ(parameter_checksum(build_model(tiny_config())), parameter_checksum(build_model(tiny_config())));
  ModelConfig other = tiny_config();
  other.seed = 1;
  EXPECT_NE(parameter_checksum(build_model(tiny_config())), parameter_checksum(build_model(other)));
}

TEST(Model, DepthInputWidensDecoderOnly) {
  ModelConfig c = tiny_config();
  const ParamCount a = param_count(build_model(c));
  c.decoder_input = DecoderInput::rgb_and_depth;
  const ParamCount b = param_count(build_model(c));
  EXPECT_GT(b.total, a.total);
  for (std::size_t i = 0; i + 1 < a.modules.size(); ++i) EXPECT_EQ(a.modules[i], b.modules[i]);
}

TEST(Train, ZeroLearningRateLeavesParameters) {
  ModelConfig c = tiny_config();
  c.lr = 0.0;
  c.weight_decay = 0.0;
  Model m = build_model(c);
  const auto before = parameter_checksum(m);
  TrainOptions o;
  o.skip_validation = true;
  EXPECT_EQ(train(m, tiny_dataset(), o).steps, 2);
  EXPECT_EQ(parameter_checksum(m), before);
}

TEST(Train, LossFallsOverFirstTwentySteps) {
  // Overfit regime; compare consecutive 5-step windows.
  ModelConfig c = toy_config();
  c.lr = 1e-3;
  c.batch_size = 8;
  c.epochs = 20;
  c.augment = false;
  SceneSpec spec;
  spec.depth_coupling = 0.5;
  Dataset ds;
  ds.num_classes = 4;
  ds.train = generate_dataset(spec, 8, 64, 64);
  Model m = build_model(c);
  TrainOptions o;
  o.skip_validation = true;
  const TrainResult r = train(m, ds, o);
  ASSERT_EQ(r.loss_history.size(), 20u);
  std::vector<double> windows;
  for (int w = 0; w < 4; ++w) {
    double s = 0;
    for (int i = 0; i < 5; ++i) s += r.loss_history[w * 5 + i].loss;
    windows.push_back(s / 5);
  }
  for (int w = 1; w < 4; ++w) EXPECT_LT(windows[w], windows[w - 1]) << "window " << w;
}

TEST(Train, NonFiniteParameterAborts) {
  Model m = build_model(tiny_config());
  m.decoder.head.bias.mutable_data()[0] = std::numeric_limits<Scalar>::quiet_NaN();
  TrainOptions o;
  o.skip_validation = true;
  try {
    train(m, tiny_dataset(), o);
    FAIL() << "expected TrainingAborted";
  } catch (const TrainingAborted& e) {
    EXPECT_EQ(e.step(), 1);
    EXPECT_NE(std::string(e.what()).find("lr"), std::string::npos);
  }
}

TEST(Train, MaxStepsCapsTraining) {
  ModelConfig c = tiny_config();
  c.epochs = 10;
  c.max_steps = 3;
  Model m = build_model(c);
  TrainOptions o;
  o.skip_validation = true;
  EXPECT_EQ(train(m, tiny_dataset(), o).steps, 3);
}

TEST_F(TempDir, MetricsLogAndBestCheckpoint) {
  ModelConfig c = tiny_config();
  c.epochs = 2;
  Model m = build_model(c);
  std::ostringstream log;
  TrainOptions o;
  o.metrics_log = &log;
  o.best_checkpoint = dir_ / "best.ckpt";
  const TrainResult r = train(m, tiny_dataset(), o);
  EXPECT_EQ(r.epochs.size(), 2u);
  EXPECT_TRUE(std::filesystem::exists(o.best_checkpoint));
  const std::string text = log.str();
  EXPECT_NE(text.find("{\"loss\":"), std::string::npos);
  EXPECT_NE(text.find("\"per_class\":["), std::string::npos);
}

TEST_F(TempDir, ZeroEpochsWritesInitialCheckpoint) {
  ModelConfig c = tiny_config();
  c.epochs = 0;
  Model m = build_model(c);
  TrainOptions o;
  o.best_checkpoint = dir_ / "best.ckpt";
  EXPECT_EQ(train(m, tiny_dataset(), o).steps, 0);
  EXPECT_EQ(parameter_checksum(load_model(o.best_checkpoint)), parameter_checksum(m));
}

TEST_F(TempDir, CheckpointRoundTripAndMismatch) {
  const Model m = build_model(tiny_config());
  save_checkpoint(dir_ / "m.ckpt", m);
  const CheckpointManifest man = read_checkpoint_manifest(dir_ / "m.ckpt");
  EXPECT_EQ(man.params.size(), m.parameters().size());
  EXPECT_EQ(parameter_checksum(load_model(dir_ / "m.ckpt")), parameter_checksum(m));

  ModelConfig wider = tiny_config();
  wider.embed_dim = 32;
  Model w = build_model(wider);
  EXPECT_THROW(load_checkpoint(dir_ / "m.ckpt", w), CheckpointMismatch);

  std::ofstream(dir_ / "junk.ckpt") << "NOTSRGD\n";
  EXPECT_THROW(load_model(dir_ / "junk.ckpt"), FormatError);
}

TEST(Ablation, DecoderDepthRowsAndReferenceColumn) {
  ModelConfig c = tiny_config();
  c.max_steps = 1;
  const AblationTable t = ablate_decoder_depth(c, tiny_dataset(2));
  ASSERT_EQ(t.rows.size(), 4u);
  std::ostringstream csv;
  write_ablation_csv(csv, t);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')),
            "blocks,decoder_input,miou,params,\"paper (SAR-RARP50, not reproduced)\"");
  const char* ref[] = {"0.843", "0.851", "0.862", "0.856"};
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(t.rows[i].reference_miou, ref[i]);
    EXPECT_GE(t.rows[i].miou, 0.0);
    EXPECT_LE(t.rows[i].miou, 1.0);
  }
  for (int i = 1; i < 4; ++i) EXPECT_GT(t.rows[i].params, t.rows[i - 1].params);
}

TEST(Ablation, DecoderInputOrdersParams) {
  ModelConfig c = tiny_config();
  c.max_steps = 1;
  const AblationTable t = ablate_decoder_input(c, tiny_dataset(2));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_LT(t.rows[0].params, t.rows[1].params);
  EXPECT_EQ(t.rows[0].reference_miou, "0.862");
  EXPECT_EQ(t.rows[1].reference_miou, "0.823");
}

}  // namespace
}  // namespace surgdepth

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "surgdepth/autograd.hpp"
#include "surgdepth/decoder.hpp"
#include "surgdepth/encoder.hpp"
#include "surgdepth/errors.hpp"
#include "surgdepth/fusion.hpp"
#include "surgdepth/ops.hpp"

namespace surgdepth {
namespace {

Tensor randn(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.mutable_data()) v = static_cast<Scalar>(rng.normal());
  return t;
}

TEST(Fusion, ShapesAndAttention) {
  Rng rng(1);
  const FusionParams p = FusionParams::make(8, 16, 2, rng);
  const TokenGrid a(4, 3, randn({12, 8}, rng)), d(4, 3, randn({12, 8}, rng));
  EXPECT_EQ(make_query(a, d, p).shape(), (Shape{4, 16}));
  const FusionOutput f = fuse(a, d, p);
  EXPECT_EQ(f.rgb.tokens.shape(), (Shape{12, 8}));
  EXPECT_EQ(f.depth.tokens.shape(), (Shape{12, 8}));
  EXPECT_EQ(f.attention.shape(), (Shape{4, 12}));
}

TEST(Fusion, RejectsOversizedPoolAndMismatchedGrids) {
  Rng rng(2);
  const FusionParams p = FusionParams::make(4, 8, 3, rng);
  const TokenGrid small(2, 2, randn({4, 4}, rng));
  EXPECT_THROW(fuse(small, small, p), DimensionError);
  const FusionParams q = FusionParams::make(4, 8, 1, rng);
  EXPECT_THROW(fuse(small, TokenGrid(1, 4, randn({4, 4}, rng)), q), DimensionError);
  EXPECT_THROW(FusionParams::make(4, 8, 0, rng), ConfigError);
}

TEST(Fusion, SingleQueryMatchesAttentionOracle) {
  Rng rng(3);
  FusionParams p = FusionParams::make(4, 8, 1, rng, 0.5);
  const TokenGrid a(2, 3, randn({6, 4}, rng)), d(2, 3, randn({6, 4}, rng));
  const Tensor q = make_query(a, d, p);
  const Tensor k = p.fc_k(a.tokens), v = p.fc_v(a.tokens);
  const Tensor ref = attention_oracle(q, k, v, 1.0 / std::sqrt(8.0));
  const Tensor ctx = ops::matmul(fuse(a, d, p).attention, v);
  for (std::int64_t i = 0; i < ref.numel(); ++i) EXPECT_NEAR(ctx.data()[i], ref.data()[i], 1e-5);
}

TEST(Fusion, GradientReachesBothInputs) {
  Rng rng(4);
  FusionParams p = FusionParams::make(4, 8, 2, rng, 0.5);
  for (auto* l : {&p.fc_out_rgb, &p.fc_out_depth})
    for (auto& v : l->weight.mutable_data()) v = static_cast<Scalar>(0.3 * rng.normal());
  Tensor a = randn({9, 4}, rng), d = randn({9, 4}, rng);
  a.set_requires_grad(true);
  d.set_requires_grad(true);
  const FusionOutput f = fuse(TokenGrid(3, 3, a), TokenGrid(3, 3, d), p);
  backward(ops::sum(ops::mul(ops::add(f.rgb.tokens, f.depth.tokens), randn({9, 4}, rng))));
  double ga = 0, gd = 0;
  for (Scalar g : a.grad()) ga += std::abs(g);
  for (Scalar g : d.grad()) gd += std::abs(g);
  EXPECT_GT(ga, 0);
  EXPECT_GT(gd, 0);
}

TEST(Encoder, PatchEmbedTiles) {
  Rng rng(5);
  const PatchEmbed pe = PatchEmbed::make(3, 16, 4, rng);
  const TokenGrid g = patch_embed(randn({3, 8, 12}, rng), pe);
  EXPECT_EQ(g.h, 2);
  EXPECT_EQ(g.w, 3);
  EXPECT_EQ(g.tokens.shape(), (Shape{6, 16}));
  EXPECT_THROW(patch_embed(randn({3, 9, 12}, rng), pe), DimensionError);
}

TEST(Encoder, HeadsMustDivideWidth) {
  Rng rng(6);
  EXPECT_THROW(MultiHeadAttention::make(10, 4, rng), ConfigError);
}

TEST(Encoder, MhsaPermutationEquivariant) {
  Rng rng(7);
  const MultiHeadAttention a = MultiHeadAttention::make(8, 2, rng, 0.3);
  const Tensor x = randn({3, 8}, rng);
  const Tensor swapped = ops::concat({ops::slice(x, 0, 2, 1), ops::slice(x, 0, 0, 2)}, 0);
  const Tensor y = mhsa(x, a), ys = mhsa(swapped, a);
  for (int c = 0; c < 8; ++c) {
    EXPECT_NEAR(ys.at({0, c}), y.at({2, c}), 1e-5);
    EXPECT_NEAR(ys.at({1, c}), y.at({0, c}), 1e-5);
  }
}

TEST(Encoder, EncodeKeepsStreamShapes) {
  Rng rng(8);
  const EncoderParams p = EncoderParams::make(8, 2, 2, 6, rng);
  const EncodedStreams e = encode(TokenGrid(2, 3, randn({6, 8}, rng)), TokenGrid(2, 3, randn({6, 8}, rng)), p);
  EXPECT_EQ(e.rgb.shape(), (Shape{6, 8}));
  EXPECT_EQ(e.depth.shape(), (Shape{6, 8}));
  EXPECT_THROW(encode(TokenGrid(2, 2, randn({4, 8}, rng)), TokenGrid(2, 2, randn({4, 8}, rng)), p), DimensionError);
}

TEST(Decoder, PixelShuffleLayout) {
  // One token, patch 8: 4 sub-tiles of in/8 = 2 channels each.
  Tensor tokens({1, 8});
  for (int i = 0; i < 8; ++i) tokens.mutable_data()[i] = static_cast<Scalar>(i);
  const Tensor g = tokens_to_grid(tokens, 1, 1, 8);
  EXPECT_EQ(g.shape(), (Shape{2, 2, 2}));
  for (int dy = 0; dy < 2; ++dy)
    for (int dx = 0; dx < 2; ++dx)
      for (int c = 0; c < 2; ++c) EXPECT_EQ(g.at({c, dy, dx}), static_cast<Scalar>((dy * 2 + dx) * 2 + c));
  EXPECT_EQ(grid_to_tokens(g, 8).shape(), (Shape{1, 8}));
}

TEST(Decoder, ClosedFormParameterCount) {
  Rng rng(9);
  const DecoderParams p = DecoderParams::make(64, 8, 2, 4, rng);
  ParamList l;
  p.collect("decoder", l);
  const std::int64_t d = 8, expand = 64 * (4 * d) + 4 * d;
  const std::int64_t block = d * 49 + d + 2 * d + (d * 4 * d + 4 * d) + (4 * d * d + d);
  EXPECT_EQ(count_scalars(l), expand + 2 * block + d * 4 + 4);
  EXPECT_EQ(p.grid_channels(), 8);
}

TEST(Decoder, DecodeOutputShape) {
  Rng rng(10);
  const DecoderParams p = DecoderParams::make(32, 8, 1, 3, rng);
  EXPECT_EQ(decode(randn({6, 32}, rng), 2, 3, 16, 24, p).shape(), (Shape{3, 16, 24}));
  EXPECT_THROW(DecoderParams::make(30, 8, 1, 3, rng), ConfigError);
  EXPECT_THROW(DecoderParams::make(32, 6, 1, 3, rng), ConfigError);
}

TEST(Decoder, ConvNeXtZeroPw2IsIdentity) {
  Rng rng(11);
  ConvNeXtBlock b = ConvNeXtBlock::make(8, rng);
  for (auto& v : b.pw2.weight.mutable_data()) v = 0;
  for (auto& v : b.pw2.bias.mutable_data()) v = 0;
  const Tensor x = randn({8, 5, 5}, rng);
  const Tensor y = convnext_block(x, b);
  for (std::int64_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y.data()[i], x.data()[i]);
}

}  // namespace
}  // namespace surgdepth

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "surgdepth/nn.hpp"

namespace surgdepth {

// Residual inverted-bottleneck block: x + pw2(gelu(pw1(norm(dwconv(x))))).
// Norm and pointwise layers act per spatial position over channels.
struct ConvNeXtBlock {
  Conv2d dwconv;  // depthwise 7x7, padding 3
  LayerNorm norm;
  Linear pw1;  // d -> 4d
  Linear pw2;  // 4d -> d

  static ConvNeXtBlock make(std::int64_t channels, Rng& rng, double std = kInitStd);
  std::int64_t channels() const { return dwconv.weight.dim(0); }
  void collect(const std::string& prefix, ParamList& out) const;
};

// x: (d, H, W) -> (d, H, W)
Tensor convnext_block(const Tensor& x, const ConvNeXtBlock& block);

// Each token of width tile*tile*d becomes a tile x tile patch of d channels
// at its grid position, tile = patch / 4, so the output is (d, H/4, W/4).
// The token vector is read as [tile_row][tile_col][channel].
Tensor tokens_to_grid(const Tensor& tokens, int h, int w, int patch);
// Inverse of tokens_to_grid.
Tensor grid_to_tokens(const Tensor& grid, int patch);

struct DecoderParams {
  Linear expand;  // in -> (patch/4)^2 * in/8
  std::vector<ConvNeXtBlock> blocks;
  Conv2d head;  // 1x1, in/8 -> num_classes
  int num_classes = 0;
  int patch = 16;

  // in_dim is C for RGB-only input and 2C when both streams are concatenated.
  static DecoderParams make(std::int64_t in_dim, int patch, int num_blocks, int num_classes, Rng& rng,
                            double std = kInitStd);
  std::int64_t grid_channels() const { return head.weight.dim(1); }
  void collect(const std::string& prefix, ParamList& out) const;
};

// tokens: (h * w, in_dim) -> raw logits (num_classes, H, W) where
// H = patch * h and W = patch * w.
Tensor decode(const Tensor& tokens, int h, int w, int out_h, int out_w, const DecoderParams& params);

}  // namespace surgdepth

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "surgdepth/nn.hpp"
#include "surgdepth/token_grid.hpp"

namespace surgdepth {

// Non-overlapping p x p patch projection (kernel = stride = p).
struct PatchEmbed {
  Conv2d conv;
  int patch = 16;

  static PatchEmbed make(std::int64_t in_channels, std::int64_t channels, int patch, Rng& rng, double std = kInitStd);
  void collect(const std::string& prefix, ParamList& out) const;
};

// img: (C_img, H, W) with H, W divisible by the patch size.
TokenGrid patch_embed(const Tensor& img, const PatchEmbed& pe);

struct MultiHeadAttention {
  Linear qkv;   // C -> 3C, laid out [q | k | v]
  Linear proj;  // C -> C
  int heads = 1;

  static MultiHeadAttention make(std::int64_t channels, int heads, Rng& rng, double std = kInitStd);
  void collect(const std::string& prefix, ParamList& out) const;
};

// Self-attention over x: (N, C). Scale is 1 / sqrt(C / heads).
Tensor mhsa(const Tensor& x, const MultiHeadAttention& attn);

// Pre-norm ViT block: x + attn(norm1(x)), then + mlp(norm2(.)).
struct TransformerBlock {
  LayerNorm norm1;
  MultiHeadAttention attn;
  LayerNorm norm2;
  Linear fc1;  // C -> 4C
  Linear fc2;  // 4C -> C

  static TransformerBlock make(std::int64_t channels, int heads, Rng& rng, double std = kInitStd);
  void collect(const std::string& prefix, ParamList& out) const;
};

Tensor transformer_block(const Tensor& x, const TransformerBlock& block);

struct EncoderParams {
  std::vector<TransformerBlock> blocks;
  Tensor pos_embed_rgb;    // (h * w, C), zero-initialized
  Tensor pos_embed_depth;  // (h * w, C), zero-initialized
  LayerNorm final_norm;

  static EncoderParams make(std::int64_t channels, int depth, int heads, std::int64_t tokens, Rng& rng,
                            double std = kInitStd);
  void collect(const std::string& prefix, ParamList& out) const;
};

struct EncodedStreams {
  Tensor rgb;    // (h * w, C)
  Tensor depth;  // (h * w, C)
};

// Adds per-modality positional embeddings, joins both streams along the token
// axis (2 h w tokens), runs the blocks and final norm, then splits the result
// back into its RGB half and depth half. An encoder without blocks skips the
// final norm and passes the embedded tokens through.
EncodedStreams encode(const TokenGrid& rgb, const TokenGrid& depth, const EncoderParams& params);

}  // namespace surgdepth

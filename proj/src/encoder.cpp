// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "surgdepth/encoder.hpp"

#include <cmath>

#include "surgdepth/errors.hpp"

namespace surgdepth {

PatchEmbed PatchEmbed::make(std::int64_t in_channels, std::int64_t channels, int patch, Rng& rng, double std) {
  if (patch < 1) throw ConfigError("patch size must be positive");
  return {Conv2d::make(in_channels, channels, patch, {patch, 0, 1}, rng, std), patch};
}

void PatchEmbed::collect(const std::string& prefix, ParamList& out) const { conv.collect(prefix + ".conv", out); }

TokenGrid patch_embed(const Tensor& img, const PatchEmbed& pe) {
  if (img.rank() != 3) throw DimensionError("patch_embed expects (C, H, W), got " + shape_str(img.shape()));
  if (img.dim(1) % pe.patch != 0 || img.dim(2) % pe.patch != 0)
    throw DimensionError("image " + shape_str(img.shape()) + " not divisible by patch size " +
                         std::to_string(pe.patch));
  return TokenGrid::from_chw(pe.conv(img));
}

MultiHeadAttention MultiHeadAttention::make(std::int64_t channels, int heads, Rng& rng, double std) {
  if (heads < 1 || channels % heads != 0)
    throw ConfigError(std::to_string(heads) + " heads do not divide width " + std::to_string(channels));
  return {Linear::make(channels, 3 * channels, rng, std), Linear::make(channels, channels, rng, std), heads};
}

void MultiHeadAttention::collect(const std::string& prefix, ParamList& out) const {
  qkv.collect(prefix + ".qkv", out);
  proj.collect(prefix + ".proj", out);
}

Tensor mhsa(const Tensor& x, const MultiHeadAttention& attn) {
  const std::int64_t c = x.dim(1);
  if (attn.heads < 1 || c % attn.heads != 0)
    throw ConfigError(std::to_string(attn.heads) + " heads do not divide width " + std::to_string(c));
  const std::int64_t hd = c / attn.heads;
  const auto scale = static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(hd)));
  const Tensor qkv = attn.qkv(x);
  std::vector<Tensor> heads;
  heads.reserve(attn.heads);
  for (int h = 0; h < attn.heads; ++h) {
    const Tensor q = ops::slice(qkv, 1, h * hd, hd);
    const Tensor k = ops::slice(qkv, 1, c + h * hd, hd);
    const Tensor v = ops::slice(qkv, 1, 2 * c + h * hd, hd);
    const Tensor a = ops::softmax(ops::scale(ops::matmul(q, ops::transpose(k)), scale), 1);
    heads.push_back(ops::matmul(a, v));
  }
  const Tensor merged = heads.size() == 1 ? heads[0] : ops::concat(heads, 1);
  return attn.proj(merged);
}

TransformerBlock TransformerBlock::make(std::int64_t channels, int heads, Rng& rng, double std) {
  TransformerBlock b;
  b.norm1 = LayerNorm::make(channels);
  b.attn = MultiHeadAttention::make(channels, heads, rng, std);
  b.norm2 = LayerNorm::make(channels);
  b.fc1 = Linear::make(channels, 4 * channels, rng, std);
  b.fc2 = Linear::make(4 * channels, channels, rng, std);
  return b;
}

void TransformerBlock::collect(const std::string& prefix, ParamList& out) const {
  norm1.collect(prefix + ".norm1", out);
  attn.collect(prefix + ".attn", out);
  norm2.collect(prefix + ".norm2", out);
  fc1.collect(prefix + ".fc1", out);
  fc2.collect(prefix + ".fc2", out);
}

Tensor transformer_block(const Tensor& x, const TransformerBlock& block) {
  const Tensor h = ops::add(x, mhsa(block.norm1(x), block.attn));
  return ops::add(h, block.fc2(ops::gelu(block.fc1(block.norm2(h)))));
}

EncoderParams EncoderParams::make(std::int64_t channels, int depth, int heads, std::int64_t tokens, Rng& rng,
                                  double std) {
  EncoderParams p;
  for (int i = 0; i < depth; ++i) p.blocks.push_back(TransformerBlock::make(channels, heads, rng, std));
  p.pos_embed_rgb = make_param_filled({tokens, channels}, 0.0f);
  p.pos_embed_depth = make_param_filled({tokens, channels}, 0.0f);
  p.final_norm = LayerNorm::make(channels);
  return p;
}

void EncoderParams::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".pos_embed_rgb", pos_embed_rgb});
  out.push_back({prefix + ".pos_embed_depth", pos_embed_depth});
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].collect(prefix + ".blocks." + std::to_string(i), out);
  final_norm.collect(prefix + ".final_norm", out);
}

EncodedStreams encode(const TokenGrid& rgb, const TokenGrid& depth, const EncoderParams& params) {
  if (rgb.tokens.shape() != params.pos_embed_rgb.shape() || depth.tokens.shape() != params.pos_embed_depth.shape())
    throw DimensionError("encoder: token shapes " + shape_str(rgb.tokens.shape()) + " / " +
                         shape_str(depth.tokens.shape()) + " do not match positional embeddings " +
                         shape_str(params.pos_embed_rgb.shape()));
  const std::int64_t n = rgb.tokens.dim(0);
  Tensor x =
      ops::concat({ops::add(rgb.tokens, params.pos_embed_rgb), ops::add(depth.tokens, params.pos_embed_depth)}, 0);
  if (!params.blocks.empty()) {
    for (const auto& block : params.blocks) x = transformer_block(x, block);
    x = params.final_norm(x);
  }
  return {ops::slice(x, 0, 0, n), ops::slice(x, 0, n, n)};
}

}  // namespace surgdepth

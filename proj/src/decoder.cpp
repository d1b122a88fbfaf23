// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "surgdepth/decoder.hpp"

#include "surgdepth/errors.hpp"

namespace surgdepth {

ConvNeXtBlock ConvNeXtBlock::make(std::int64_t channels, Rng& rng, double std) {
  const int groups = static_cast<int>(channels);
  ConvNeXtBlock b;
  b.dwconv = Conv2d::make(channels, channels, 7, {1, 3, groups}, rng, std);
  b.norm = LayerNorm::make(channels);
  b.pw1 = Linear::make(channels, 4 * channels, rng, std);
  b.pw2 = Linear::make(4 * channels, channels, rng, std);
  return b;
}

void ConvNeXtBlock::collect(const std::string& prefix, ParamList& out) const {
  dwconv.collect(prefix + ".dwconv", out);
  norm.collect(prefix + ".norm", out);
  pw1.collect(prefix + ".pw1", out);
  pw2.collect(prefix + ".pw2", out);
}

Tensor convnext_block(const Tensor& x, const ConvNeXtBlock& block) {
  if (x.rank() != 3 || x.dim(0) != block.channels())
    throw DimensionError("convnext_block: input " + shape_str(x.shape()) + " vs block width " +
                         std::to_string(block.channels()));
  const auto d = x.dim(0), h = x.dim(1), w = x.dim(2);
  const Tensor spatial = block.dwconv(x);
  const Tensor rows = ops::transpose(ops::reshape(spatial, {d, h * w}));
  const Tensor y = block.pw2(ops::gelu(block.pw1(block.norm(rows))));
  return ops::add(x, ops::reshape(ops::transpose(y), {d, h, w}));
}

namespace {

int tile_of(int patch) {
  if (patch < 4 || patch % 4 != 0)
    throw ConfigError("patch size " + std::to_string(patch) + " is not a positive multiple of 4");
  return patch / 4;
}

}  // namespace

Tensor tokens_to_grid(const Tensor& tokens, int h, int w, int patch) {
  const int tile = tile_of(patch);
  if (tokens.rank() != 2 || tokens.dim(0) != static_cast<std::int64_t>(h) * w)
    throw DimensionError("tokens_to_grid: " + shape_str(tokens.shape()) + " is not " + std::to_string(h) + "x" +
                         std::to_string(w) + " tokens");
  const std::int64_t features = tokens.dim(1);
  if (features % (tile * tile) != 0)
    throw ConfigError("tokens_to_grid: width " + std::to_string(features) + " does not split into " +
                      std::to_string(tile) + "x" + std::to_string(tile) + " tiles");
  const std::int64_t d = features / (tile * tile);
  const Tensor five = ops::reshape(tokens, {h, w, tile, tile, d});
  return ops::reshape(ops::permute(five, {4, 0, 2, 1, 3}), {d, std::int64_t{h} * tile, std::int64_t{w} * tile});
}

Tensor grid_to_tokens(const Tensor& grid, int patch) {
  const int tile = tile_of(patch);
  if (grid.rank() != 3 || grid.dim(1) % tile != 0 || grid.dim(2) % tile != 0)
    throw DimensionError("grid_to_tokens: grid " + shape_str(grid.shape()) + " not tiled by " + std::to_string(tile));
  const auto d = grid.dim(0), h = grid.dim(1) / tile, w = grid.dim(2) / tile;
  const Tensor five = ops::reshape(grid, {d, h, tile, w, tile});
  return ops::reshape(ops::permute(five, {1, 3, 2, 4, 0}), {h * w, std::int64_t{tile} * tile * d});
}

DecoderParams DecoderParams::make(std::int64_t in_dim, int patch, int num_blocks, int num_classes, Rng& rng,
                                  double std) {
  if (in_dim % 8 != 0) throw ConfigError("decoder input width " + std::to_string(in_dim) + " not divisible by 8");
  if (num_classes < 1) throw ConfigError("decoder needs at least one class");
  if (num_blocks < 0) throw ConfigError("negative decoder depth");
  const int tile = tile_of(patch);
  const std::int64_t d = in_dim / 8;
  DecoderParams p;
  p.expand = Linear::make(in_dim, std::int64_t{tile} * tile * d, rng, std);
  for (int i = 0; i < num_blocks; ++i) p.blocks.push_back(ConvNeXtBlock::make(d, rng, std));
  p.head = Conv2d::make(d, num_classes, 1, {}, rng, std);
  p.num_classes = num_classes;
  p.patch = patch;
  return p;
}

void DecoderParams::collect(const std::string& prefix, ParamList& out) const {
  expand.collect(prefix + ".expand", out);
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].collect(prefix + ".blocks." + std::to_string(i), out);
  head.collect(prefix + ".head", out);
}

Tensor decode(const Tensor& tokens, int h, int w, int out_h, int out_w, const DecoderParams& params) {
  if (out_h != params.patch * h || out_w != params.patch * w)
    throw DimensionError("decode: " + std::to_string(out_h) + "x" + std::to_string(out_w) + " output is not " +
                         std::to_string(params.patch) + " x the " + std::to_string(h) + "x" + std::to_string(w) +
                         " token grid");
  Tensor grid = tokens_to_grid(params.expand(tokens), h, w, params.patch);
  for (const auto& block : params.blocks) grid = convnext_block(grid, block);
  return ops::bilinear_resize(params.head(grid), out_h, out_w);
}

}  // namespace surgdepth

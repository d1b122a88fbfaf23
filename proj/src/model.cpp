// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "surgdepth/model.hpp"

#include "surgdepth/errors.hpp"

namespace surgdepth {

std::string to_string(DecoderInput input) { return input == DecoderInput::rgb_only ? "rgb_only" : "rgb_and_depth"; }

DecoderInput parse_decoder_input(const std::string& text) {
  if (text == "rgb_only" || text == "rgb") return DecoderInput::rgb_only;
  if (text == "rgb_and_depth" || text == "rgbd") return DecoderInput::rgb_and_depth;
  throw ConfigError("unknown decoder input '" + text + "' (expected rgb_only or rgb_and_depth)");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (image_h < 1 || image_w < 1) fail("image size must be positive");
  if (patch < 4 || patch % 4 != 0) fail("patch must be a positive multiple of 4");
  if (image_h % patch != 0 || image_w % patch != 0) fail("image size must be divisible by the patch size");
  if (embed_dim < 8 || embed_dim % 8 != 0) fail("embed_dim must be a positive multiple of 8");
  if (heads < 1 || embed_dim % heads != 0) fail("heads must divide embed_dim");
  if (depth_blocks < 0) fail("depth_blocks must be non-negative");
  if (fusion_k < 1 || fusion_k > std::min(tokens_h(), tokens_w())) fail("fusion_k must lie in [1, min(H, W) / patch]");
  if (fusion_dim < 0) fail("fusion_dim must be non-negative");
  if (decoder_blocks < 0) fail("decoder_blocks must be non-negative");
  if (num_classes < 1) fail("num_classes must be positive");
  if (!(init_std >= 0.0)) fail("init_std must be non-negative");
  if (!(lr >= 0.0)) fail("lr must be non-negative");
  if (!(weight_decay >= 0.0)) fail("weight_decay must be non-negative");
  if (epochs < 0) fail("epochs must be non-negative");
  if (batch_size < 1) fail("batch_size must be positive");
  if (max_steps < 0) fail("max_steps must be non-negative");
}

ModelConfig toy_config() { return ModelConfig{}; }

ModelConfig full_vitb_config() {
  ModelConfig c;
  c.image_h = 480;
  c.image_w = 640;
  c.patch = 16;
  c.embed_dim = 768;
  c.depth_blocks = 12;
  c.heads = 12;
  c.fusion_k = 7;
  c.decoder_blocks = 4;
  c.num_classes = 9;
  c.init_std = kInitStd;
  return c;
}

ModelConfig grad_check_config() {
  ModelConfig c;
  c.image_h = 16;
  c.image_w = 16;
  c.patch = 8;
  c.embed_dim = 16;
  c.depth_blocks = 1;
  c.heads = 2;
  c.fusion_k = 2;
  c.decoder_blocks = 1;
  c.num_classes = 4;
  return c;
}

Model build_model(const ModelConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const std::int64_t c = config.embed_dim;
  Model m;
  m.config = config;
  m.patch_rgb = PatchEmbed::make(3, c, config.patch, rng, config.init_std);
  m.patch_depth = PatchEmbed::make(1, c, config.patch, rng, config.init_std);
  m.fusion = FusionParams::make(c, config.effective_fusion_dim(), config.fusion_k, rng, config.init_std);
  m.encoder = EncoderParams::make(c, config.depth_blocks, config.heads,
                                  std::int64_t{config.tokens_h()} * config.tokens_w(), rng, config.init_std);
  const std::int64_t decoder_in = config.decoder_input == DecoderInput::rgb_only ? c : 2 * c;
  m.decoder =
      DecoderParams::make(decoder_in, config.patch, config.decoder_blocks, config.num_classes, rng, config.init_std);
  return m;
}

ParamList Model::parameters() const {
  ParamList out;
  patch_rgb.collect("patch_embed_rgb", out);
  patch_depth.collect("patch_embed_depth", out);
  fusion.collect("fusion", out);
  encoder.collect("encoder", out);
  decoder.collect("decoder", out);
  return out;
}

Tensor forward(const Model& model, const Tensor& rgb, const Tensor& depth) {
  const ModelConfig& cfg = model.config;
  const Shape rgb_shape{3, cfg.image_h, cfg.image_w};
  const Shape depth_shape{1, cfg.image_h, cfg.image_w};
  if (rgb.shape() != rgb_shape || depth.shape() != depth_shape)
    throw DimensionError("forward: expected rgb " + shape_str(rgb_shape) + " and depth " + shape_str(depth_shape) +
                         ", got " + shape_str(rgb.shape()) + " and " + shape_str(depth.shape()));
  for (Scalar v : depth.data())
    if (!(v >= 0.0f && v <= 1.0f)) throw DataError("forward: depth values must lie in [0, 1]");

  const TokenGrid rgb_tokens = patch_embed(rgb, model.patch_rgb);
  FusionOutput fused;
  if (cfg.rgb_baseline) {
    const TokenGrid blank = patch_embed(Tensor(depth_shape), model.patch_depth);
    fused = fuse_with_query(rgb_tokens, blank, make_query(rgb_tokens, rgb_tokens, model.fusion), model.fusion);
  } else {
    fused = fuse(rgb_tokens, patch_embed(depth, model.patch_depth), model.fusion);
  }
  const EncodedStreams enc = encode(fused.rgb, fused.depth, model.encoder);
  const Tensor decoder_in =
      cfg.decoder_input == DecoderInput::rgb_only ? enc.rgb : ops::concat({enc.rgb, enc.depth}, 1);
  return decode(decoder_in, rgb_tokens.h, rgb_tokens.w, cfg.image_h, cfg.image_w, model.decoder);
}

ParamCount param_count(const Model& model) {
  ParamCount pc;
  auto add = [&pc](const std::string& name, const ParamList& params) {
    const std::int64_t n = count_scalars(params);
    pc.modules.emplace_back(name, n);
    pc.total += n;
  };
  ParamList list;
  model.patch_rgb.collect("patch_embed_rgb", list);
  add("patch_embed_rgb", list);
  list.clear();
  model.patch_depth.collect("patch_embed_depth", list);
  add("patch_embed_depth", list);
  list.clear();
  model.fusion.collect("fusion", list);
  add("fusion", list);
  list.clear();
  model.encoder.collect("encoder", list);
  add("encoder", list);
  list.clear();
  model.decoder.collect("decoder", list);
  add("decoder", list);
  return pc;
}

ShapePlan plan_shapes(const ModelConfig& config) {
  config.validate();
  const std::int64_t h = config.tokens_h(), w = config.tokens_w(), c = config.embed_dim;
  const std::int64_t in = config.decoder_input == DecoderInput::rgb_only ? c : 2 * c;
  ShapePlan plan;
  plan.rgb_tokens = {h * w, c};
  plan.encoder_sequence = {2 * h * w, c};
  plan.decoder_tokens = {h * w, in};
  plan.decoder_grid = {in / 8, config.image_h / 4, config.image_w / 4};
  plan.logits = {config.num_classes, config.image_h, config.image_w};
  return plan;
}

}  // namespace surgdepth

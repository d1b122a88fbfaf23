// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "surgdepth/decoder.hpp"
#include "surgdepth/encoder.hpp"
#include "surgdepth/fusion.hpp"

namespace surgdepth {

enum class DecoderInput { rgb_only, rgb_and_depth };

std::string to_string(DecoderInput input);
DecoderInput parse_decoder_input(const std::string& text);

struct ModelConfig {
  int image_h = 64;
  int image_w = 64;
  int patch = 8;
  int embed_dim = 64;
  int depth_blocks = 2;
  int heads = 4;
  int fusion_k = 7;
  // 0 selects 2 * embed_dim, the width of the concatenated query source.
  int fusion_dim = 0;
  int decoder_blocks = 4;
  int num_classes = 4;
  DecoderInput decoder_input = DecoderInput::rgb_only;
  // RGB-only ablation baseline: depth is zeroed and the fusion query is
  // built from the RGB stream twice. Parameters are unchanged.
  bool rgb_baseline = false;
  std::uint64_t seed = 0;
  // Std of the truncated-normal init of every linear and conv weight.
  double init_std = 0.1;

  double lr = 1e-4;
  double weight_decay = 0.05;
  int epochs = 50;
  int batch_size = 2;
  // Stops training after this many optimizer steps; 0 means no cap.
  int max_steps = 0;
  bool augment = true;
  int ignore_index = 255;

  int tokens_h() const { return image_h / patch; }
  int tokens_w() const { return image_w / patch; }
  int effective_fusion_dim() const { return fusion_dim > 0 ? fusion_dim : 2 * embed_dim; }

  // Throws ConfigError on any violated invariant.
  void validate() const;
};

// 64x64 images, p = 8, C = 64, 2 blocks, 4 heads, k = 7, 4 decoder blocks.
ModelConfig toy_config();
// ViT-B/16 at 480x640 with 9 classes and 4 decoder blocks.
ModelConfig full_vitb_config();
// 16x16 images, C = 16, 1 encoder block, k = 2, 1 decoder block.
ModelConfig grad_check_config();

struct Model {
  ModelConfig config;
  PatchEmbed patch_rgb;
  PatchEmbed patch_depth;
  FusionParams fusion;
  EncoderParams encoder;
  DecoderParams decoder;

  // Every learnable tensor with a stable dotted name, in a fixed order.
  ParamList parameters() const;
};

// Deterministic given config.seed.
Model build_model(const ModelConfig& config);

// rgb: (3, H, W) in [0, 1], depth: (1, H, W) in [0, 1] -> logits (K, H, W).
Tensor forward(const Model& model, const Tensor& rgb, const Tensor& depth);

struct ParamCount {
  std::int64_t total = 0;
  std::vector<std::pair<std::string, std::int64_t>> modules;
};

ParamCount param_count(const Model& model);

// Tensor shapes at each stage boundary, computed without running the model.
struct ShapePlan {
  Shape rgb_tokens;        // (h w, C)
  Shape encoder_sequence;  // (2 h w, C)
  Shape decoder_tokens;    // (h w, C) or (h w, 2C)
  Shape decoder_grid;      // (in/8, H/4, W/4)
  Shape logits;            // (K, H, W)
};

ShapePlan plan_shapes(const ModelConfig& config);

}  // namespace surgdepth

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "surgdepth/decoder.hpp"
#include "surgdepth/encoder.hpp"
#include "surgdepth/fusion.hpp"
#include "surgdepth/label_mask.hpp"
#include "surgdepth/tensor.hpp"

// Reference implementations written as explicit loops in double precision.
// They share no code with the kernels they check.
namespace surgdepth_verify::oracle {

using surgdepth::Tensor;

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
// Softmax along the last axis.
Tensor softmax_rows(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);
Tensor gelu(const Tensor& x);
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int padding, int groups);
Tensor adaptive_avg_pool2d(const Tensor& x, int k);
Tensor bilinear_resize(const Tensor& x, int out_h, int out_w);

Tensor mhsa(const Tensor& x, const surgdepth::MultiHeadAttention& attn);
Tensor transformer_block(const Tensor& x, const surgdepth::TransformerBlock& block);
Tensor patch_embed(const Tensor& image, const surgdepth::PatchEmbed& pe);

struct Fused {
  Tensor rgb;        // (h * w, C)
  Tensor depth;      // (h * w, C)
  Tensor attention;  // (k * k, h * w)
};
Fused fuse(const Tensor& rgb_tokens, const Tensor& depth_tokens, int h, int w, const surgdepth::FusionParams& p);

Tensor convnext_block(const Tensor& x, const surgdepth::ConvNeXtBlock& block);
Tensor tokens_to_grid(const Tensor& tokens, int h, int w, int patch);
Tensor decode(const Tensor& tokens, int h, int w, int out_h, int out_w, const surgdepth::DecoderParams& p);

double cross_entropy(const Tensor& logits, const surgdepth::LabelMask& labels, int ignore_index);

// Plain Adam / AdamW on a single scalar for a fixed gradient sequence.
std::vector<double> adamw_scalar(double p0, const std::vector<double>& grads, double lr, double beta1, double beta2,
                                 double eps, double weight_decay);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace surgdepth_verify::oracle

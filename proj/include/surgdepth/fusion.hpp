// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "surgdepth/nn.hpp"
#include "surgdepth/token_grid.hpp"

namespace surgdepth {

// Weights of the depth-aware fusion block. Queries come from the pooled
// concatenation of both modalities; keys and values from RGB tokens only.
struct FusionParams {
  Linear fc_q;          // 2C -> C_d
  Linear fc_k;          // C -> C_d
  Linear fc_v;          // C -> C_d
  Linear fc_out_rgb;    // C_d -> C
  Linear fc_out_depth;  // C_d -> C
  int k = 7;            // pooled query grid is k x k

  static FusionParams make(std::int64_t channels, std::int64_t fusion_dim, int k, Rng& rng, double std = kInitStd);
  std::int64_t fusion_dim() const { return fc_q.weight.dim(0); }
  void collect(const std::string& prefix, ParamList& out) const;
};

// (k * k, C_d) queries: concat channels -> adaptive pool to k x k -> fc_q.
Tensor make_query(const TokenGrid& rgb, const TokenGrid& depth, const FusionParams& params);

struct FusionOutput {
  TokenGrid rgb;
  TokenGrid depth;
  Tensor attention;  // (k * k, h * w), rows sum to one
};

// Pooled-query cross-attention over RGB tokens. The (k x k) context is
// bilinearly resized back to (h, w) and added to each stream through its
// own output projection.
FusionOutput fuse(const TokenGrid& rgb, const TokenGrid& depth, const FusionParams& params);

// fuse() with a caller-built (k * k, C_d) query.
FusionOutput fuse_with_query(const TokenGrid& rgb, const TokenGrid& depth, const Tensor& query,
                             const FusionParams& params);

// Reference attention softmax(q k^T * scale) v evaluated with explicit
// per-query loops in double precision. Not differentiable.
Tensor attention_oracle(const Tensor& q, const Tensor& k, const Tensor& v, double scale);

}  // namespace surgdepth

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "surgdepth/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "surgdepth/errors.hpp"

namespace surgdepth {

FusionParams FusionParams::make(std::int64_t channels, std::int64_t fusion_dim, int k, Rng& rng, double std) {
  if (channels < 1 || fusion_dim < 1 || k < 1)
    throw ConfigError("fusion block needs positive channels, fusion_dim and k");
  FusionParams p;
  p.fc_q = Linear::make(2 * channels, fusion_dim, rng, std);
  p.fc_k = Linear::make(channels, fusion_dim, rng, std);
  p.fc_v = Linear::make(channels, fusion_dim, rng, std);
  p.fc_out_rgb = Linear::make(fusion_dim, channels, rng, std);
  p.fc_out_depth = Linear::make(fusion_dim, channels, rng, std);
  p.k = k;
  return p;
}

void FusionParams::collect(const std::string& prefix, ParamList& out) const {
  fc_q.collect(prefix + ".fc_q", out);
  fc_k.collect(prefix + ".fc_k", out);
  fc_v.collect(prefix + ".fc_v", out);
  fc_out_rgb.collect(prefix + ".fc_out_rgb", out);
  fc_out_depth.collect(prefix + ".fc_out_depth", out);
}

namespace {

void require_matching(const TokenGrid& rgb, const TokenGrid& depth) {
  if (rgb.h != depth.h || rgb.w != depth.w || rgb.channels() != depth.channels())
    throw DimensionError("fusion inputs disagree: rgb " + std::to_string(rgb.h) + "x" + std::to_string(rgb.w) + "x" +
                         std::to_string(rgb.channels()) + ", depth " + std::to_string(depth.h) + "x" +
                         std::to_string(depth.w) + "x" + std::to_string(depth.channels()));
}

}  // namespace

Tensor make_query(const TokenGrid& rgb, const TokenGrid& depth, const FusionParams& params) {
  require_matching(rgb, depth);
  const int k = params.k;
  if (k > std::min(rgb.h, rgb.w))
    throw DimensionError("fusion pool size k=" + std::to_string(k) + " exceeds token grid " + std::to_string(rgb.h) +
                         "x" + std::to_string(rgb.w));
  const Tensor stacked = ops::concat({rgb.to_chw(), depth.to_chw()}, 0);
  const Tensor pooled = ops::adaptive_avg_pool2d(stacked, k);
  const TokenGrid pooled_tokens = TokenGrid::from_chw(pooled);
  return params.fc_q(pooled_tokens.tokens);
}

FusionOutput fuse(const TokenGrid& rgb, const TokenGrid& depth, const FusionParams& params) {
  return fuse_with_query(rgb, depth, make_query(rgb, depth, params), params);
}

FusionOutput fuse_with_query(const TokenGrid& rgb, const TokenGrid& depth, const Tensor& q,
                             const FusionParams& params) {
  require_matching(rgb, depth);
  const auto k2 = static_cast<std::int64_t>(params.k) * params.k;
  if (q.rank() != 2 || q.dim(0) != k2 || q.dim(1) != params.fusion_dim())
    throw DimensionError("fusion query " + shape_str(q.shape()) + " is not (" + std::to_string(k2) + ", " +
                         std::to_string(params.fusion_dim()) + ")");
  const Tensor keys = params.fc_k(rgb.tokens);
  const Tensor values = params.fc_v(rgb.tokens);
  const auto cd = static_cast<double>(params.fusion_dim());
  const Tensor logits = ops::scale(ops::matmul(q, ops::transpose(keys)), static_cast<Scalar>(1.0 / std::sqrt(cd)));
  Tensor attention = ops::softmax(logits, 1);
  const Tensor context = ops::matmul(attention, values);  // (k*k, C_d)

  const TokenGrid pooled(params.k, params.k, context);
  const Tensor upsampled = ops::bilinear_resize(pooled.to_chw(), rgb.h, rgb.w);
  const Tensor context_tokens = TokenGrid::from_chw(upsampled).tokens;

  FusionOutput out;
  out.rgb = TokenGrid(rgb.h, rgb.w, ops::add(rgb.tokens, params.fc_out_rgb(context_tokens)));
  out.depth = TokenGrid(depth.h, depth.w, ops::add(depth.tokens, params.fc_out_depth(context_tokens)));
  out.attention = std::move(attention);
  return out;
}

Tensor attention_oracle(const Tensor& q, const Tensor& k, const Tensor& v, double scale) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2 || q.dim(1) != k.dim(1) || k.dim(0) != v.dim(0))
    throw DimensionError("attention_oracle: incompatible q/k/v shapes");
  const auto nq = q.dim(0), nk = k.dim(0), d = q.dim(1), dv = v.dim(1);
  const auto qv = q.data(), kv = k.data(), vv = v.data();
  std::vector<Scalar> out(static_cast<std::size_t>(nq * dv));
  std::vector<double> logits(static_cast<std::size_t>(nk));
  for (std::int64_t i = 0; i < nq; ++i) {
    double mx = -INFINITY;
    for (std::int64_t j = 0; j < nk; ++j) {
      double s = 0.0;
      for (std::int64_t t = 0; t < d; ++t) s += static_cast<double>(qv[i * d + t]) * kv[j * d + t];
      logits[j] = s * scale;
      mx = std::max(mx, logits[j]);
    }
    double total = 0.0;
    for (auto& l : logits) {
      l = std::exp(l - mx);
      total += l;
    }
    for (std::int64_t c = 0; c < dv; ++c) {
      double acc = 0.0;
      for (std::int64_t j = 0; j < nk; ++j) acc += logits[j] / total * vv[j * dv + c];
      out[i * dv + c] = static_cast<Scalar>(acc);
    }
  }
  return Tensor({nq, dv}, std::move(out));
}

}  // namespace surgdepth

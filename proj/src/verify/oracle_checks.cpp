// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <functional>

#include "common.hpp"
#include "surgdepth/loss.hpp"
#include "surgdepth/metrics.hpp"
#include "surgdepth/ops.hpp"
#include "surgdepth/optim.hpp"
#include "surgdepth_verify/oracles.hpp"
#include "surgdepth_verify/suite.hpp"

namespace surgdepth_verify {

using namespace surgdepth;

namespace {

constexpr double kTol = 1e-5;

// Runs `instance` for n seeded draws and reports the largest error.
CheckResult sweep(const std::string& name, const Options& opt, std::uint64_t stream,
                  const std::function<double(Rng&)>& instance) {
  double worst = 0.0;
  for (int i = 0; i < opt.instances; ++i) {
    Rng rng = Rng::derive(opt.seed ^ stream, static_cast<std::uint64_t>(i));
    worst = std::max(worst, instance(rng));
  }
  return within("oracle", name, worst, kTol, std::to_string(opt.instances) + " instances, max abs diff");
}

Linear random_linear(std::int64_t in, std::int64_t out, Rng& rng) {
  return {random_tensor({out, in}, rng, 0.3), random_tensor({out}, rng, 0.3)};
}

LayerNorm random_norm(std::int64_t c, Rng& rng) {
  LayerNorm n = LayerNorm::make(c);
  for (auto& v : n.gamma.mutable_data()) v = static_cast<Scalar>(1.0 + 0.2 * rng.normal());
  for (auto& v : n.beta.mutable_data()) v = static_cast<Scalar>(0.2 * rng.normal());
  return n;
}

MultiHeadAttention random_mhsa(std::int64_t c, int heads, Rng& rng) {
  return {random_linear(c, 3 * c, rng), random_linear(c, c, rng), heads};
}

FusionParams random_fusion(std::int64_t c, std::int64_t cd, int k, Rng& rng) {
  FusionParams p;
  p.fc_q = random_linear(2 * c, cd, rng);
  p.fc_k = random_linear(c, cd, rng);
  p.fc_v = random_linear(c, cd, rng);
  p.fc_out_rgb = random_linear(cd, c, rng);
  p.fc_out_depth = random_linear(cd, c, rng);
  p.k = k;
  return p;
}

ConvNeXtBlock random_convnext(std::int64_t d, Rng& rng) {
  ConvNeXtBlock b;
  b.dwconv = {random_tensor({d, 1, 7, 7}, rng, 0.2), random_tensor({d}, rng, 0.2), {1, 3, static_cast<int>(d)}};
  b.norm = random_norm(d, rng);
  b.pw1 = random_linear(d, 4 * d, rng);
  b.pw2 = random_linear(4 * d, d, rng);
  return b;
}

}  // namespace

std::vector<CheckResult> oracle_checks(const Options& opt) {
  std::vector<CheckResult> out;

  out.push_back(sweep("matmul", opt, 1, [](Rng& rng) {
    const int m = pick(rng, 1, 9), k = pick(rng, 1, 17), n = pick(rng, 1, 9);
    const Tensor a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng);
    return oracle::max_abs_diff(ops::matmul(a, b), oracle::matmul(a, b));
  }));

  out.push_back(sweep("linear", opt, 2, [](Rng& rng) {
    const int rows = pick(rng, 1, 9), in = pick(rng, 1, 17), o = pick(rng, 1, 9);
    const Tensor x = random_tensor({rows, in}, rng);
    const Linear l = random_linear(in, o, rng);
    return oracle::max_abs_diff(l(x), oracle::linear(x, l.weight, l.bias));
  }));

  out.push_back(sweep("softmax", opt, 3, [](Rng& rng) {
    const Tensor x = random_tensor({pick(rng, 1, 6), pick(rng, 1, 6), pick(rng, 1, 12)}, rng, 3.0);
    return oracle::max_abs_diff(ops::softmax(x, -1), oracle::softmax_rows(x));
  }));

  out.push_back(sweep("layer_norm", opt, 4, [](Rng& rng) {
    const int c = pick(rng, 2, 24);
    const Tensor x = random_tensor({pick(rng, 1, 9), c}, rng, 2.0);
    const LayerNorm n = random_norm(c, rng);
    return oracle::max_abs_diff(n(x), oracle::layer_norm(x, n.gamma, n.beta, n.eps));
  }));

  out.push_back(sweep("gelu", opt, 5, [](Rng& rng) {
    const Tensor x = random_tensor({pick(rng, 1, 64)}, rng, 3.0);
    return oracle::max_abs_diff(ops::gelu(x), oracle::gelu(x));
  }));

  out.push_back(sweep("conv2d", opt, 6, [](Rng& rng) {
    const int groups = pick(rng, 1, 3);
    const int cin = groups * pick(rng, 1, 3), cout = groups * pick(rng, 1, 3);
    const int k = 2 * pick(rng, 0, 2) + 1, stride = pick(rng, 1, 2), pad = pick(rng, 0, k / 2);
    const int h = (pick(rng, 1, 6) - 1) * stride + k - 2 * pad, w = (pick(rng, 1, 6) - 1) * stride + k - 2 * pad;
    const Tensor x = random_tensor({cin, h, w}, rng);
    const Tensor wt = random_tensor({cout, cin / groups, k, k}, rng, 0.3), b = random_tensor({cout}, rng);
    return oracle::max_abs_diff(ops::conv2d(x, wt, b, {stride, pad, groups}),
                                oracle::conv2d(x, wt, b, stride, pad, groups));
  }));

  out.push_back(sweep("conv2d_depthwise", opt, 7, [](Rng& rng) {
    const int c = pick(rng, 1, 6), h = pick(rng, 1, 10), w = pick(rng, 1, 10);
    const Tensor x = random_tensor({c, h, w}, rng);
    const Tensor wt = random_tensor({c, 1, 7, 7}, rng, 0.3), b = random_tensor({c}, rng);
    const Tensor fast = ops::conv2d(x, wt, b, {1, 3, c});
    double worst = oracle::max_abs_diff(fast, oracle::conv2d(x, wt, b, 1, 3, c));
    // Each output channel equals a single-channel conv of its own input plane.
    for (int ch = 0; ch < c; ++ch) {
      const Tensor plane = ops::slice(x, 0, ch, 1);
      const Tensor single = ops::conv2d(plane, ops::slice(wt, 0, ch, 1), ops::slice(b, 0, ch, 1), {1, 3, 1});
      worst = std::max(worst, oracle::max_abs_diff(single, ops::slice(fast, 0, ch, 1)));
    }
    return worst;
  }));

  out.push_back(sweep("adaptive_avg_pool2d", opt, 8, [](Rng& rng) {
    const int h = pick(rng, 1, 13), w = pick(rng, 1, 13);
    const int k = pick(rng, 1, std::min(h, w));
    const Tensor x = random_tensor({pick(rng, 1, 4), h, w}, rng);
    return oracle::max_abs_diff(ops::adaptive_avg_pool2d(x, k), oracle::adaptive_avg_pool2d(x, k));
  }));

  out.push_back(sweep("bilinear_resize", opt, 9, [](Rng& rng) {
    const int h = pick(rng, 1, 9), w = pick(rng, 1, 9), oh = pick(rng, 1, 20), ow = pick(rng, 1, 20);
    const Tensor x = random_tensor({pick(rng, 1, 4), h, w}, rng);
    return oracle::max_abs_diff(ops::bilinear_resize(x, oh, ow), oracle::bilinear_resize(x, oh, ow));
  }));

  out.push_back(sweep("mhsa", opt, 10, [](Rng& rng) {
    const int heads = 1 << pick(rng, 0, 2), c = heads * pick(rng, 1, 6), n = pick(rng, 1, 12);
    const Tensor x = random_tensor({n, c}, rng);
    const MultiHeadAttention a = random_mhsa(c, heads, rng);
    return oracle::max_abs_diff(mhsa(x, a), oracle::mhsa(x, a));
  }));

  out.push_back(sweep("transformer_block", opt, 11, [](Rng& rng) {
    const int heads = 1 << pick(rng, 0, 2), c = heads * pick(rng, 1, 4), n = pick(rng, 1, 10);
    const Tensor x = random_tensor({n, c}, rng);
    TransformerBlock b;
    b.norm1 = random_norm(c, rng);
    b.attn = random_mhsa(c, heads, rng);
    b.norm2 = random_norm(c, rng);
    b.fc1 = random_linear(c, 4 * c, rng);
    b.fc2 = random_linear(4 * c, c, rng);
    return oracle::max_abs_diff(transformer_block(x, b), oracle::transformer_block(x, b));
  }));

  out.push_back(sweep("patch_embed", opt, 12, [](Rng& rng) {
    const int p = 2 * pick(rng, 1, 4), cin = pick(rng, 1, 3), c = pick(rng, 1, 8);
    const int h = p * pick(rng, 1, 4), w = p * pick(rng, 1, 4);
    const Tensor img = random_tensor({cin, h, w}, rng);
    const PatchEmbed pe{{random_tensor({c, cin, p, p}, rng, 0.3), random_tensor({c}, rng), {p, 0, 1}}, p};
    return oracle::max_abs_diff(patch_embed(img, pe).tokens, oracle::patch_embed(img, pe));
  }));

  out.push_back(sweep("fusion_fuse", opt, 13, [](Rng& rng) {
    // A quarter of the draws use the reference shape h = w = 4, C = C_d = 8, k = 2.
    const bool toy = rng.bernoulli(0.25);
    const int h = toy ? 4 : pick(rng, 1, 7), w = toy ? 4 : pick(rng, 1, 7);
    const int c = toy ? 8 : pick(rng, 1, 10), cd = toy ? 8 : pick(rng, 1, 12);
    const int k = toy ? 2 : pick(rng, 1, std::min(h, w));
    const Tensor rgb = random_tensor({h * w, c}, rng), depth = random_tensor({h * w, c}, rng);
    const FusionParams p = random_fusion(c, cd, k, rng);
    const FusionOutput f = fuse(TokenGrid(h, w, rgb), TokenGrid(h, w, depth), p);
    const oracle::Fused ref = oracle::fuse(rgb, depth, h, w, p);
    return std::max({oracle::max_abs_diff(f.rgb.tokens, ref.rgb), oracle::max_abs_diff(f.depth.tokens, ref.depth),
                     oracle::max_abs_diff(f.attention, ref.attention)});
  }));

  out.push_back(sweep("fusion_single_query", opt, 14, [](Rng& rng) {
    // k = 1: one query; the context is a softmax-weighted mean of the V rows.
    const int h = pick(rng, 1, 6), w = pick(rng, 1, 6), c = pick(rng, 1, 8), cd = pick(rng, 1, 8);
    const Tensor rgb = random_tensor({h * w, c}, rng), depth = random_tensor({h * w, c}, rng);
    const FusionParams p = random_fusion(c, cd, 1, rng);
    const Tensor q = make_query(TokenGrid(h, w, rgb), TokenGrid(h, w, depth), p);
    const Tensor keys = p.fc_k(rgb), values = p.fc_v(rgb);
    const Tensor ctx = attention_oracle(q, keys, values, 1.0 / std::sqrt(static_cast<double>(cd)));
    const FusionOutput f = fuse(TokenGrid(h, w, rgb), TokenGrid(h, w, depth), p);
    double worst = 0.0;
    for (int j = 0; j < cd; ++j) {
      double s = 0.0;
      for (int t = 0; t < h * w; ++t) s += static_cast<double>(f.attention.data()[t]) * values.data()[t * cd + j];
      worst = std::max(worst, std::abs(s - ctx.data()[j]));
    }
    return worst;
  }));

  out.push_back(sweep("convnext_block", opt, 15, [](Rng& rng) {
    const int d = pick(rng, 1, 8), h = pick(rng, 1, 9), w = pick(rng, 1, 9);
    const Tensor x = random_tensor({d, h, w}, rng);
    const ConvNeXtBlock b = random_convnext(d, rng);
    return oracle::max_abs_diff(convnext_block(x, b), oracle::convnext_block(x, b));
  }));

  out.push_back(sweep("tokens_to_grid", opt, 16, [](Rng& rng) {
    const int p = 4 * pick(rng, 1, 3), d = pick(rng, 1, 4), h = pick(rng, 1, 4), w = pick(rng, 1, 4);
    const Tensor t = random_tensor({h * w, (p / 4) * (p / 4) * d}, rng);
    const Tensor g = tokens_to_grid(t, h, w, p);
    return std::max(oracle::max_abs_diff(g, oracle::tokens_to_grid(t, h, w, p)),
                    oracle::max_abs_diff(grid_to_tokens(g, p), t));
  }));

  out.push_back(sweep("decode", opt, 17, [](Rng& rng) {
    // Toy decoder: 64x64 output, p = 8, C = 64, 4 blocks.
    Rng init = Rng::derive(rng(), 0);
    DecoderParams p = DecoderParams::make(64, 8, 4, 4, init, 0.1);
    for (auto& b : p.blocks) b = random_convnext(p.grid_channels(), rng);
    const Tensor tokens = random_tensor({64, 64}, rng);
    return oracle::max_abs_diff(decode(tokens, 8, 8, 64, 64, p), oracle::decode(tokens, 8, 8, 64, 64, p));
  }));

  out.push_back(sweep("cross_entropy", opt, 18, [](Rng& rng) {
    const int k = pick(rng, 1, 5), h = pick(rng, 1, 6), w = pick(rng, 1, 6);
    const Tensor logits = random_tensor({k, h, w}, rng, 2.0);
    LabelMask labels(h, w, 0);
    for (auto& v : labels.values) v = rng.bernoulli(0.2) ? kIgnoreLabel : static_cast<std::uint8_t>(rng.below(k));
    return std::abs(cross_entropy_loss(logits, labels).item() - oracle::cross_entropy(logits, labels, kIgnoreLabel));
  }));

  {
    // 2x2, two classes, hand-computed: pixels (l0, l1, label) =
    // (2,0,0) (0,0,1) (1,3,1) (0,0,255).
    const Tensor logits({2, 2, 2}, std::vector<Scalar>{2, 0, 1, 0, 0, 0, 3, 0});
    LabelMask labels(2, 2, 0);
    labels.values = {0, 1, 1, kIgnoreLabel};
    const double expected = (std::log(1.0 + std::exp(-2.0)) + std::log(2.0) + std::log(1.0 + std::exp(-2.0))) / 3.0;
    out.push_back(within("oracle", "cross_entropy_2x2", std::abs(cross_entropy_loss(logits, labels).item() - expected),
                         1e-6, "hand-computed scalar"));
  }

  {
    // AdamW against a scalar oracle in double over 10 steps, with and without
    // weight decay.
    const std::vector<double> grads = {0.5, -1.2, 0.3, 2.0, -0.7, 0.0, 1.1, -0.4, 0.9, -2.5};
    double worst = 0.0;
    for (double wd : {0.0, 0.1}) {
      Tensor p({1}, std::vector<Scalar>{1.0f});
      p.set_requires_grad(true);
      AdamW opt_(ParamList{{"p", p}}, AdamWOptions{.lr = 0.01, .weight_decay = wd});
      const auto ref = oracle::adamw_scalar(1.0, grads, 0.01, 0.9, 0.999, 1e-8, wd);
      for (std::size_t t = 0; t < grads.size(); ++t) {
        opt_.zero_grad();
        p.grad_slot()[0] = static_cast<Scalar>(grads[t]);
        opt_.step();
        worst = std::max(worst, std::abs(static_cast<double>(p.data()[0]) - ref[t]));
      }
    }
    out.push_back(within("oracle", "adamw_10_step_scalar", worst, 1e-6, "wd 0 and 0.1"));
  }

  {
    // 4x4, two classes; prediction covers the left half, label the top half.
    LabelMask pred(4, 4, 0), label(4, 4, 0);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) {
        pred.values[y * 4 + x] = x < 2 ? 1 : 0;
        label.values[y * 4 + x] = y < 2 ? 1 : 0;
      }
    // Each class: intersection 4, union 12.
    const MetricsReport r = mean_iou(pred, label, 2);
    const double err = std::max({std::abs(*r.per_class_iou[0] - 4.0 / 12.0), std::abs(*r.per_class_iou[1] - 4.0 / 12.0),
                                 std::abs(r.mean_iou - 4.0 / 12.0), std::abs(r.pixel_accuracy - 0.5)});
    out.push_back(within("oracle", "mean_iou_4x4", err, 1e-12, "hand-counted confusion matrix"));
  }
  return out;
}

}  // namespace surgdepth_verify

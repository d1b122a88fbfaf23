// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

// Built against the double-precision library so that central differences
// resolve gradients well below float epsilon.

#include <cstdio>
#include <functional>

#include "common.hpp"
#include "surgdepth/autograd.hpp"
#include "surgdepth/data.hpp"
#include "surgdepth/decoder.hpp"
#include "surgdepth/encoder.hpp"
#include "surgdepth/fusion.hpp"
#include "surgdepth/loss.hpp"
#include "surgdepth/model.hpp"
#include "surgdepth/ops.hpp"
#include "surgdepth_verify/suite.hpp"

namespace surgdepth_verify {

using namespace surgdepth;

namespace {

constexpr double kLinearTol = 1e-6;
constexpr double kNonlinearTol = 1e-3;
constexpr double kEndToEndTol = 1e-2;
constexpr int kOpInstances = 3;

Tensor leaf(Shape shape, Rng& rng, double std = 1.0) {
  Tensor t = random_tensor(std::move(shape), rng, std);
  t.set_requires_grad(true);
  return t;
}

void make_leaves(ParamList& params) {
  for (auto& p : params) p.tensor.set_requires_grad(true);
}

void randomize_zeros(ParamList& params, Rng& rng, double std) {
  for (auto& p : params)
    for (auto& v : p.tensor.mutable_data())
      if (v == 0) v = static_cast<Scalar>(std * rng.normal());
}

Linear rand_linear(std::int64_t in, std::int64_t out, Rng& rng) {
  return {leaf({out, in}, rng, 0.4), leaf({out}, rng, 0.4)};
}

using Builder = std::function<std::pair<std::function<Tensor()>, ParamList>(Rng&)>;

CheckResult op_check(const std::string& name, const Options& opt, std::uint64_t stream, double tol,
                     const Builder& build) {
  double worst = 0.0;
  std::int64_t checked = 0;
  for (int i = 0; i < kOpInstances; ++i) {
    Rng rng = Rng::derive(opt.seed ^ stream, static_cast<std::uint64_t>(i));
    auto [f, params] = build(rng);
    GradCheckOptions go;
    go.step = 1e-4;
    go.tolerance = tol;
    go.min_scale = 1e-6;
    const GradCheckReport r = grad_check(f, params, go);
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
  }
  return within("gradient", name, worst, tol, std::to_string(checked) + " entries, max rel error");
}

}  // namespace

std::vector<CheckResult> gradient_checks(const Options& opt) {
  std::vector<CheckResult> out;
  const auto lin = [&](const std::string& name, std::uint64_t stream, const Builder& b) {
    out.push_back(op_check(name, opt, stream, kLinearTol, b));
  };
  const auto nonlin = [&](const std::string& name, std::uint64_t stream, const Builder& b) {
    out.push_back(op_check(name, opt, stream, kNonlinearTol, b));
  };

  lin("matmul", 0x101, [](Rng& rng) {
    Tensor a = leaf({pick(rng, 1, 5), 4}, rng), b = leaf({4, pick(rng, 1, 5)}, rng);
    const Tensor r = random_tensor({a.dim(0), b.dim(1)}, rng);
    return std::pair{std::function<Tensor()>([=] { return ops::sum(ops::mul(ops::matmul(a, b), r)); }),
                     ParamList{{"a", a}, {"b", b}}};
  });
  lin("linear", 0x102, [](Rng& rng) {
    Tensor x = leaf({pick(rng, 1, 5), 6}, rng);
    const Linear l = rand_linear(6, 3, rng);
    const Tensor r = random_tensor({x.dim(0), 3}, rng);
    return std::pair{std::function<Tensor()>([=] { return ops::sum(ops::mul(l(x), r)); }),
                     ParamList{{"x", x}, {"w", l.weight}, {"b", l.bias}}};
  });
  lin("add_mul_scale_mean", 0x103, [](Rng& rng) {
    Tensor a = leaf({3, 4}, rng), b = leaf({3, 4}, rng), c = leaf({3, 4}, rng);
    return std::pair{std::function<Tensor()>([=] {
                       return ops::add(ops::mean(ops::mul(ops::add(a, b), c)), ops::sum(ops::scale(a, 0.7)));
                     }),
                     ParamList{{"a", a}, {"b", b}, {"c", c}}};
  });
  lin("concat_slice_reshape_permute", 0x104, [](Rng& rng) {
    Tensor a = leaf({2, 3, 4}, rng), b = leaf({2, 2, 4}, rng);
    const Tensor r = random_tensor({4, 2, 3}, rng);
    return std::pair{std::function<Tensor()>([=] {
                       const Tensor c = ops::slice(ops::concat({a, b}, 1), 1, 1, 3);
                       const Tensor p = ops::permute(c, {2, 0, 1});
                       return ops::add(
                           ops::sum(ops::mul(p, r)),
                           ops::sum(ops::mul(ops::transpose(ops::reshape(c, {6, 4})), ops::reshape(r, {4, 6}))));
                     }),
                     ParamList{{"a", a}, {"b", b}}};
  });
  lin("conv2d", 0x105, [](Rng& rng) {
    const int groups = rng.bernoulli(0.5) ? 2 : 1, k = pick(rng, 1, 3);
    ops::Conv2dOptions o{pick(rng, 1, 2), pick(rng, 0, k / 2), groups};
    const int h = (pick(rng, 2, 4) - 1) * o.stride + k - 2 * o.padding,
              w_in = (pick(rng, 2, 4) - 1) * o.stride + k - 2 * o.padding;
    Tensor x = leaf({4, h, w_in}, rng), w = leaf({4, 4 / groups, k, k}, rng), b = leaf({4}, rng);
    const Tensor y = ops::conv2d(x, w, b, o);
    const Tensor r = random_tensor(y.shape(), rng);
    return std::pair{std::function<Tensor()>([=] { return ops::sum(ops::mul(ops::conv2d(x, w, b, o), r)); }),
                     ParamList{{"x", x}, {"w", w}, {"b", b}}};
  });
  lin("conv2d_depthwise_7x7", 0x106, [](Rng& rng) {
    ops::Conv2dOptions o{1, 3, 3};
    Tensor x = leaf({3, 5, 6}, rng), w = leaf({3, 1, 7, 7}, rng), b = leaf({3}, rng);
    const Tensor r = random_tensor({3, 5, 6}, rng);
    return std::pair{std::function<Tensor()>([=] { return ops::sum(ops::mul(ops::conv2d(x, w, b, o), r)); }),
                     ParamList{{"x", x}, {"w", w}, {"b", b}}};
  });
  lin("adaptive_avg_pool2d", 0x107, [](Rng& rng) {
    const int k = pick(rng, 1, 4);
    Tensor x = leaf({2, pick(rng, k, 9), pick(rng, k, 9)}, rng);
    const Tensor r = random_tensor({2, k, k}, rng);
    return std::pair{std::function<Tensor()>([=] { return ops::sum(ops::mul(ops::adaptive_avg_pool2d(x, k), r)); }),
                     ParamList{{"x", x}}};
  });
  lin("bilinear_resize", 0x108, [](Rng& rng) {
    const int oh = pick(rng, 1, 12), ow = pick(rng, 1, 12);
    Tensor x = leaf({2, pick(rng, 1, 6), pick(rng, 1, 6)}, rng);
    const Tensor r = random_tensor({2, oh, ow}, rng);
    return std::pair{std::function<Tensor()>([=] { return ops::sum(ops::mul(ops::bilinear_resize(x, oh, ow), r)); }),
                     ParamList{{"x", x}}};
  });

  nonlin("softmax", 0x201, [](Rng& rng) {
    Tensor x = leaf({3, 5}, rng, 2.0);
    const Tensor r = random_tensor({3, 5}, rng);
    return std::pair{std::function<Tensor()>([=] { return ops::sum(ops::mul(ops::softmax(x), r)); }),
                     ParamList{{"x", x}}};
  });
  nonlin("layer_norm", 0x202, [](Rng& rng) {
    Tensor x = leaf({3, 6}, rng), g = leaf({6}, rng), b = leaf({6}, rng);
    const Tensor r = random_tensor({3, 6}, rng);
    return std::pair{std::function<Tensor()>([=] { return ops::sum(ops::mul(ops::layer_norm(x, g, b), r)); }),
                     ParamList{{"x", x}, {"gamma", g}, {"beta", b}}};
  });
  nonlin("gelu", 0x203, [](Rng& rng) {
    Tensor x = leaf({4, 5}, rng, 2.0);
    const Tensor r = random_tensor({4, 5}, rng);
    return std::pair{std::function<Tensor()>([=] { return ops::sum(ops::mul(ops::gelu(x), r)); }), ParamList{{"x", x}}};
  });
  nonlin("cross_entropy", 0x204, [](Rng& rng) {
    Tensor x = leaf({4, 3, 3}, rng, 2.0);
    LabelMask m(3, 3);
    for (auto& v : m.values) v = static_cast<std::uint8_t>(rng.below(4));
    m.values[4] = kIgnoreLabel;
    return std::pair{std::function<Tensor()>([=] { return cross_entropy_loss(x, m); }), ParamList{{"logits", x}}};
  });
  nonlin("mhsa", 0x205, [](Rng& rng) {
    Tensor x = leaf({5, 8}, rng);
    MultiHeadAttention a{rand_linear(8, 24, rng), rand_linear(8, 8, rng), 2};
    ParamList p{{"x", x}};
    a.collect("attn", p);
    const Tensor r = random_tensor({5, 8}, rng);
    return std::pair{std::function<Tensor()>([=] { return ops::sum(ops::mul(mhsa(x, a), r)); }), p};
  });
  nonlin("transformer_block", 0x206, [](Rng& rng) {
    Tensor x = leaf({4, 8}, rng);
    TransformerBlock b = TransformerBlock::make(8, 2, rng, 0.3);
    ParamList p;
    b.collect("block", p);
    randomize_zeros(p, rng, 0.3);
    make_leaves(p);
    p.push_back({"x", x});
    const Tensor r = random_tensor({4, 8}, rng);
    return std::pair{std::function<Tensor()>([=] { return ops::sum(ops::mul(transformer_block(x, b), r)); }), p};
  });
  nonlin("fusion_fuse", 0x207, [](Rng& rng) {
    Tensor a = leaf({9, 4}, rng), d = leaf({9, 4}, rng);
    FusionParams f = FusionParams::make(4, 8, 2, rng, 0.4);
    ParamList p;
    f.collect("fusion", p);
    randomize_zeros(p, rng, 0.4);
    make_leaves(p);
    p.push_back({"rgb", a});
    p.push_back({"depth", d});
    const Tensor r1 = random_tensor({9, 4}, rng), r2 = random_tensor({9, 4}, rng);
    return std::pair{std::function<Tensor()>([=] {
                       const FusionOutput o = fuse(TokenGrid(3, 3, a), TokenGrid(3, 3, d), f);
                       return ops::add(ops::sum(ops::mul(o.rgb.tokens, r1)), ops::sum(ops::mul(o.depth.tokens, r2)));
                     }),
                     p};
  });
  nonlin("convnext_block", 0x208, [](Rng& rng) {
    Tensor x = leaf({8, 4, 5}, rng);
    ConvNeXtBlock b = ConvNeXtBlock::make(8, rng, 0.3);
    ParamList p;
    b.collect("block", p);
    randomize_zeros(p, rng, 0.3);
    make_leaves(p);
    p.push_back({"x", x});
    const Tensor r = random_tensor({8, 4, 5}, rng);
    return std::pair{std::function<Tensor()>([=] { return ops::sum(ops::mul(convnext_block(x, b), r)); }), p};
  });

  {
    // Whole model, every parameter, on the small gradient-check config.
    // Zero-initialized tensors are perturbed so no path is trivially dead.
    ModelConfig cfg = grad_check_config();
    cfg.seed = opt.seed;
    Model m = build_model(cfg);
    ParamList params = m.parameters();
    Rng rng = Rng::derive(opt.seed, 0x301);
    randomize_zeros(params, rng, 0.05);
    SceneSpec spec;
    spec.snap = 1;
    spec.seed = opt.seed;
    const RgbdSample s = generate_dataset(spec, 1, cfg.image_h, cfg.image_w)[0];
    GradCheckOptions go;
    go.step = 1e-4;
    go.tolerance = kEndToEndTol;
    const GradCheckReport r =
        grad_check([&] { return cross_entropy_loss(forward(m, s.rgb, s.depth), s.label); }, params, go);
    std::string worst;
    double w = -1.0;
    for (const auto& t : r.tensors)
      if (t.max_rel_error > w) {
        w = t.max_rel_error;
        worst = t.name;
      }
    out.push_back(within("gradient", "end_to_end_model", r.checked >= 200 ? r.max_rel_error : 1.0, kEndToEndTol,
                         std::to_string(r.checked) + " parameters, worst " + worst));
  }
  return out;
}

}  // namespace surgdepth_verify

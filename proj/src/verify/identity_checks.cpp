// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

#include "common.hpp"
#include "surgdepth/autograd.hpp"
#include "surgdepth/checkpoint.hpp"
#include "surgdepth/data.hpp"
#include "surgdepth/loss.hpp"
#include "surgdepth/netpbm.hpp"
#include "surgdepth/ops.hpp"
#include "surgdepth/optim.hpp"
#include "surgdepth/train.hpp"
#include "surgdepth_verify/oracles.hpp"
#include "surgdepth_verify/suite.hpp"

namespace surgdepth_verify {

using namespace surgdepth;

namespace {

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    if (std::memcmp(&a.data()[i], &b.data()[i], sizeof(Scalar)) != 0) return false;
  return true;
}

void zero(Tensor t) {
  for (auto& v : t.mutable_data()) v = 0;
}

double grad_norm(const Tensor& t) {
  double s = 0.0;
  for (Scalar g : t.grad()) s += static_cast<double>(g) * g;
  return std::sqrt(s);
}

ModelConfig small_config() {
  ModelConfig c;
  c.image_h = c.image_w = 32;
  c.patch = 8;
  c.embed_dim = 16;
  c.depth_blocks = 1;
  c.heads = 2;
  c.fusion_k = 2;
  c.decoder_blocks = 1;
  c.num_classes = 4;
  return c;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("surgdepth_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace

std::vector<CheckResult> identity_checks(const Options& opt) {
  std::vector<CheckResult> out;
  Rng rng = Rng::derive(opt.seed, 0x1d);

  {
    FusionParams p = FusionParams::make(8, 16, 2, rng, 0.3);
    zero(p.fc_out_rgb.weight);
    zero(p.fc_out_depth.weight);
    const TokenGrid rgb(4, 4, random_tensor({16, 8}, rng)), depth(4, 4, random_tensor({16, 8}, rng));
    const FusionOutput f = fuse(rgb, depth, p);
    out.push_back(holds("identity", "fusion_zero_output_projection",
                        bit_equal(f.rgb.tokens, rgb.tokens) && bit_equal(f.depth.tokens, depth.tokens),
                        "bit-exact on both streams"));
  }
  {
    TransformerBlock b = TransformerBlock::make(8, 2, rng, 0.3);
    zero(b.attn.proj.weight);
    zero(b.fc2.weight);
    const Tensor x = random_tensor({6, 8}, rng);
    out.push_back(
        holds("identity", "transformer_zero_branch_outputs", bit_equal(transformer_block(x, b), x), "bit-exact"));
  }
  {
    ConvNeXtBlock b = ConvNeXtBlock::make(8, rng, 0.3);
    zero(b.pw2.weight);
    const Tensor x = random_tensor({8, 6, 6}, rng);
    out.push_back(holds("identity", "convnext_zero_pw2", bit_equal(convnext_block(x, b), x), "bit-exact"));
  }
  {
    const EncoderParams p = EncoderParams::make(8, 0, 2, 9, rng);
    const TokenGrid rgb(3, 3, random_tensor({9, 8}, rng)), depth(3, 3, random_tensor({9, 8}, rng));
    const EncodedStreams e = encode(rgb, depth, p);
    out.push_back(holds("identity", "encoder_zero_blocks",
                        bit_equal(e.rgb, rgb.tokens) && bit_equal(e.depth, depth.tokens), "bit-exact"));
  }

  {
    double worst = 0.0;
    bool nonneg = true;
    for (int i = 0; i < opt.instances; ++i) {
      const Tensor y = ops::softmax(random_tensor({pick(rng, 1, 8), pick(rng, 1, 16)}, rng, 5.0), -1);
      const std::int64_t n = y.dim(1);
      for (std::int64_t r = 0; r < y.dim(0); ++r) {
        double s = 0.0;
        for (std::int64_t j = 0; j < n; ++j) {
          s += y.data()[r * n + j];
          nonneg = nonneg && y.data()[r * n + j] >= 0;
        }
        worst = std::max(worst, std::abs(s - 1.0));
      }
    }
    out.push_back(within("normalize", "softmax_rows_sum_to_one", nonneg ? worst : 1.0, 1e-6, "and entries >= 0"));
  }
  {
    double worst = 0.0;
    for (int i = 0; i < opt.instances; ++i) {
      const int h = pick(rng, 2, 6), w = pick(rng, 2, 6), k = pick(rng, 1, std::min(h, w));
      const FusionParams p = FusionParams::make(6, 8, k, rng, 0.5);
      const FusionOutput f =
          fuse(TokenGrid(h, w, random_tensor({h * w, 6}, rng)), TokenGrid(h, w, random_tensor({h * w, 6}, rng)), p);
      for (int r = 0; r < k * k; ++r) {
        double s = 0.0;
        for (int j = 0; j < h * w; ++j) s += f.attention.data()[r * h * w + j];
        worst = std::max(worst, std::abs(s - 1.0));
      }
    }
    out.push_back(within("normalize", "fusion_attention_rows_sum_to_one", worst, 1e-6));
  }
  {
    // One token attends only to itself: output = proj(v).
    const MultiHeadAttention a = MultiHeadAttention::make(8, 2, rng, 0.3);
    const Tensor x = random_tensor({1, 8}, rng);
    const Tensor v = ops::slice(a.qkv(x), 1, 16, 8);
    out.push_back(within("normalize", "mhsa_single_token", oracle::max_abs_diff(mhsa(x, a), a.proj(v)), 1e-6));
  }
  {
    bool ok = true;
    for (int i = 0; i < opt.instances && ok; ++i) {
      const Shape s = {pick(rng, 1, 4), pick(rng, 1, 4), pick(rng, 1, 4)};
      const int axis = pick(rng, 0, 2);
      const Tensor a = random_tensor(s, rng);
      Shape s2 = s;
      s2[axis] = pick(rng, 1, 3);
      const Tensor b = random_tensor(s2, rng);
      const Tensor c = ops::concat({a, b}, axis);
      ok = bit_equal(ops::slice(c, axis, 0, s[axis]), a) && bit_equal(ops::slice(c, axis, s[axis], s2[axis]), b) &&
           bit_equal(ops::concat({a}, axis), a);
    }
    out.push_back(holds("roundtrip", "concat_slice", ok, "bit-exact"));
  }
  {
    bool ok = true;
    for (int i = 0; i < opt.instances && ok; ++i) {
      const int h = pick(rng, 1, 5), w = pick(rng, 1, 5), c = pick(rng, 1, 6);
      const TokenGrid g(h, w, random_tensor({h * w, c}, rng));
      ok = bit_equal(TokenGrid::from_chw(g.to_chw()).tokens, g.tokens);
    }
    out.push_back(holds("roundtrip", "token_grid_chw", ok, "bit-exact"));
  }
  {
    double worst = 0.0;
    for (int i = 0; i < opt.instances; ++i) {
      const int k = pick(rng, 1, 4);
      const Tensor x = random_tensor({pick(rng, 1, 3), k * pick(rng, 1, 4), k * pick(rng, 1, 4)}, rng);
      worst = std::max(
          worst, std::abs(static_cast<double>(ops::mean(ops::adaptive_avg_pool2d(x, k)).item()) - ops::mean(x).item()));
    }
    out.push_back(within("normalize", "pool_mean_preservation", worst, 1e-6, "k divides h and w"));
  }
  {
    const Tensor x = random_tensor({3, 5, 7}, rng);
    out.push_back(holds("identity", "bilinear_same_size", bit_equal(ops::bilinear_resize(x, 5, 7), x), "bit-exact"));
  }

  {
    bool ok = true;
    for (int i = 0; i < opt.instances && ok; ++i) {
      netpbm::Image img{
          pick(rng, 1, 9), pick(rng, 1, 9), rng.bernoulli(0.5) ? 3 : 1, rng.bernoulli(0.5) ? 255 : 65535, {}};
      img.samples.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
      for (auto& s : img.samples) s = static_cast<std::uint16_t>(rng.below(img.maxval + 1));
      const netpbm::Image back = netpbm::decode(netpbm::encode(img));
      ok = back.width == img.width && back.height == img.height && back.channels == img.channels &&
           back.maxval == img.maxval && back.samples == img.samples;
    }
    // Hand-encoded 2x2 P6: red, green / blue, white.
    const std::string text = "P6\n2 2\n255\n";
    std::vector<std::uint8_t> bytes(text.begin(), text.end());
    for (int v : {255, 0, 0, 0, 255, 0, 0, 0, 255, 255, 255, 255}) bytes.push_back(static_cast<std::uint8_t>(v));
    const netpbm::Image hand = netpbm::decode(bytes);
    ok = ok && hand.width == 2 && hand.height == 2 && hand.channels == 3 &&
         hand.samples == std::vector<std::uint16_t>{255, 0, 0, 0, 255, 0, 0, 0, 255, 255, 255, 255};
    out.push_back(holds("roundtrip", "netpbm_encode_decode", ok, "8/16-bit P5/P6 and a hand-encoded P6"));
  }
  {
    TempDir dir("verify_io");
    SceneSpec spec;
    spec.seed = opt.seed;
    const RgbdSample s = generate_dataset(spec, 1, 24, 20)[0];
    write_sample(dir.path, 3, s);
    const RgbdSample back = read_sample(dir.path, 3);
    const double rgb_err = oracle::max_abs_diff(back.rgb, s.rgb), depth_err = oracle::max_abs_diff(back.depth, s.depth);
    const bool ok = back.label == s.label && rgb_err <= 1.0 / 255 && depth_err <= 1.0 / 65535 + 1e-7;
    out.push_back(holds("roundtrip", "sample_ppm_pgm", ok,
                        "rgb err " + std::to_string(rgb_err) + ", depth err " + std::to_string(depth_err)));
  }
  {
    SceneSpec spec;
    spec.seed = opt.seed;
    const RgbdSample s = generate_dataset(spec, 1, 16, 16)[0];
    const RgbdSample twice = hflip(hflip(s));
    out.push_back(holds("identity", "hflip_involution",
                        bit_equal(twice.rgb, s.rgb) && bit_equal(twice.depth, s.depth) && twice.label == s.label));
    const Tensor flat({3, 9, 9}, 0.37f);
    out.push_back(holds("identity", "blur_preserves_constant", bit_equal(gaussian_blur(flat, 1.7), flat)));
    bool in_range = true;
    for (int i = 0; i < 1000 && in_range; ++i) {
      Tensor img({3, 4, 4});
      for (auto& v : img.mutable_data()) v = static_cast<Scalar>(rng.uniform());
      const JitterFactors f{rng.uniform(0.8, 1.2), rng.uniform(0.8, 1.2), rng.uniform(0.8, 1.2),
                            rng.uniform(-0.05, 0.05)};
      const Tensor jittered = color_jitter(img, f);
      for (Scalar v : jittered.data()) in_range = in_range && v >= 0 && v <= 1;
    }
    out.push_back(holds("normalize", "color_jitter_clamped", in_range, "1000 seeded draws"));
  }

  {
    // Same seed, same data: identical loss history and parameters.
    ModelConfig cfg = small_config();
    cfg.seed = opt.seed;
    cfg.lr = 1e-3;
    cfg.epochs = 2;
    cfg.batch_size = 2;
    SceneSpec spec;
    spec.seed = opt.seed;
    Dataset ds;
    ds.num_classes = cfg.num_classes;
    ds.train = generate_dataset(spec, 4, 32, 32);
    std::vector<LossEntry> hist[2];
    std::uint64_t sums[2];
    for (int run = 0; run < 2; ++run) {
      Model m = build_model(cfg);
      TrainOptions to;
      to.skip_validation = true;
      hist[run] = train(m, ds, to).loss_history;
      sums[run] = parameter_checksum(m);
    }
    bool same = sums[0] == sums[1] && hist[0].size() == hist[1].size();
    for (std::size_t i = 0; same && i < hist[0].size(); ++i)
      same = hist[0][i].step == hist[1][i].step && hist[0][i].loss == hist[1][i].loss;
    out.push_back(holds("reproduce", "training_bit_reproducible", same,
                        std::to_string(hist[0].size()) + " steps, with augmentation"));
  }

  {
    // Every fusion tensor and both inputs receive gradient. fc_k.bias is the
    // exception: it shifts every attention logit of a query equally, which
    // softmax cancels, so its gradient is zero.
    FusionParams p = FusionParams::make(6, 8, 2, rng, 0.5);
    Tensor rgb = random_tensor({16, 6}, rng), depth = random_tensor({16, 6}, rng);
    rgb.set_requires_grad(true);
    depth.set_requires_grad(true);
    ParamList params;
    p.collect("fusion", params);
    for (auto& t : params)
      for (auto& v : t.tensor.mutable_data())
        if (v == 0) v = static_cast<Scalar>(0.1 * rng.normal());
    const FusionOutput f = fuse(TokenGrid(4, 4, rgb), TokenGrid(4, 4, depth), p);
    const Tensor r = random_tensor({16, 6}, rng);
    backward(ops::add(ops::sum(ops::mul(f.rgb.tokens, r)), ops::sum(ops::mul(f.depth.tokens, ops::mul(r, r)))));
    bool flows = grad_norm(rgb) > 0 && grad_norm(depth) > 0;
    std::string dead;
    double key_bias = 0.0;
    for (const auto& t : params) {
      if (t.name == "fusion.fc_k.bias") {
        key_bias = grad_norm(t.tensor);
        continue;
      }
      if (!(grad_norm(t.tensor) > 0)) {
        flows = false;
        dead += t.name + " ";
      }
    }
    out.push_back(holds("gradflow", "fusion_all_tensors_receive_grad", flows, dead.empty() ? "" : "dead: " + dead));
    out.push_back(within("gradflow", "fusion_key_bias_grad_vanishes", key_bias, 1e-6, "softmax shift invariance"));
  }
  {
    // Encoder parameters all receive gradient, and depth perturbations reach
    // the logits through the fusion block.
    ModelConfig cfg = small_config();
    cfg.seed = opt.seed;
    Model m = build_model(cfg);
    SceneSpec spec;
    spec.seed = opt.seed;
    RgbdSample s = generate_dataset(spec, 1, 32, 32)[0];
    const Tensor before = forward(m, s.rgb, s.depth);
    Tensor depth2 = s.depth.clone();
    for (auto& v : depth2.mutable_data()) v = std::clamp<Scalar>(v + static_cast<Scalar>(0.2 * rng.uniform()), 0, 1);
    const double delta = oracle::max_abs_diff(forward(m, s.rgb, depth2), before);
    out.push_back(holds("gradflow", "depth_perturbation_changes_logits", delta > 0,
                        "max |delta logits| " + std::to_string(delta)));

    backward(cross_entropy_loss(forward(m, s.rgb, s.depth), s.label));
    ParamList enc;
    m.encoder.collect("encoder", enc);
    std::string dead;
    for (const auto& t : enc)
      if (!(grad_norm(t.tensor) > 0)) dead += t.name + " ";
    out.push_back(
        holds("gradflow", "encoder_all_params_receive_grad", dead.empty(), dead.empty() ? "" : "dead: " + dead));

    // A zero head blocks the first backward pass; one optimizer step later
    // gradient reaches the encoder.
    zero(m.decoder.head.weight);
    zero(m.decoder.head.bias);
    const ParamList all = m.parameters();
    AdamW opt_(all, AdamWOptions{.lr = 1e-3});
    opt_.zero_grad();
    backward(cross_entropy_loss(forward(m, s.rgb, s.depth), s.label));
    opt_.step();
    opt_.zero_grad();
    backward(cross_entropy_loss(forward(m, s.rgb, s.depth), s.label));
    double enc_grad = 0.0;
    for (const auto& t : all)
      if (t.name.rfind("encoder.", 0) == 0) enc_grad += grad_norm(t.tensor);
    out.push_back(holds("gradflow", "zero_head_reaches_encoder_after_one_step", enc_grad > 0,
                        "encoder grad norm " + std::to_string(enc_grad)));
  }
  return out;
}

}  // namespace surgdepth_verify

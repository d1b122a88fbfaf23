// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdio>

#include "common.hpp"
#include "surgdepth/model.hpp"
#include "surgdepth_verify/suite.hpp"

namespace surgdepth_verify {

using namespace surgdepth;

namespace {

constexpr double kReferenceParams = 98.37e6;
constexpr double kReferenceDelta = 103.1e6 - 98.37e6;

std::string millions(std::int64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fM", static_cast<double>(n) / 1e6);
  return buf;
}

// Closed-form decoder size: expand, per-block dw/norm/pw1/pw2, 1x1 head.
std::int64_t decoder_formula(std::int64_t in, int patch, int blocks, int classes) {
  const std::int64_t r = patch / 4, d = in / 8;
  const std::int64_t expand = in * (r * r * d) + r * r * d;
  const std::int64_t block = (d * 49 + d) + 2 * d + (d * 4 * d + 4 * d) + (4 * d * d + d);
  return expand + blocks * block + (d * classes + classes);
}

}  // namespace

std::vector<CheckResult> model_checks(const Options& opt) {
  std::vector<CheckResult> out;

  ModelConfig full = full_vitb_config();
  full.seed = opt.seed;
  const ParamCount rgb = param_count(build_model(full));
  full.decoder_input = DecoderInput::rgb_and_depth;
  const ParamCount both = param_count(build_model(full));
  full.decoder_input = DecoderInput::rgb_only;

  out.push_back(within("params", "full_vitb_total_vs_98.37M",
                       std::abs(static_cast<double>(rgb.total) / kReferenceParams - 1.0), 0.05,
                       millions(rgb.total) + ", relative deviation"));
  const std::int64_t delta = both.total - rgb.total;
  out.push_back(holds("params", "rgb_and_depth_exceeds_rgb_only", delta > 0, millions(both.total)));
  out.push_back(within("params", "decoder_input_delta_vs_4.73M",
                       std::abs(static_cast<double>(delta) / kReferenceDelta - 1.0), 0.30,
                       millions(delta) + ", relative deviation"));

  std::int64_t dec = 0;
  for (const auto& [name, n] : rgb.modules)
    if (name == "decoder") dec = n;
  out.push_back(
      holds("params", "decoder_closed_form", dec == decoder_formula(768, 16, 4, 9), std::to_string(dec) + " scalars"));
  {
    Rng rng(0);
    ParamList l;
    Linear::make(3, 2, rng).collect("fc", l);
    out.push_back(holds("params", "linear_3_to_2", count_scalars(l) == 8));
  }

  const ShapePlan plan = plan_shapes(full);
  out.push_back(holds("shapes", "full_vitb_shape_plan",
                      plan.rgb_tokens == Shape{1200, 768} && plan.encoder_sequence == Shape{2400, 768} &&
                          plan.decoder_grid == Shape{96, 120, 160} && plan.logits == Shape{9, 480, 640},
                      "1200 tokens, 2400 sequence, grid 96x120x160, logits 9x480x640"));

  if (!opt.full_vitb) {
    for (DecoderInput input : {DecoderInput::rgb_only, DecoderInput::rgb_and_depth}) {
      ModelConfig toy = toy_config();
      toy.seed = opt.seed;
      toy.decoder_input = input;
      const Model m = build_model(toy);
      Rng rng = Rng::derive(opt.seed, 0x5a);
      Tensor rgb({3, 64, 64}), depth({1, 64, 64});
      for (auto& x : rgb.mutable_data()) x = static_cast<Scalar>(rng.uniform());
      for (auto& x : depth.mutable_data()) x = static_cast<Scalar>(rng.uniform());
      const Tensor logits = forward(m, rgb, depth);
      out.push_back(holds("shapes", "toy_forward_" + to_string(input), logits.shape() == plan_shapes(toy).logits,
                          shape_str(logits.shape())));
    }
    ModelConfig toy = toy_config();
    const std::int64_t a = param_count(build_model(toy)).total;
    toy.decoder_input = DecoderInput::rgb_and_depth;
    const std::int64_t b = param_count(build_model(toy)).total;
    out.push_back(
        holds("params", "toy_rgb_and_depth_exceeds_rgb_only", b > a, std::to_string(a) + " < " + std::to_string(b)));
  }
  return out;
}

}  // namespace surgdepth_verify

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "surgdepth/model.hpp"
#include "surgdepth/train.hpp"
#include "surgdepth_verify/suite.hpp"

using namespace surgdepth;
namespace sv = surgdepth_verify;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

bool all_pass(const std::vector<sv::CheckResult>& checks, const std::vector<std::string>& names, std::string& failed) {
  bool ok = true;
  for (const auto& n : names) {
    const auto it = std::find_if(checks.begin(), checks.end(), [&](const auto& c) { return c.name == n; });
    if (it == checks.end() || !it->passed) {
      ok = false;
      failed += " " + n;
    }
  }
  return ok;
}

Outcome param_count_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  ModelConfig cfg = full_vitb_config();
  const double rgb = static_cast<double>(param_count(build_model(cfg)).total);
  cfg.decoder_input = DecoderInput::rgb_and_depth;
  const double both = static_cast<double>(param_count(build_model(cfg)).total);
  const double dev = rgb / 98.37e6 - 1.0, delta = both - rgb, delta_dev = delta / (103.1e6 - 98.37e6) - 1.0;
  const double secs = seconds_since(t0);
  return {std::abs(dev) <= 0.05 && delta > 0 && std::abs(delta_dev) <= 0.30 && secs < 10.0,
          fmt("rgb_only %.2fM (%+.1f%%), delta %.2fM (%+.1f%%)", rgb / 1e6, 100 * dev, delta / 1e6, 100 * delta_dev) +
              fmt(", %.1fs", secs)};
}

Outcome gradient_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto checks = sv::gradient_checks(sv::Options{});
  const double secs = seconds_since(t0);
  bool ok = secs < 120.0;
  std::string failed;
  double e2e = 0, worst_op = 0;
  for (const auto& c : checks) {
    ok = ok && c.passed;
    if (!c.passed) failed += " " + c.name;
    if (c.name == "end_to_end_model")
      e2e = c.value;
    else
      worst_op = std::max(worst_op, c.value / c.tolerance);
  }
  return {ok, fmt("end-to-end max rel %.2e (<= 1e-2), per-op worst %.2f of bound, %.1fs", e2e, worst_op, secs) +
                  (failed.empty() ? "" : "; failed:" + failed)};
}

Outcome oracle_criterion() {
  sv::Options opt;
  opt.instances = 20;
  const auto checks = sv::oracle_checks(opt);
  std::string failed;
  const bool ok = all_pass(checks, {"fusion_fuse", "mhsa", "conv2d", "adaptive_avg_pool2d", "bilinear_resize"}, failed);
  double worst = 0;
  for (const auto& c : checks) worst = std::max(worst, c.value);
  return {ok,
          fmt("20 instances each, max abs diff %.2e (<= 1e-5)", worst) + (failed.empty() ? "" : "; failed:" + failed)};
}

Outcome overfit_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  SceneSpec spec;
  spec.depth_coupling = 0.5;
  spec.seed = 0;
  Dataset ds;
  ds.num_classes = 4;
  ds.train = generate_dataset(spec, 8, 64, 64);
  ModelConfig cfg = toy_config();
  cfg.seed = 0;
  cfg.lr = 1e-3;
  cfg.batch_size = 8;
  cfg.epochs = 300;
  cfg.max_steps = 300;
  cfg.augment = false;
  Model m = build_model(cfg);
  TrainOptions o;
  o.skip_validation = true;
  const TrainResult r = train(m, ds, o);
  const double miou = evaluate(m, ds.train).mean_iou, secs = seconds_since(t0);
  return {miou >= 0.95 && r.steps <= 300 && secs < 600.0,
          fmt("train mIoU %.4f after %.0f steps (>= 0.95), %.0fs", miou, r.steps, secs)};
}

Outcome fusion_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> gaps;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SceneSpec spec;
    spec.depth_coupling = 1.0;
    spec.seed = seed;
    const auto all = generate_dataset(spec, 48, 64, 64);
    Dataset ds;
    ds.num_classes = 4;
    ds.train.assign(all.begin(), all.begin() + 32);
    ds.val.assign(all.begin() + 32, all.end());
    double miou[2];
    for (int baseline = 0; baseline < 2; ++baseline) {
      ModelConfig cfg = toy_config();
      cfg.seed = seed;
      cfg.lr = 1e-3;
      cfg.batch_size = 4;
      cfg.epochs = 1000;
      cfg.max_steps = 300;
      cfg.augment = false;
      cfg.rgb_baseline = baseline == 1;
      Model m = build_model(cfg);
      TrainOptions o;
      o.skip_validation = true;
      train(m, ds, o);
      miou[baseline] = evaluate(m, ds.val).mean_iou;
    }
    gaps.push_back(miou[0] - miou[1]);
    per_seed += fmt(" %.3f/%.3f", miou[0], miou[1]);
  }
  std::vector<double> sorted = gaps;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[1], secs = seconds_since(t0);
  return {median >= 0.05 && secs < 1800.0,
          fmt("median val mIoU gap %+.3f (>= 0.05), %.0fs; fused/baseline per seed:", median, secs) + per_seed};
}

Outcome ablation_criterion() {
  SceneSpec spec;
  spec.seed = 0;
  const auto all = generate_dataset(spec, 12, 64, 64);
  Dataset ds;
  ds.num_classes = 4;
  ds.train.assign(all.begin(), all.begin() + 8);
  ds.val.assign(all.begin() + 8, all.end());
  ModelConfig cfg = toy_config();
  cfg.lr = 1e-3;
  cfg.max_steps = 20;
  const AblationTable t = ablate_decoder_depth(cfg, ds);
  std::ostringstream csv;
  write_ablation_csv(csv, t);
  const std::string want = "blocks,decoder_input,miou,params,\"paper (SAR-RARP50, not reproduced)\"";
  bool ok = csv.str().rfind(want + "\n", 0) == 0 && t.rows.size() == 4;
  const int blocks[] = {1, 2, 4, 8};
  const char* ref[] = {"0.843", "0.851", "0.862", "0.856"};
  std::string measured;
  for (std::size_t i = 0; i < t.rows.size() && i < 4; ++i) {
    ok = ok && t.rows[i].decoder_blocks == blocks[i] && t.rows[i].reference_miou == ref[i] && t.rows[i].miou >= 0 &&
         t.rows[i].miou <= 1;
    measured += fmt(" %.0f:%.3f", blocks[i], t.rows[i].miou);
  }
  return {ok, "4 rows, reference column 0.843/0.851/0.862/0.856; toy mIoU" + measured};
}

Outcome identity_criterion() {
  const auto checks = sv::identity_checks(sv::Options{});
  std::string failed;
  const bool ok =
      all_pass(checks,
               {"fusion_zero_output_projection", "transformer_zero_branch_outputs", "convnext_zero_pw2",
                "softmax_rows_sum_to_one", "fusion_attention_rows_sum_to_one", "concat_slice", "pool_mean_preservation",
                "netpbm_encode_decode", "sample_ppm_pgm", "training_bit_reproducible"},
               failed);
  int passed = 0;
  for (const auto& c : checks) passed += c.passed;
  return {ok, fmt("%.0f of %.0f identity/normalization/round-trip checks pass", passed, checks.size()) +
                  (failed.empty() ? "" : "; failed:" + failed)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 parameter count (full ViT-B)", param_count_criterion},
      {"2 gradient correctness", gradient_criterion},
      {"3 oracle equivalence", oracle_criterion},
      {"4 overfit sanity", overfit_criterion},
      {"5 fusion directional benefit", fusion_criterion},
      {"6 ablation harness fidelity", ablation_criterion},
      {"7 identity and normalization suite", identity_criterion},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s  %-36s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

// surgdepth: dataset generation, training, evaluation, ablations,
// verification and parameter counting.
//
// Exit codes: 0 success, 1 verification failure, 2 numeric abort,
// 3 config/checkpoint mismatch, 64 usage error, 65 bad data, 74 I/O error.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "surgdepth/checkpoint.hpp"
#include "surgdepth/config.hpp"
#include "surgdepth/data.hpp"
#include "surgdepth/errors.hpp"
#include "surgdepth/model.hpp"
#include "surgdepth/train.hpp"
#include "surgdepth_verify/suite.hpp"

namespace fs = std::filesystem;
using namespace surgdepth;

namespace {

enum ExitCode {
  kOk = 0,
  kVerifyFailed = 1,
  kNumericAbort = 2,
  kMismatch = 3,
  kUsage = 64,
  kDataError = 65,
  kSoftware = 70,
  kIoError = 74,
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// A flag that forwards its value as a config key. Values given this way are
// applied after the config file.
void knob(CLI::App* app, KeyValues& sink, const std::string& flag, const std::string& key, const std::string& fallback,
          const std::string& help) {
  app->add_option_function<std::string>(
         flag, [&sink, key](const std::string& v) { sink.emplace_back(key, v); }, help)
      ->default_str(fallback)
      ->type_name("VALUE");
}

void model_knobs(CLI::App* app, KeyValues& sink, bool architecture) {
  const ModelConfig d = toy_config();
  knob(app, sink, "--lr", "lr", fmt(d.lr), "AdamW learning rate");
  knob(app, sink, "--weight-decay", "weight_decay", fmt(d.weight_decay), "decoupled weight decay");
  knob(app, sink, "--epochs", "epochs", std::to_string(d.epochs), "training epochs");
  knob(app, sink, "--batch-size", "batch_size", std::to_string(d.batch_size), "samples per optimizer step");
  knob(app, sink, "--max-steps", "max_steps", std::to_string(d.max_steps), "stop after this many steps (0 = no cap)");
  knob(app, sink, "--seed", "seed", std::to_string(d.seed), "init, shuffle and augmentation seed");
  knob(app, sink, "--augment", "augment", d.augment ? "true" : "false", "flip, blur and color jitter");
  knob(app, sink, "--init-std", "init_std", fmt(d.init_std), "truncated-normal init std for weights");
  if (!architecture) return;
  knob(app, sink, "--patch", "patch", std::to_string(d.patch), "patch size");
  knob(app, sink, "--embed-dim", "embed_dim", std::to_string(d.embed_dim), "token width C");
  knob(app, sink, "--depth-blocks", "depth_blocks", std::to_string(d.depth_blocks), "transformer blocks");
  knob(app, sink, "--heads", "heads", std::to_string(d.heads), "attention heads");
  knob(app, sink, "--fusion-k", "fusion_k", std::to_string(d.fusion_k), "pooled query grid size");
  knob(app, sink, "--fusion-dim", "fusion_dim", std::to_string(d.fusion_dim), "fusion width (0 = 2C)");
  knob(app, sink, "--decoder-blocks", "decoder_blocks", std::to_string(d.decoder_blocks), "ConvNeXt blocks");
  knob(app, sink, "--decoder-input", "decoder_input", to_string(d.decoder_input), "rgb_only or rgb_and_depth");
  knob(app, sink, "--rgb-baseline", "rgb_baseline", d.rgb_baseline ? "true" : "false",
       "zero the depth input and query fusion with RGB twice");
}

KeyValues merged(const std::string& config_file, const KeyValues& flags) {
  KeyValues kv;
  if (!config_file.empty()) kv = read_config_file(config_file);
  kv.insert(kv.end(), flags.begin(), flags.end());
  return kv;
}

ModelConfig resolve_model(ModelConfig c, const std::string& config_file, const KeyValues& flags) {
  for (const auto& [k, v] : merged(config_file, flags))
    if (!apply_model_key(c, k, v)) throw ConfigError("unknown config key '" + k + "'");
  c.validate();
  return c;
}

// Image size and class count come from the data; a config that disagrees is
// a mismatch.
ModelConfig model_for_data(const Dataset& ds, const std::string& config_file, const KeyValues& flags) {
  const RgbdSample& first = ds.train.empty() ? ds.val.front() : ds.train.front();
  ModelConfig c = toy_config();
  c.image_h = first.height();
  c.image_w = first.width();
  c.num_classes = ds.num_classes;
  c = resolve_model(c, config_file, flags);
  if (c.image_h != first.height() || c.image_w != first.width() || c.num_classes != ds.num_classes)
    throw CheckpointMismatch("config expects " + std::to_string(c.image_h) + "x" + std::to_string(c.image_w) +
                             " images with " + std::to_string(c.num_classes) + " classes; data has " +
                             std::to_string(first.height()) + "x" + std::to_string(first.width()) + " with " +
                             std::to_string(ds.num_classes));
  return c;
}

void write_config(const fs::path& path, const ModelConfig& c) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  for (const auto& [k, v] : model_keys(c)) f << k << '=' << v << '\n';
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  return f;
}

void print_report(const MetricsReport& r) {
  for (std::size_t c = 0; c < r.per_class_iou.size(); ++c) {
    if (r.per_class_iou[c])
      std::printf("class %zu  IoU %.4f\n", c, *r.per_class_iou[c]);
    else
      std::printf("class %zu  IoU   n/a\n", c);
  }
  std::printf("mIoU %.4f  pixel accuracy %.4f\n", r.mean_iou, r.pixel_accuracy);
}

// --- gen-data ---------------------------------------------------------------

struct GenData {
  std::string config_file;
  KeyValues flags;
  std::string out = "data";
};

int gen_data(const GenData& g) {
  SceneSpec spec;
  int n = 8, size = 64;
  double val_fraction = 0.25;
  for (const auto& [k, v] : merged(g.config_file, g.flags)) {
    if (k == "n")
      n = std::stoi(v);
    else if (k == "size")
      size = std::stoi(v);
    else if (k == "val_fraction")
      val_fraction = std::stod(v);
    else if (!apply_scene_key(spec, k, v))
      throw ConfigError("unknown config key '" + k + "'");
  }
  if (n < 1) throw ConfigError("n must be >= 1");
  if (size < 4) throw ConfigError("size must be >= 4");
  spec.validate();

  const fs::path dir = g.out;
  fs::create_directories(dir);
  const std::vector<RgbdSample> samples = generate_dataset(spec, n, size, size);
  const SplitIndices split = split_indices(n, val_fraction, spec.seed);
  std::vector<ManifestEntry> manifest;
  for (int i = 0; i < n; ++i) {
    write_sample(dir, i, samples[i]);
    const bool val = std::binary_search(split.val.begin(), split.val.end(), i);
    manifest.push_back({i, val ? "val" : "train", size, size, spec.num_classes});
  }
  write_manifest(dir, manifest);
  std::printf("wrote %d samples (%zu train, %zu val) to %s\n", n, split.train.size(), split.val.size(),
              dir.string().c_str());
  std::printf("rgb-ambiguous pixel fraction %.4f\n", rgb_ambiguous_fraction(samples));
  return kOk;
}

// --- train --------------------------------------------------------------------

struct TrainArgs {
  std::string config_file;
  KeyValues flags;
  std::string data;
  std::string out = "run";
};

int train_cmd(const TrainArgs& a) {
  const Dataset ds = load_dataset(a.data);
  const ModelConfig cfg = model_for_data(ds, a.config_file, a.flags);
  const fs::path out = a.out;
  fs::create_directories(out);
  write_config(out / "config.txt", cfg);

  Model model = build_model(cfg);
  const std::uint64_t initial = parameter_checksum(model);
  std::ofstream log = open_out(out / "metrics.jsonl");
  TrainOptions opts;
  opts.best_checkpoint = out / "best.ckpt";
  opts.metrics_log = &log;
  const TrainResult r = train(model, ds, opts);
  save_checkpoint(out / "final.ckpt", model);

  std::printf("steps %d  epochs %zu\n", r.steps, r.epochs.size());
  if (!r.loss_history.empty()) std::printf("final loss %.5f\n", r.loss_history.back().loss);
  if (r.best_epoch > 0) std::printf("best epoch %d  val mIoU %.4f\n", r.best_epoch, r.best_val_miou);
  if (!r.epochs.empty()) std::printf("final val mIoU %.4f\n", r.epochs.back().val.mean_iou);
  std::printf("checksum initial %016llx  final %016llx\n", static_cast<unsigned long long>(initial),
              static_cast<unsigned long long>(parameter_checksum(model)));
  return kOk;
}

// --- eval ---------------------------------------------------------------------

struct EvalArgs {
  std::string config_file;
  std::string checkpoint;
  std::string data;
  std::string split = "val";
  std::string out = "eval.json";
};

int eval_cmd(const EvalArgs& a) {
  const Dataset ds = load_dataset(a.data);
  Model model;
  if (a.config_file.empty()) {
    model = load_model(a.checkpoint);
  } else {
    model = build_model(model_for_data(ds, a.config_file, {}));
    load_checkpoint(a.checkpoint, model);
  }
  const ModelConfig& c = model.config;

  std::vector<RgbdSample> set;
  std::string split = a.split;
  if (split == "val" && ds.val.empty()) split = "train";
  if (split == "val" || split == "all") set.insert(set.end(), ds.val.begin(), ds.val.end());
  if (split == "train" || split == "all") set.insert(set.end(), ds.train.begin(), ds.train.end());
  for (const auto& s : set)
    if (s.height() != c.image_h || s.width() != c.image_w || ds.num_classes != c.num_classes)
      throw CheckpointMismatch("checkpoint expects " + std::to_string(c.image_h) + "x" + std::to_string(c.image_w) +
                               " images with " + std::to_string(c.num_classes) + " classes");

  const MetricsReport r = evaluate(model, set);
  std::printf("%s split, %zu samples\n", split.c_str(), set.size());
  print_report(r);

  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& v : r.per_class_iou) per_class.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
  const nlohmann::json j = {
      {"checkpoint", a.checkpoint},         {"split", split},        {"samples", set.size()}, {"miou", r.mean_iou},
      {"pixel_accuracy", r.pixel_accuracy}, {"per_class", per_class}};
  open_out(a.out) << j.dump(2) << '\n';
  return kOk;
}

// --- ablate -------------------------------------------------------------------

struct AblateArgs {
  std::string config_file;
  KeyValues flags;
  std::string study;
  std::string data;
  std::string out = "ablation.csv";
  std::vector<int> blocks = kDefaultDecoderDepths;
};

int ablate_cmd(const AblateArgs& a) {
  const Dataset ds = load_dataset(a.data);
  const ModelConfig cfg = model_for_data(ds, a.config_file, a.flags);
  const AblationTable t =
      a.study == "decoder-depth" ? ablate_decoder_depth(cfg, ds, a.blocks) : ablate_decoder_input(cfg, ds);
  std::ofstream f = open_out(a.out);
  write_ablation_csv(f, t);
  write_ablation_csv(std::cout, t);
  return kOk;
}

// --- verify / param-count -----------------------------------------------------

int verify_cmd(const surgdepth_verify::Options& opt) {
  const surgdepth_verify::Report r = surgdepth_verify::run_verification(opt);
  surgdepth_verify::print_table(std::cout, r);
  return r.passed() ? kOk : kVerifyFailed;
}

struct ParamCountArgs {
  std::string config_file;
  KeyValues flags;
  std::string preset = "full-vitb";
  bool breakdown = false;
};

int param_count_cmd(const ParamCountArgs& a) {
  const ModelConfig base = a.preset == "toy" ? toy_config() : full_vitb_config();
  const ModelConfig cfg = resolve_model(base, a.config_file, a.flags);
  const ParamCount pc = param_count(build_model(cfg));
  if (a.breakdown)
    for (const auto& [name, n] : pc.modules) std::printf("%-18s %12lld\n", name.c_str(), static_cast<long long>(n));
  std::printf("%-18s %12lld  (%.2fM)\n", "total", static_cast<long long>(pc.total), pc.total / 1e6);
  return kOk;
}

int run(int argc, char** argv) {
  CLI::App app{"RGB-D surgical scene segmentation toolkit", "surgdepth"};
  app.require_subcommand(1);
  app.get_formatter()->column_width(36);

  GenData gen;
  auto* g = app.add_subcommand("gen-data", "generate a synthetic RGB-D dataset");
  g->add_option("--config", gen.config_file, "key=value file (scene keys, n, size, val_fraction)");
  g->add_option("--out", gen.out, "output directory")->capture_default_str();
  knob(g, gen.flags, "--n", "n", "8", "number of samples");
  knob(g, gen.flags, "--size", "size", "64", "image height and width");
  knob(g, gen.flags, "--classes", "num_classes", "4", "number of classes");
  knob(g, gen.flags, "--depth-coupling", "depth_coupling", "0.5", "share of regions labelled by depth only");
  knob(g, gen.flags, "--seed", "seed", "0", "generator and split seed");
  knob(g, gen.flags, "--val-fraction", "val_fraction", "0.25", "share of samples in the val split");
  knob(g, gen.flags, "--min-shapes", "min_shapes", "3", "fewest regions per image");
  knob(g, gen.flags, "--max-shapes", "max_shapes", "5", "most regions per image");
  knob(g, gen.flags, "--snap", "snap", "4", "region boxes snap to this pixel grid");
  knob(g, gen.flags, "--layer-noise", "layer_noise", "0.01", "per-pixel depth noise bound");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train a model; writes metrics.jsonl, best.ckpt, final.ckpt");
  t->add_option("--config", tr.config_file, "key=value model config file");
  t->add_option("--data", tr.data, "dataset directory")->required();
  t->add_option("--out", tr.out, "output directory")->capture_default_str();
  model_knobs(t, tr.flags, true);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "evaluate a checkpoint; writes eval.json");
  e->add_option("--config", ev.config_file, "model config the checkpoint must match");
  e->add_option("--checkpoint", ev.checkpoint, "checkpoint file")->required();
  e->add_option("--data", ev.data, "dataset directory")->required();
  e->add_option("--split", ev.split, "val falls back to train when empty")
      ->capture_default_str()
      ->check(CLI::IsMember({"val", "train", "all"}));
  e->add_option("--out", ev.out, "JSON report path")->capture_default_str();

  AblateArgs ab;
  auto* a = app.add_subcommand("ablate", "decoder ablations; writes a CSV table");
  a->add_option("--study", ab.study, "decoder-depth or decoder-input")
      ->required()
      ->check(CLI::IsMember({"decoder-depth", "decoder-input"}));
  a->add_option("--config", ab.config_file, "key=value model config file");
  a->add_option("--data", ab.data, "dataset directory")->required();
  a->add_option("--out", ab.out, "CSV path")->capture_default_str();
  a->add_option("--blocks", ab.blocks, "block counts for decoder-depth")->capture_default_str()->delimiter(',');
  model_knobs(a, ab.flags, true);

  surgdepth_verify::Options vo;
  std::string preset = "toy";
  auto* v = app.add_subcommand("verify", "run the invariant suite");
  v->add_option("--config", preset, "toy runs everything; full-vitb runs counts and shapes only")
      ->capture_default_str()
      ->check(CLI::IsMember({"toy", "full-vitb"}));
  v->add_option("--seed", vo.seed, "seed for random instances")->capture_default_str();
  v->add_option("--instances", vo.instances, "random instances per oracle check")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  v->add_option("--sabotage", vo.fault, "inject a kernel fault (matmul, softmax, conv2d, adaptive_pool, bilinear)")
      ->default_str("none")
      ->check(CLI::IsMember({"none", "matmul", "softmax", "conv2d", "adaptive_pool", "bilinear"}));

  ParamCountArgs pc;
  auto* p = app.add_subcommand("param-count", "count learnable scalars");
  p->add_option("--config", pc.config_file, "key=value model config file");
  p->add_option("--preset", pc.preset, "base configuration")
      ->capture_default_str()
      ->check(CLI::IsMember({"toy", "full-vitb"}));
  p->add_flag("--breakdown", pc.breakdown, "per-module counts");
  knob(p, pc.flags, "--decoder-input", "decoder_input", "rgb_only", "rgb_only or rgb_and_depth");
  knob(p, pc.flags, "--fusion-k", "fusion_k", "7", "pooled query grid size");
  knob(p, pc.flags, "--decoder-blocks", "decoder_blocks", "4", "ConvNeXt blocks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kUsage;
  }

  if (*g) return gen_data(gen);
  if (*t) return train_cmd(tr);
  if (*e) return eval_cmd(ev);
  if (*a) return ablate_cmd(ab);
  if (*v) {
    vo.full_vitb = preset == "full-vitb";
    return verify_cmd(vo);
  }
  return param_count_cmd(pc);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const TrainingAborted& e) {
    std::fprintf(stderr, "training aborted: %s\n", e.what());
    return kNumericAbort;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kNumericAbort;
  } catch (const CheckpointMismatch& e) {
    std::fprintf(stderr, "mismatch: %s\n", e.what());
    return kMismatch;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kUsage;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kDataError;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return kDataError;
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kIoError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: bad numeric value (%s)\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kSoftware;
  }
}

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "surgdepth/train.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "surgdepth/autograd.hpp"
#include "surgdepth/checkpoint.hpp"
#include "surgdepth/loss.hpp"
#include "surgdepth/optim.hpp"

namespace surgdepth {
namespace {

constexpr std::uint64_t kTrainStream = 0x747261696eULL;

nlohmann::json per_class_json(const MetricsReport& r) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& v : r.per_class_iou) arr.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
  return arr;
}

std::string abort_message(const std::string& cause, int step, double lr, const ParamList& params) {
  std::ostringstream os;
  os << "training aborted at step " << step << " (lr " << lr << "): " << cause;
  double total = 0.0;
  std::string worst;
  double worst_norm = -1.0;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    double sq = 0.0;
    for (Scalar g : p.tensor.grad()) sq += static_cast<double>(g) * g;
    total += sq;
    const double n = std::sqrt(sq);
    if (!std::isfinite(n) || n > worst_norm) {
      worst_norm = std::isfinite(n) ? n : INFINITY;
      worst = p.name;
      if (!std::isfinite(n)) break;
    }
  }
  os << "; grad norm total " << std::sqrt(total);
  if (!worst.empty()) os << ", largest " << worst << " " << worst_norm;
  return os.str();
}

}  // namespace

MetricsReport evaluate(const Model& model, std::span<const RgbdSample> samples) {
  ConfusionMatrix cm(model.config.num_classes);
  for (const auto& s : samples) {
    const Tensor logits = forward(model, s.rgb, s.depth);
    cm.add(predict(logits), s.label, model.config.ignore_index);
  }
  return cm.report();
}

TrainResult train(Model& model, const Dataset& dataset, const TrainOptions& options) {
  const ModelConfig& cfg = model.config;
  cfg.validate();
  if (dataset.train.empty()) throw DataError("training split is empty");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");

  const std::span<const RgbdSample> val_set = dataset.val.empty() ? dataset.train : dataset.val;
  const ParamList params = model.parameters();
  AdamW opt(params, AdamWOptions{.lr = cfg.lr, .weight_decay = cfg.weight_decay});
  Rng rng(Rng::derive(cfg.seed, kTrainStream));
  TrainResult result;

  auto log = [&](const nlohmann::json& j) {
    if (options.metrics_log) *options.metrics_log << j.dump() << '\n';
  };

  if (cfg.epochs == 0 && !options.best_checkpoint.empty()) save_checkpoint(options.best_checkpoint, model);

  std::vector<int> order(dataset.train.size());
  const double inv_batch = 1.0 / cfg.batch_size;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.max_steps > 0 && result.steps >= cfg.max_steps) break;
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<int>(order));
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      if (cfg.max_steps > 0 && result.steps >= cfg.max_steps) break;
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      opt.zero_grad();
      double batch_loss = 0.0;
      const int step = result.steps + 1;
      try {
        for (std::size_t i = start; i < end; ++i) {
          const RgbdSample& raw = dataset.train[order[i]];
          const RgbdSample s = cfg.augment ? augment(raw, rng, options.augment) : raw;
          const Tensor loss = cross_entropy_loss(forward(model, s.rgb, s.depth), s.label, cfg.ignore_index);
          const double value = loss.item();
          if (!std::isfinite(value)) throw NumericError("non-finite loss " + std::to_string(value));
          batch_loss += value;
          backward(ops::scale(loss, static_cast<Scalar>(inv_batch)));
        }
      } catch (const NumericError& e) {
        throw TrainingAborted(abort_message(e.what(), step, cfg.lr, params), step);
      }
      batch_loss /= static_cast<double>(end - start);
      for (const auto& p : params) {
        if (!p.tensor.has_grad()) continue;
        for (Scalar g : p.tensor.grad())
          if (!std::isfinite(g))
            throw TrainingAborted(abort_message("non-finite gradient in " + p.name, step, cfg.lr, params), step);
      }
      opt.step();
      result.steps = step;
      result.loss_history.push_back({step, batch_loss});
      log({{"step", step}, {"loss", batch_loss}});
    }
    if (options.skip_validation) continue;
    EpochRecord rec{epoch + 1, result.steps, evaluate(model, val_set)};
    rec.val.loss_history = result.loss_history;
    log({{"epoch", rec.epoch},
         {"step", rec.step},
         {"miou", rec.val.mean_iou},
         {"pixel_accuracy", rec.val.pixel_accuracy},
         {"per_class", per_class_json(rec.val)}});
    if (rec.val.mean_iou > result.best_val_miou) {
      result.best_val_miou = rec.val.mean_iou;
      result.best_epoch = rec.epoch;
      if (!options.best_checkpoint.empty()) save_checkpoint(options.best_checkpoint, model);
    }
    result.epochs.push_back(std::move(rec));
  }
  return result;
}

namespace {

std::string fixed3(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);
  os << v;
  return os.str();
}

double train_and_score(const ModelConfig& cfg, const Dataset& dataset, std::int64_t* params) {
  Model model = build_model(cfg);
  *params = param_count(model).total;
  TrainOptions opts;
  opts.skip_validation = true;
  train(model, dataset, opts);
  return evaluate(model, dataset.val.empty() ? dataset.train : dataset.val).mean_iou;
}

}  // namespace

AblationTable ablate_decoder_depth(const ModelConfig& config, const Dataset& dataset,
                                   const std::vector<int>& blocks_list) {
  static const std::vector<std::pair<int, const char*>> reference = {
      {1, "0.843"}, {2, "0.851"}, {4, "0.862"}, {8, "0.856"}};
  AblationTable table{"decoder-depth", {}};
  for (int blocks : blocks_list) {
    ModelConfig cfg = config;
    cfg.decoder_blocks = blocks;
    AblationRow row;
    row.variant = std::to_string(blocks) + " blocks";
    row.decoder_blocks = blocks;
    row.decoder_input = to_string(cfg.decoder_input);
    row.miou = train_and_score(cfg, dataset, &row.params);
    for (const auto& [b, ref] : reference)
      if (b == blocks) row.reference_miou = ref;
    table.rows.push_back(row);
  }
  return table;
}

AblationTable ablate_decoder_input(const ModelConfig& config, const Dataset& dataset) {
  AblationTable table{"decoder-input", {}};
  const struct {
    DecoderInput input;
    const char* label;
    const char* miou;
    const char* params;
  } variants[] = {{DecoderInput::rgb_only, "RGB", "0.862", "98.37M"},
                  {DecoderInput::rgb_and_depth, "RGB+Depth", "0.823", "103.1M"}};
  for (const auto& v : variants) {
    ModelConfig cfg = config;
    cfg.decoder_input = v.input;
    AblationRow row;
    row.variant = v.label;
    row.decoder_blocks = cfg.decoder_blocks;
    row.decoder_input = to_string(v.input);
    row.miou = train_and_score(cfg, dataset, &row.params);
    row.reference_miou = v.miou;
    row.reference_params = v.params;
    table.rows.push_back(row);
  }
  return table;
}

void write_ablation_csv(std::ostream& out, const AblationTable& table) {
  const std::string ref = std::string("\"") + kReferenceColumn + "\"";
  if (table.study == "decoder-depth") {
    out << "blocks,decoder_input,miou,params," << ref << '\n';
    for (const auto& r : table.rows)
      out << r.decoder_blocks << ',' << r.decoder_input << ',' << fixed3(r.miou) << ',' << r.params << ','
          << r.reference_miou << '\n';
  } else {
    out << "decoder_input,blocks,miou,params," << ref << ",\"paper params (not reproduced)\"\n";
    for (const auto& r : table.rows)
      out << r.decoder_input << ',' << r.decoder_blocks << ',' << fixed3(r.miou) << ',' << r.params << ','
          << r.reference_miou << ',' << r.reference_params << '\n';
  }
}

}  // namespace surgdepth

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "surgdepth/data.hpp"
#include "surgdepth/errors.hpp"
#include "surgdepth/metrics.hpp"
#include "surgdepth/model.hpp"

namespace surgdepth {

// Training hit a non-finite loss or gradient. what() carries the step, the
// learning rate and the gradient norms.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(const std::string& message, int step) : NumericError(message), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

struct EpochRecord {
  int epoch = 0;
  int step = 0;
  MetricsReport val;
};

struct TrainOptions {
  // Written whenever validation mIoU improves; with epochs == 0 the initial
  // weights are written. Empty path disables checkpointing.
  std::filesystem::path best_checkpoint;
  // Receives one JSON object per line for every step and epoch.
  std::ostream* metrics_log = nullptr;
  AugmentOptions augment;
  // Skip the per-epoch validation pass.
  bool skip_validation = false;
};

struct TrainResult {
  std::vector<LossEntry> loss_history;
  std::vector<EpochRecord> epochs;
  int steps = 0;
  int best_epoch = -1;
  double best_val_miou = -1.0;
};

MetricsReport evaluate(const Model& model, std::span<const RgbdSample> samples);

// Trains in place. Validation uses dataset.val, or dataset.train when the
// validation split is empty.
TrainResult train(Model& model, const Dataset& dataset, const TrainOptions& options = {});

// --- ablations ------------------------------------------------------------

inline constexpr char kReferenceColumn[] = "paper (SAR-RARP50, not reproduced)";

struct AblationRow {
  std::string variant;
  int decoder_blocks = 0;
  std::string decoder_input;
  double miou = 0.0;
  std::int64_t params = 0;
  std::string reference_miou;
  std::string reference_params;
};

struct AblationTable {
  std::string study;
  std::vector<AblationRow> rows;
};

inline const std::vector<int> kDefaultDecoderDepths = {1, 2, 4, 8};

AblationTable ablate_decoder_depth(const ModelConfig& config, const Dataset& dataset,
                                   const std::vector<int>& blocks_list = kDefaultDecoderDepths);
AblationTable ablate_decoder_input(const ModelConfig& config, const Dataset& dataset);

void write_ablation_csv(std::ostream& out, const AblationTable& table);

}  // namespace surgdepth

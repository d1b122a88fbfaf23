// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "surgdepth/label_mask.hpp"

namespace surgdepth {

struct LossEntry {
  int step = 0;
  double loss = 0.0;
};

struct MetricsReport {
  // nullopt for classes absent from both prediction and ground truth.
  std::vector<std::optional<double>> per_class_iou;
  // Unweighted mean over classes with a defined IoU.
  double mean_iou = 0.0;
  double pixel_accuracy = 0.0;
  std::vector<LossEntry> loss_history;
};

// Dataset-level confusion counts; IoU is computed from the accumulated
// counts rather than averaged per image.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  // Pixels whose label equals ignore_index are skipped. Predictions or labels
  // outside [0, K) raise DataError.
  void add(const LabelMask& pred, const LabelMask& label, int ignore_index = kIgnoreLabel);

  int num_classes() const { return k_; }
  // count(label, pred)
  std::int64_t count(int label, int pred) const { return counts_[static_cast<std::size_t>(label) * k_ + pred]; }
  std::optional<double> iou(int c) const;
  MetricsReport report() const;

 private:
  int k_;
  std::vector<std::int64_t> counts_;
};

MetricsReport mean_iou(const LabelMask& pred, const LabelMask& label, int num_classes, int ignore_index = kIgnoreLabel);

}  // namespace surgdepth

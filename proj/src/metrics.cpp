// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "surgdepth/metrics.hpp"

#include "surgdepth/errors.hpp"

namespace surgdepth {

ConfusionMatrix::ConfusionMatrix(int num_classes) : k_(num_classes) {
  if (num_classes < 1) throw ConfigError("confusion matrix needs at least one class");
  counts_.assign(static_cast<std::size_t>(k_) * k_, 0);
}

void ConfusionMatrix::add(const LabelMask& pred, const LabelMask& label, int ignore_index) {
  if (pred.h != label.h || pred.w != label.w)
    throw DimensionError("confusion matrix: prediction and label sizes differ");
  for (std::size_t i = 0; i < label.values.size(); ++i) {
    const int l = label.values[i];
    if (l == ignore_index) continue;
    const int p = pred.values[i];
    if (l >= k_ || p >= k_) throw DataError("confusion matrix: class id outside [0, K)");
    ++counts_[static_cast<std::size_t>(l) * k_ + p];
  }
}

std::optional<double> ConfusionMatrix::iou(int c) const {
  std::int64_t tp = count(c, c), fn = 0, fp = 0;
  for (int o = 0; o < k_; ++o) {
    if (o == c) continue;
    fn += count(c, o);
    fp += count(o, c);
  }
  const std::int64_t uni = tp + fn + fp;
  if (uni == 0) return std::nullopt;
  return static_cast<double>(tp) / static_cast<double>(uni);
}

MetricsReport ConfusionMatrix::report() const {
  MetricsReport r;
  double sum = 0.0;
  int defined = 0;
  std::int64_t correct = 0, total = 0;
  for (int c = 0; c < k_; ++c) {
    const auto v = iou(c);
    r.per_class_iou.push_back(v);
    if (v) {
      sum += *v;
      ++defined;
    }
    correct += count(c, c);
    for (int o = 0; o < k_; ++o) total += count(c, o);
  }
  r.mean_iou = defined ? sum / defined : 0.0;
  r.pixel_accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  return r;
}

MetricsReport mean_iou(const LabelMask& pred, const LabelMask& label, int num_classes, int ignore_index) {
  ConfusionMatrix cm(num_classes);
  cm.add(pred, label, ignore_index);
  return cm.report();
}

}  // namespace surgdepth

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "surgdepth/loss.hpp"

#include <cmath>

#include "surgdepth/errors.hpp"

namespace surgdepth {

Tensor cross_entropy_loss(const Tensor& logits, const LabelMask& labels, int ignore_index) {
  if (logits.rank() != 3 || logits.dim(1) != labels.h || logits.dim(2) != labels.w)
    throw DimensionError("cross_entropy_loss: logits " + shape_str(logits.shape()) + " vs labels " +
                         std::to_string(labels.h) + "x" + std::to_string(labels.w));
  const std::int64_t k = logits.dim(0);
  const std::int64_t hw = std::int64_t{labels.h} * labels.w;
  const auto lv = logits.data();
  check_finite(lv, "cross_entropy_loss logits");

  std::vector<Scalar> probs(lv.size());
  double total = 0.0;
  std::int64_t counted = 0;
  for (std::int64_t p = 0; p < hw; ++p) {
    double mx = lv[p];
    for (std::int64_t c = 1; c < k; ++c) mx = std::max(mx, static_cast<double>(lv[c * hw + p]));
    double z = 0.0;
    for (std::int64_t c = 0; c < k; ++c) z += std::exp(lv[c * hw + p] - mx);
    for (std::int64_t c = 0; c < k; ++c) probs[c * hw + p] = static_cast<Scalar>(std::exp(lv[c * hw + p] - mx) / z);
    const int label = labels.values[p];
    if (label == ignore_index) continue;
    if (label < 0 || label >= k)
      throw DataError("cross_entropy_loss: label " + std::to_string(label) + " at pixel " + std::to_string(p) +
                      " outside [0, " + std::to_string(k) + ")");
    total += std::log(z) + mx - lv[label * hw + p];
    ++counted;
  }
  const double value = counted ? total / static_cast<double>(counted) : 0.0;
  return make_result("cross_entropy", {}, {static_cast<Scalar>(value)}, {logits},
                     [logits, labels, ignore_index, k, hw, counted, probs = std::move(probs)](const TensorImpl& o) {
                       if (counted == 0) return;
                       auto g = logits.grad_slot();
                       const double share = o.grad[0] / static_cast<double>(counted);
                       for (std::int64_t p = 0; p < hw; ++p) {
                         const int label = labels.values[p];
                         if (label == ignore_index) continue;
                         for (std::int64_t c = 0; c < k; ++c) {
                           const double target = c == label ? 1.0 : 0.0;
                           g[c * hw + p] += static_cast<Scalar>((probs[c * hw + p] - target) * share);
                         }
                       }
                     });
}

LabelMask predict(const Tensor& logits) {
  if (logits.rank() != 3) throw DimensionError("predict expects (K, H, W) logits");
  const auto k = logits.dim(0);
  LabelMask mask(static_cast<int>(logits.dim(1)), static_cast<int>(logits.dim(2)));
  const std::int64_t hw = logits.dim(1) * logits.dim(2);
  const auto lv = logits.data();
  for (std::int64_t p = 0; p < hw; ++p) {
    std::int64_t best = 0;
    for (std::int64_t c = 1; c < k; ++c)
      if (lv[c * hw + p] > lv[best * hw + p]) best = c;
    mask.values[p] = static_cast<std::uint8_t>(best);
  }
  return mask;
}

}  // namespace surgdepth

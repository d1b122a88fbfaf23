// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "surgdepth/label_mask.hpp"
#include "surgdepth/tensor.hpp"

namespace surgdepth {

// Mean over non-ignored pixels of -log softmax(logits)[label]. logits are
// (K, H, W). Labels outside [0, K) other than ignore_index raise DataError.
// Returns 0 when every pixel is ignored.
Tensor cross_entropy_loss(const Tensor& logits, const LabelMask& labels, int ignore_index = kIgnoreLabel);

// Per-pixel argmax over the class axis; ties go to the lower class id.
LabelMask predict(const Tensor& logits);

}  // namespace surgdepth

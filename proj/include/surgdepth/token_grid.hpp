// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "surgdepth/tensor.hpp"

namespace surgdepth {

// Tokens laid out on an (h, w) grid in row-major spatial order.
struct TokenGrid {
  int h = 0;
  int w = 0;
  Tensor tokens;  // (h * w, C)

  // Validates that `tokens` is (h * w, C).
  TokenGrid(int h, int w, Tensor tokens);
  TokenGrid() = default;

  std::int64_t channels() const { return tokens.dim(1); }
  // (C, h, w) view of the tokens.
  Tensor to_chw() const;
  static TokenGrid from_chw(const Tensor& chw);
};

}  // namespace surgdepth

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

namespace surgdepth {

inline constexpr int kIgnoreLabel = 255;

// Per-pixel class ids in row-major order; kIgnoreLabel marks unlabeled pixels.
struct LabelMask {
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> values;

  LabelMask() = default;
  LabelMask(int h_, int w_, std::uint8_t fill = 0) : h(h_), w(w_), values(static_cast<std::size_t>(h_) * w_, fill) {}

  std::uint8_t& at(int y, int x) { return values[static_cast<std::size_t>(y) * w + x]; }
  std::uint8_t at(int y, int x) const { return values[static_cast<std::size_t>(y) * w + x]; }
  bool operator==(const LabelMask&) const = default;
};

}  // namespace surgdepth

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "surgdepth/token_grid.hpp"

#include "surgdepth/errors.hpp"
#include "surgdepth/ops.hpp"

namespace surgdepth {

TokenGrid::TokenGrid(int h_, int w_, Tensor t) : h(h_), w(w_), tokens(std::move(t)) {
  if (h < 1 || w < 1 || tokens.rank() != 2 || tokens.dim(0) != static_cast<std::int64_t>(h) * w)
    throw DimensionError("token grid " + std::to_string(h) + "x" + std::to_string(w) + " cannot hold tokens of shape " +
                         shape_str(tokens.shape()));
}

Tensor TokenGrid::to_chw() const { return ops::reshape(ops::transpose(tokens), {channels(), h, w}); }

TokenGrid TokenGrid::from_chw(const Tensor& chw) {
  if (chw.rank() != 3) throw DimensionError("from_chw expects (C, h, w), got " + shape_str(chw.shape()));
  const auto c = chw.dim(0), h = chw.dim(1), w = chw.dim(2);
  Tensor flat = ops::reshape(chw, {c, h * w});
  return TokenGrid(static_cast<int>(h), static_cast<int>(w), ops::transpose(flat));
}

}  // namespace surgdepth

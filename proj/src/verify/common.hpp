// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "surgdepth/rng.hpp"
#include "surgdepth/tensor.hpp"

namespace surgdepth_verify {
namespace {

[[maybe_unused]] surgdepth::Tensor random_tensor(surgdepth::Shape shape, surgdepth::Rng& rng, double std = 1.0) {
  surgdepth::Tensor t(std::move(shape));
  for (auto& v : t.mutable_data()) v = static_cast<surgdepth::Scalar>(rng.normal() * std);
  return t;
}

[[maybe_unused]] int pick(surgdepth::Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

}  // namespace
}  // namespace surgdepth_verify

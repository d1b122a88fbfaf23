// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "surgdepth_verify/report.hpp"

namespace surgdepth_verify {

// Kernels and composite blocks against the loop oracles.
std::vector<CheckResult> oracle_checks(const Options& options);
// Residual identities, normalization, round trips, reproducibility.
std::vector<CheckResult> identity_checks(const Options& options);
// Parameter counts and stage shapes; full config when options.full_vitb.
std::vector<CheckResult> model_checks(const Options& options);
// Finite-difference gradient checks, evaluated in double precision.
std::vector<CheckResult> gradient_checks(const Options& options);

Report run_verification(const Options& options);

}  // namespace surgdepth_verify

// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "surgdepth_verify/suite.hpp"

#include "surgdepth/ops.hpp"

namespace surgdepth_verify {

Report run_verification(const Options& options) {
  namespace t = surgdepth::ops::testing;
  t::inject_fault(t::parse_fault(options.fault.empty() ? "none" : options.fault));
  Report report;
  report.append(model_checks(options));
  if (!options.full_vitb) {
    report.append(oracle_checks(options));
    report.append(gradient_checks(options));
    report.append(identity_checks(options));
  }
  t::inject_fault(t::Fault::none);
  return report;
}

}  // namespace surgdepth_verify

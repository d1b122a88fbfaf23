// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

// Types shared by the float and double builds of the verification suite.
// Nothing here depends on the tensor library.
namespace surgdepth_verify {

struct CheckResult {
  std::string group;
  std::string name;
  bool passed = false;
  double value = 0.0;      // measured error or quantity
  double tolerance = 0.0;  // bound that value was compared against
  std::string detail;
};

struct Options {
  // Run only parameter-count and shape checks against the ViT-B config.
  bool full_vitb = false;
  // Random instances per oracle comparison.
  int instances = 20;
  std::uint64_t seed = 0;
  // Name of a kernel fault to inject (see ops::testing::Fault); empty = none.
  std::string fault;
};

struct Report {
  std::vector<CheckResult> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
  int failures() const {
    return static_cast<int>(
        std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) { return !c.passed; }));
  }
  const CheckResult* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
  void append(const std::vector<CheckResult>& more) { checks.insert(checks.end(), more.begin(), more.end()); }
};

inline CheckResult within(std::string group, std::string name, double value, double tolerance,
                          std::string detail = {}) {
  return {std::move(group), std::move(name), value <= tolerance, value, tolerance, std::move(detail)};
}

inline CheckResult holds(std::string group, std::string name, bool ok, std::string detail = {}) {
  return {std::move(group), std::move(name), ok, ok ? 0.0 : 1.0, 0.0, std::move(detail)};
}

inline void print_table(std::ostream& out, const Report& report) {
  char line[512];
  std::snprintf(line, sizeof line, "%-9s %-46s %-4s %12s %12s  %s\n", "group", "check", "ok", "value", "bound",
                "detail");
  out << line;
  for (const auto& c : report.checks) {
    std::snprintf(line, sizeof line, "%-9s %-46s %-4s %12.4g %12.4g  %s\n", c.group.c_str(), c.name.c_str(),
                  c.passed ? "ok" : "FAIL", c.value, c.tolerance, c.detail.c_str());
    out << line;
  }
  out << (report.passed()
              ? "all " + std::to_string(report.checks.size()) + " checks passed\n"
              : std::to_string(report.failures()) + " of " + std::to_string(report.checks.size()) + " checks FAILED\n");
}

}  // namespace surgdepth_verify

// Self-check suite behind `nestbo verify`: derivative oracles, power-function
// identities, subspace contracts and run determinism.
#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace nestbo {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  int kernel_draws = 100;
  int power_draws = 50;
  int monotonicity_draws = 100;
};

/// Runs every check; `progress` (when set) sees each result as it finishes.
std::vector<CheckResult> run_verify(const VerifyOptions& opts = {},
                                    const std::function<void(const CheckResult&)>& progress = {});

void write_check(std::ostream& os, const CheckResult& r);

}  // namespace nestbo

#pragma once

// Built-in oracle and invariant suites run by `entroclip check`.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "entroclip/clipping.hpp"

namespace entroclip {

struct SuiteResult {
  std::string name;
  bool passed = true;
  std::string summary;
  std::vector<std::string> failures;
};

/// Implementations under test. Tests swap in broken versions to confirm a
/// suite notices.
struct CheckHooks {
  std::function<double(double, const ThresholdFn&)> upper_bound = upper_ratio_bound;
  std::function<double(double, const ThresholdFn&)> lower_bound = lower_ratio_bound;
};

SuiteResult check_gradients(std::uint64_t seed = 1, std::size_t cases = 1000);
SuiteResult check_alignment(std::uint64_t seed = 2, std::size_t cases = 1000);
SuiteResult check_entropy_direction(std::uint64_t seed = 3, std::size_t cases = 1000);
SuiteResult check_boundary_identities(const CheckHooks& hooks = {});
SuiteResult check_scheduler();
SuiteResult check_hysteresis(std::uint64_t seed = 4);
SuiteResult check_advantage(std::uint64_t seed = 5, std::size_t cases = 1000);

std::vector<SuiteResult> run_all_checks(const CheckHooks& hooks = {});

} // namespace entroclip

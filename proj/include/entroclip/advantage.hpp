#pragma once

#include <span>
#include <vector>

namespace entroclip {

inline constexpr double kDefaultAdvantageDelta = 1e-4;

/// Group-relative advantages A_i = (r_i - mean) / (std + delta), using the
/// population standard deviation. A group whose rewards are all equal gets
/// exactly zero advantages.
std::vector<double> group_advantages(std::span<const double> rewards,
                                     double delta = kDefaultAdvantageDelta);

} // namespace entroclip

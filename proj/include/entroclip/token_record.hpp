#pragma once

#include <cstddef>
#include <string>

#include "entroclip/clipping.hpp"
#include "entroclip/regions.hpp"

namespace entroclip {

/// One sampled token as seen by the updater.
struct TokenRecord {
  std::size_t context = 0;
  std::size_t step = 0;
  std::size_t action = 0;
  double p_old = 1.0;
  double p_theta = 1.0; // recomputed at update time
  double advantage = 0.0;
  RegionLabel region = RegionLabel::Neutral;
  ClipOutcome clip{};

  double ratio() const { return p_theta / p_old; }
  std::string describe() const;
};

} // namespace entroclip

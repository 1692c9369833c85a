#include "entroclip/regions.hpp"

#include <cmath>

#include "entroclip/error.hpp"
#include "entroclip/token_record.hpp"

namespace entroclip {

std::string_view to_string(RegionLabel label) {
  switch (label) {
  case RegionLabel::E1: return "e1";
  case RegionLabel::E2: return "e2";
  case RegionLabel::E3: return "e3";
  case RegionLabel::E4: return "e4";
  case RegionLabel::Neutral: return "neutral";
  }
  return "neutral";
}

std::optional<RegionLabel> parse_region(std::string_view name) {
  for (RegionLabel l : kAllRegions)
    if (name == to_string(l))
      return l;
  if (name == "E1") return RegionLabel::E1;
  if (name == "E2") return RegionLabel::E2;
  if (name == "E3") return RegionLabel::E3;
  if (name == "E4") return RegionLabel::E4;
  return std::nullopt;
}

void RegionBands::validate() const {
  if (!(0.0 < p_low && p_low < p_high && p_high < 1.0))
    throw InvalidInput("RegionBands: need 0 < p_low < p_high < 1");
  if (!(0.0 < ratio_lo && ratio_lo < 1.0 && 1.0 < ratio_hi))
    throw InvalidInput("RegionBands: need 0 < ratio_lo < 1 < ratio_hi");
}

RegionLabel classify_rule(double p_action, double entropy, double advantage) {
  const double surprisal = -std::log(p_action);
  if (advantage == 0.0 || surprisal == entropy)
    return RegionLabel::Neutral;
  const bool unsurprising = surprisal < entropy;
  if (advantage > 0.0)
    return unsurprising ? RegionLabel::E1 : RegionLabel::E2;
  return unsurprising ? RegionLabel::E3 : RegionLabel::E4;
}

RegionLabel classify_band(double p_theta, double p_old, double advantage,
                          const RegionBands& bands) {
  const double r = p_theta / p_old;
  if (!(r > bands.ratio_lo && r < bands.ratio_hi) || advantage == 0.0)
    return RegionLabel::Neutral;
  const bool high = p_theta > bands.p_high;
  const bool low = p_theta <= bands.p_low;
  if (advantage > 0.0) {
    if (high) return RegionLabel::E1;
    if (low) return RegionLabel::E2;
  } else {
    if (high) return RegionLabel::E3;
    if (low) return RegionLabel::E4;
  }
  return RegionLabel::Neutral;
}

std::size_t RegionCounts::total() const {
  std::size_t n = 0;
  for (std::size_t c : counts)
    n += c;
  return n;
}

RegionCounts region_histogram(std::span<const TokenRecord> records, const RegionBands& bands) {
  RegionCounts out;
  for (const TokenRecord& r : records)
    ++out[classify_band(r.p_theta, r.p_old, r.advantage, bands)];
  return out;
}

} // namespace entroclip

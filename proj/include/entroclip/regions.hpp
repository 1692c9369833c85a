#pragma once

// Entropy-sensitive token regions. A sampled token with advantage A either
// sharpens (E1, E4) or flattens (E2, E3) its distribution depending on how
// its surprisal -ln p_a compares with the entropy H:
//
//            -ln p_a < H    -ln p_a > H
//   A > 0        E1             E2
//   A < 0        E3             E4

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace entroclip {

struct TokenRecord;

enum class RegionLabel { E1, E2, E3, E4, Neutral };

inline constexpr std::array<RegionLabel, 5> kAllRegions = {
    RegionLabel::E1, RegionLabel::E2, RegionLabel::E3, RegionLabel::E4, RegionLabel::Neutral};

std::string_view to_string(RegionLabel label);
std::optional<RegionLabel> parse_region(std::string_view name);

/// Probability and ratio bands for the band-based classifier.
struct RegionBands {
  double p_high = 0.7;
  double p_low = 0.3;
  double ratio_lo = 0.7;
  double ratio_hi = 1.3;

  /// Throws InvalidInput unless 0 < p_low < p_high < 1 and
  /// 0 < ratio_lo < 1 < ratio_hi.
  void validate() const;
  bool operator==(const RegionBands&) const = default;
};

/// Surprisal-vs-entropy rule. Ties and A = 0 map to Neutral.
RegionLabel classify_rule(double p_action, double entropy, double advantage);

/// Band rule on the current probability, restricted to tokens whose ratio
/// p_theta / p_old lies strictly inside (ratio_lo, ratio_hi).
RegionLabel classify_band(double p_theta, double p_old, double advantage,
                          const RegionBands& bands = {});

struct RegionCounts {
  std::array<std::size_t, 5> counts{};

  std::size_t& operator[](RegionLabel l) { return counts[static_cast<std::size_t>(l)]; }
  std::size_t operator[](RegionLabel l) const { return counts[static_cast<std::size_t>(l)]; }
  std::size_t total() const;
  bool operator==(const RegionCounts&) const = default;
};

/// Band classification of every record, tallied per label.
RegionCounts region_histogram(std::span<const TokenRecord> records,
                              const RegionBands& bands = {});

} // namespace entroclip

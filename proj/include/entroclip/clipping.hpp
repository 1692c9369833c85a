#pragma once

// Clip thresholds and the per-token clipped surrogate.
//
// A ThresholdFn is either a constant half-width eps or the linear form
// eps(p) = slope * p + intercept. Because the dynamic threshold is defined
// on the current probability, the ratio bound r satisfies an implicit
// equation r = 1 + eps(r * p_old); for the linear form this resolves to
//
//   r_max = (1 + intercept) / (1 - slope * p_old)
//   r_min = (1 - intercept) / (1 + slope * p_old)
//
// so that both bounds depend only on the rollout-time probability.

#include <optional>
#include <span>
#include <string>

namespace entroclip {

struct TokenRecord;

class ThresholdFn {
public:
  enum class Kind { Constant, Linear };

  static ThresholdFn constant(double eps);
  static ThresholdFn linear(double slope, double intercept);

  Kind kind() const { return kind_; }
  /// Linear coefficient (0 for Constant).
  double slope() const { return slope_; }
  /// Constant term; equals eps for Constant.
  double intercept() const { return intercept_; }

  double operator()(double p) const { return slope_ * p + intercept_; }

  /// w1 * a + w2 * b, evaluated pointwise. Constant iff both are Constant.
  static ThresholdFn blend(double w1, const ThresholdFn& a, double w2, const ThresholdFn& b);

  std::string describe() const;
  bool operator==(const ThresholdFn&) const = default;

private:
  ThresholdFn(Kind kind, double slope, double intercept);

  Kind kind_;
  double slope_;
  double intercept_;
};

/// (upper, lower) half-width functions in effect at one training step.
struct ThresholdPair {
  ThresholdFn upper;
  ThresholdFn lower;
  bool operator==(const ThresholdPair&) const = default;
};

enum class ClipMode { HardClip, GradPreserve };

std::string to_string(ClipMode mode);
std::optional<ClipMode> parse_clip_mode(const std::string& name);

struct RatioBounds {
  double r_min;
  double r_max;
};

struct ClipOutcome {
  double objective = 0.0;
  /// Multiplier on grad_z ln pi_theta(a|s).
  double grad_coeff = 0.0;
  bool clipped = false;
  double r_min = 0.0;
  double r_max = 0.0;
};

double upper_ratio_bound(double p_old, const ThresholdFn& fn);
double lower_ratio_bound(double p_old, const ThresholdFn& fn);
RatioBounds ratio_bounds(double p_old, const ThresholdPair& pair);

/// Clipped surrogate for one token with explicit ratio bounds.
///
/// HardClip: objective = min(r A, clamp(r) A); the gradient vanishes when
/// the clamped branch is selected.
/// GradPreserve: objective = clamp(r) A with the clamped ratio acting as a
/// detached coefficient, so clipped tokens keep a nonzero gradient.
ClipOutcome token_objective(double p_theta, double p_old, double advantage, RatioBounds bounds,
                            ClipMode mode);

ClipOutcome token_objective(double p_theta, double p_old, double advantage,
                            const ThresholdPair& pair, ClipMode mode);

/// Unclipped importance-weighted surrogate r A. The bounds are recorded
/// for threshold statistics only.
ClipOutcome unclipped_objective(double p_theta, double p_old, double advantage,
                                RatioBounds bounds);

struct ClipStats {
  double clip_fraction = 0.0;
  double mean_upper_eps = 0.0;
  double mean_lower_eps = 0.0;
  bool empty = true;
};

ClipStats clip_stats(std::span<const TokenRecord> records);

} // namespace entroclip

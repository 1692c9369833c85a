#include "entroclip/clipping.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "entroclip/error.hpp"
#include "entroclip/token_record.hpp"

namespace entroclip {

ThresholdFn::ThresholdFn(Kind kind, double slope, double intercept)
    : kind_(kind), slope_(slope), intercept_(intercept) {}

ThresholdFn ThresholdFn::constant(double eps) {
  if (!(eps >= 0.0 && eps < 1.0))
    throw InvalidInput("ThresholdFn: constant eps must lie in [0, 1)");
  return ThresholdFn(Kind::Constant, 0.0, eps);
}

ThresholdFn ThresholdFn::linear(double slope, double intercept) {
  if (!std::isfinite(slope) || !std::isfinite(intercept))
    throw InvalidInput("ThresholdFn: non-finite coefficients");
  // Positive on [0, 1] iff positive at both endpoints.
  if (!(intercept > 0.0 && slope + intercept > 0.0))
    throw InvalidInput("ThresholdFn: linear threshold must be positive on [0, 1]");
  return ThresholdFn(Kind::Linear, slope, intercept);
}

ThresholdFn ThresholdFn::blend(double w1, const ThresholdFn& a, double w2, const ThresholdFn& b) {
  const double intercept = w1 * a.intercept_ + w2 * b.intercept_;
  if (a.kind_ == Kind::Constant && b.kind_ == Kind::Constant)
    return constant(intercept);
  return linear(w1 * a.slope_ + w2 * b.slope_, intercept);
}

std::string ThresholdFn::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (kind_ == Kind::Constant)
    os << "constant(" << intercept_ << ")";
  else
    os << "linear(" << slope_ << ", " << intercept_ << ")";
  return os.str();
}

std::string to_string(ClipMode mode) {
  return mode == ClipMode::HardClip ? "hard" : "preserve";
}

std::optional<ClipMode> parse_clip_mode(const std::string& name) {
  if (name == "hard") return ClipMode::HardClip;
  if (name == "preserve") return ClipMode::GradPreserve;
  return std::nullopt;
}

namespace {

void check_probability(double p, const char* what) {
  if (!(p > 0.0 && p <= 1.0))
    throw InvalidInput(std::string(what) + ": probability must lie in (0, 1]");
}

} // namespace

double upper_ratio_bound(double p_old, const ThresholdFn& fn) {
  check_probability(p_old, "upper_ratio_bound");
  const double denom = 1.0 - fn.slope() * p_old;
  if (!(denom > 0.0))
    throw InvalidInput("upper_ratio_bound: degenerate denominator");
  return (1.0 + fn.intercept()) / denom;
}

double lower_ratio_bound(double p_old, const ThresholdFn& fn) {
  check_probability(p_old, "lower_ratio_bound");
  const double denom = 1.0 + fn.slope() * p_old;
  if (!(denom > 0.0))
    throw InvalidInput("lower_ratio_bound: degenerate denominator");
  const double r = (1.0 - fn.intercept()) / denom;
  if (!(r > 0.0))
    throw InvalidInput("lower_ratio_bound: non-positive lower bound");
  return r;
}

RatioBounds ratio_bounds(double p_old, const ThresholdPair& pair) {
  return {lower_ratio_bound(p_old, pair.lower), upper_ratio_bound(p_old, pair.upper)};
}

ClipOutcome token_objective(double p_theta, double p_old, double advantage, RatioBounds bounds,
                            ClipMode mode) {
  check_probability(p_theta, "token_objective");
  check_probability(p_old, "token_objective");
  if (!(bounds.r_min < 1.0 && 1.0 < bounds.r_max))
    throw InvalidInput("token_objective: bounds must satisfy r_min < 1 < r_max");

  const double r = p_theta / p_old;
  const double clamped = std::clamp(r, bounds.r_min, bounds.r_max);
  ClipOutcome out;
  out.r_min = bounds.r_min;
  out.r_max = bounds.r_max;
  if (mode == ClipMode::HardClip) {
    const double raw = r * advantage;
    const double cut = clamped * advantage;
    out.clipped = cut < raw;
    out.objective = out.clipped ? cut : raw;
    out.grad_coeff = out.clipped ? 0.0 : raw;
  } else {
    out.clipped = clamped != r;
    out.objective = clamped * advantage;
    out.grad_coeff = clamped * advantage;
  }
  return out;
}

ClipOutcome token_objective(double p_theta, double p_old, double advantage,
                            const ThresholdPair& pair, ClipMode mode) {
  return token_objective(p_theta, p_old, advantage, ratio_bounds(p_old, pair), mode);
}

ClipOutcome unclipped_objective(double p_theta, double p_old, double advantage,
                                RatioBounds bounds) {
  check_probability(p_theta, "unclipped_objective");
  check_probability(p_old, "unclipped_objective");
  ClipOutcome out;
  const double r = p_theta / p_old;
  out.objective = r * advantage;
  out.grad_coeff = r * advantage;
  out.r_min = bounds.r_min;
  out.r_max = bounds.r_max;
  return out;
}

ClipStats clip_stats(std::span<const TokenRecord> records) {
  ClipStats s;
  if (records.empty())
    return s;
  s.empty = false;
  std::size_t clipped = 0;
  double up = 0.0, lo = 0.0;
  for (const TokenRecord& r : records) {
    clipped += r.clip.clipped ? 1 : 0;
    up += r.clip.r_max - 1.0;
    lo += 1.0 - r.clip.r_min;
  }
  const double n = static_cast<double>(records.size());
  s.clip_fraction = static_cast<double>(clipped) / n;
  s.mean_upper_eps = up / n;
  s.mean_lower_eps = lo / n;
  return s;
}

} // namespace entroclip

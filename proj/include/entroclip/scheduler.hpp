#pragma once

// Per-step clip threshold schedules.
//
//   static     eps_std on both sides
//   dyn_upper  dynamic upper H(p), lower eps_std
//   dyn_lower  upper eps_std, dynamic lower M(p)
//   id         increase-then-decrease: H(p) anneals to eps_std over phase I,
//              then the lower side ramps eps_std -> M(p) over phase II
//   did        decrease-increase-decrease: upper ramps eps_std -> H(p) over
//              phase I and stays there; lower ramps as in id
//   od         oscillatory decay: a two-state hysteresis controller on the
//              measured entropy selects (H, eps_std) or (eps_std, M)
//
// Phase I covers k <= rho * T_max. The ramp weight lambda runs from 1 to 0
// across phase I and from 0 to -1 across phase II; with rho = 0.5 it equals
// lambda_k(k, T_max) exactly.

#include <cstddef>
#include <optional>
#include <string>

#include "entroclip/clipping.hpp"

namespace entroclip {

enum class StrategyKind { Static, DynUpper, DynLower, ID, DID, OD };

std::string to_string(StrategyKind kind);
std::optional<StrategyKind> parse_strategy(const std::string& name);

/// Which expression drives the phase-II lower threshold of id/did.
/// Ramp: (1 + lambda) eps_std - lambda M(p), moving eps_std -> M(p).
/// Printed: (1 + lambda) M(p) - lambda eps_std, moving M(p) -> eps_std.
enum class Phase2Formula { Ramp, Printed };

struct StrategyConfig {
  StrategyKind kind = StrategyKind::Static;
  double eps_std = 0.2;
  ThresholdFn upper_fn = ThresholdFn::linear(-0.25, 0.5);
  ThresholdFn lower_fn = ThresholdFn::linear(-0.13, 0.3);
  std::size_t t_max = 500;
  double phase_ratio = 0.5;
  Phase2Formula phase2 = Phase2Formula::Ramp;
  /// Entropy at k = 0. Left unset, the trainer fills it from the initial policy.
  std::optional<double> h_init;
  double h_min_factor = 0.2;

  void validate() const;
  bool operator==(const StrategyConfig&) const = default;
};

struct ScheduleState {
  std::size_t k = 0;
  int mode = 0; // 1 = boost (entropy-increasing), 0 = suppress
  std::size_t switches = 0;
  std::optional<ThresholdPair> last;
};

/// 1 - 2k / T_max.
double lambda_k(std::size_t k, std::size_t t_max);

ThresholdPair thresholds_static(const StrategyConfig& cfg);

/// id/did pairs as functions of the phase (1 or 2) and its ramp weight;
/// used to compare the one-sided limits at the phase boundary.
ThresholdPair id_pair(int phase, double lambda, const StrategyConfig& cfg);
ThresholdPair did_pair(int phase, double lambda, const StrategyConfig& cfg);
ThresholdPair thresholds_id(std::size_t k, const StrategyConfig& cfg);
ThresholdPair thresholds_did(std::size_t k, const StrategyConfig& cfg);

struct EntropyBands {
  double tau_low;
  double tau_high;
};

/// tau_low = h_min_factor * H_init; tau_high decays linearly from H_init at
/// k = 0 to tau_low at k = T_max.
EntropyBands od_bands(std::size_t k, const StrategyConfig& cfg);

/// Applies the hysteresis rule to `state` for step k and returns the pair
/// for the resulting mode. Requires cfg.h_init.
ThresholdPair thresholds_od(double h_current, std::size_t k, ScheduleState& state,
                            const StrategyConfig& cfg);

/// Owns the schedule state for one training run.
class Scheduler {
public:
  explicit Scheduler(StrategyConfig cfg);

  /// Pair in effect at step k given the entropy measured before the step.
  ThresholdPair step(std::size_t k, double h_current);

  const ScheduleState& state() const { return state_; }
  const StrategyConfig& config() const { return cfg_; }

private:
  StrategyConfig cfg_;
  ScheduleState state_;
};

} // namespace entroclip

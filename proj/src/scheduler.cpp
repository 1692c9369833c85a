#include "entroclip/scheduler.hpp"

#include <algorithm>

#include "entroclip/error.hpp"

namespace entroclip {

std::string to_string(StrategyKind kind) {
  switch (kind) {
  case StrategyKind::Static: return "static";
  case StrategyKind::DynUpper: return "dyn_upper";
  case StrategyKind::DynLower: return "dyn_lower";
  case StrategyKind::ID: return "id";
  case StrategyKind::DID: return "did";
  case StrategyKind::OD: return "od";
  }
  return "static";
}

std::optional<StrategyKind> parse_strategy(const std::string& name) {
  for (StrategyKind k : {StrategyKind::Static, StrategyKind::DynUpper, StrategyKind::DynLower,
                         StrategyKind::ID, StrategyKind::DID, StrategyKind::OD})
    if (name == to_string(k)) return k;
  return std::nullopt;
}

void StrategyConfig::validate() const {
  if (!(eps_std > 0.0 && eps_std < 1.0)) throw InvalidInput("strategy: eps_std must lie in (0, 1)");
  if (t_max < 2) throw InvalidInput("strategy: t_max must be >= 2");
  if (!(phase_ratio > 0.0 && phase_ratio < 1.0))
    throw InvalidInput("strategy: phase_ratio must lie in (0, 1)");
  if (!(h_min_factor > 0.0 && h_min_factor < 1.0))
    throw InvalidInput("strategy: h_min_factor must lie in (0, 1)");
  if (h_init && !(*h_init > 0.0)) throw InvalidInput("strategy: h_init must be positive");
}

double lambda_k(std::size_t k, std::size_t t_max) {
  return 1.0 - 2.0 * static_cast<double>(k) / static_cast<double>(t_max);
}

namespace {

struct Phase {
  bool first;
  double lambda;
};

// Phase-local ramp weight; reduces to lambda_k when phase_ratio = 0.5.
Phase phase_of(std::size_t k, const StrategyConfig& cfg) {
  const double t = static_cast<double>(std::min(k, cfg.t_max));
  const double split = cfg.phase_ratio * static_cast<double>(cfg.t_max);
  if (cfg.phase_ratio == 0.5) {
    return {t <= split, lambda_k(std::min(k, cfg.t_max), cfg.t_max)};
  }
  if (t <= split) return {true, 1.0 - t / split};
  return {false, -(t - split) / (static_cast<double>(cfg.t_max) - split)};
}

ThresholdFn phase2_lower(double lambda, const StrategyConfig& cfg) {
  const ThresholdFn eps = ThresholdFn::constant(cfg.eps_std);
  if (cfg.phase2 == Phase2Formula::Printed)
    return ThresholdFn::blend(1.0 + lambda, cfg.lower_fn, -lambda, eps);
  return ThresholdFn::blend(1.0 + lambda, eps, -lambda, cfg.lower_fn);
}

} // namespace

ThresholdPair thresholds_static(const StrategyConfig& cfg) {
  const ThresholdFn eps = ThresholdFn::constant(cfg.eps_std);
  return {eps, eps};
}

ThresholdPair id_pair(int phase, double lambda, const StrategyConfig& cfg) {
  const ThresholdFn eps = ThresholdFn::constant(cfg.eps_std);
  if (phase == 1) return {ThresholdFn::blend(lambda, cfg.upper_fn, 1.0 - lambda, eps), eps};
  return {eps, phase2_lower(lambda, cfg)};
}

ThresholdPair did_pair(int phase, double lambda, const StrategyConfig& cfg) {
  const ThresholdFn eps = ThresholdFn::constant(cfg.eps_std);
  if (phase == 1) return {ThresholdFn::blend(lambda, eps, 1.0 - lambda, cfg.upper_fn), eps};
  return {cfg.upper_fn, phase2_lower(lambda, cfg)};
}

ThresholdPair thresholds_id(std::size_t k, const StrategyConfig& cfg) {
  const Phase ph = phase_of(k, cfg);
  return id_pair(ph.first ? 1 : 2, ph.lambda, cfg);
}

ThresholdPair thresholds_did(std::size_t k, const StrategyConfig& cfg) {
  const Phase ph = phase_of(k, cfg);
  return did_pair(ph.first ? 1 : 2, ph.lambda, cfg);
}

EntropyBands od_bands(std::size_t k, const StrategyConfig& cfg) {
  if (!cfg.h_init) throw InvalidInput("od: h_init is not set");
  const double h_init = *cfg.h_init;
  const double h_min = cfg.h_min_factor * h_init;
  if (k >= cfg.t_max) return {h_min, h_min};
  const double frac = 1.0 - static_cast<double>(k) / static_cast<double>(cfg.t_max);
  return {h_min, h_min + (h_init - h_min) * frac};
}

ThresholdPair thresholds_od(double h_current, std::size_t k, ScheduleState& state,
                            const StrategyConfig& cfg) {
  if (!(h_current >= 0.0)) throw InvalidInput("od: entropy must be non-negative");
  const EntropyBands bands = od_bands(k, cfg);
  int next = state.mode;
  if (h_current <= bands.tau_low)
    next = 1;
  else if (h_current > bands.tau_high)
    next = 0;
  if (next != state.mode) ++state.switches;
  state.mode = next;
  state.k = k;

  const ThresholdFn eps = ThresholdFn::constant(cfg.eps_std);
  ThresholdPair pair = state.mode == 1 ? ThresholdPair{cfg.upper_fn, eps}
                                       : ThresholdPair{eps, cfg.lower_fn};
  state.last = pair;
  return pair;
}

Scheduler::Scheduler(StrategyConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

ThresholdPair Scheduler::step(std::size_t k, double h_current) {
  if (cfg_.kind == StrategyKind::OD) return thresholds_od(h_current, k, state_, cfg_);

  ThresholdPair pair = thresholds_static(cfg_);
  switch (cfg_.kind) {
  case StrategyKind::DynUpper: pair.upper = cfg_.upper_fn; break;
  case StrategyKind::DynLower: pair.lower = cfg_.lower_fn; break;
  case StrategyKind::ID: pair = thresholds_id(k, cfg_); break;
  case StrategyKind::DID: pair = thresholds_did(k, cfg_); break;
  default: break;
  }
  state_.k = k;
  state_.last = pair;
  return pair;
}

} // namespace entroclip

#pragma once

// GRPO training loop over a tabular policy with scheduled clip thresholds.
//
// One round: measure entropy -> consult scheduler -> snapshot and sample G
// responses per context -> group advantages -> `epochs` passes over the
// token batch, each split into `minibatches` ascent steps on the token-mean
// clipped objective -> emit one MetricsRow.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "entroclip/advantage.hpp"
#include "entroclip/clipping.hpp"
#include "entroclip/regions.hpp"
#include "entroclip/scheduler.hpp"
#include "entroclip/taskpolicy.hpp"
#include "entroclip/token_record.hpp"

namespace entroclip {

enum class OptimizerKind { Sgd, Adam };

/// How tokens outside the intervention set are updated.
///   unclipped  plain importance-weighted gradient r A
///   hard       standard hard clip with the scheduled bounds
///   masked     no gradient
enum class OthersTreatment { Unclipped, HardClip, Masked };

/// Starting logits: all zero, i.i.d. Gaussian, `init_scale` added to one
/// random token per cell, or `init_scale` added to the first target's token
/// per cell (a prior that already knows one answer).
enum class PolicyInit { Zero, Gaussian, Peaked, Prior };

std::string to_string(OptimizerKind k);
std::string to_string(OthersTreatment t);
std::string to_string(PolicyInit i);
std::optional<OptimizerKind> parse_optimizer(const std::string& name);
std::optional<OthersTreatment> parse_others(const std::string& name);
std::optional<PolicyInit> parse_init(const std::string& name);

struct EvalConfig {
  std::size_t every = 0; // 0 disables pass@k evaluation
  std::size_t k = 8;
  std::size_t n_samples = 16;
  bool operator==(const EvalConfig&) const = default;
};

struct TrainConfig {
  TaskSpec task = make_task_preset("default");
  StrategyConfig strategy;
  /// Token-mean SGD spreads one step over ~1000 tokens; 10 is where the
  /// default task visibly learns within a few hundred rounds.
  double learning_rate = 10.0;
  std::size_t epochs = 4;
  std::size_t minibatches = 1;
  std::size_t rounds = 500;
  std::size_t group_size = 8;
  std::uint64_t seed = 7;
  ClipMode clip_mode = ClipMode::HardClip;
  /// Band regions that receive `clip_mode`; every other token gets `others`.
  std::optional<std::vector<RegionLabel>> intervention;
  OthersTreatment others = OthersTreatment::HardClip;
  RegionBands bands;
  double advantage_delta = kDefaultAdvantageDelta;
  OptimizerKind optimizer = OptimizerKind::Sgd;
  PolicyInit init = PolicyInit::Zero;
  /// Gaussian std, or the logit bump of the favored token for Peaked/Prior.
  double init_scale = 0.0;
  EvalConfig eval;
  bool record_wallclock = false;

  /// Throws ConfigError on any invalid field.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct MetricsRow {
  std::size_t step = 0;
  double entropy = 0.0;
  double reward_mean = 0.0;
  double grad_norm = 0.0;
  double clip_frac = 0.0;
  double eps_up_mean = 0.0;
  double eps_lo_mean = 0.0;
  RegionCounts regions;
  int od_state = 0;
  std::optional<double> pass1;
  std::optional<double> passk;
  std::optional<double> elapsed_s;
  /// Tokens in the round; not serialized, equals regions.total().
  std::size_t tokens = 0;
};

/// Builds the initial policy for a config.
TabularPolicy initial_policy(const TrainConfig& cfg);

/// Flattens rollout groups into per-token records with shared trajectory
/// advantages; p_theta starts equal to p_old.
std::vector<TokenRecord> token_records(const RolloutBatch& batch);

struct UpdateResult {
  /// Ascent direction (token-mean gradient), shaped like the policy table.
  std::vector<double> gradient;
  double objective = 0.0;
};

/// Recomputes p_theta for `records` under `policy`, evaluates each token's
/// clipped objective and accumulates grad_coeff (e_a - p) per cell, divided
/// by the number of records. Records are updated in place.
UpdateResult assemble_gradient(const TabularPolicy& policy, std::span<TokenRecord> records,
                               const ThresholdPair& pair, const TrainConfig& cfg);

class Trainer {
public:
  explicit Trainer(TrainConfig cfg);

  /// Runs one rollout round and returns its metrics.
  MetricsRow run_round();
  bool done() const { return round_ >= cfg_.rounds; }

  const TabularPolicy& policy() const { return policy_; }
  const Scheduler& scheduler() const { return scheduler_; }
  const TrainConfig& config() const { return cfg_; }
  std::size_t round() const { return round_; }
  double initial_entropy() const { return h_init_; }

private:
  void apply_update(std::span<const double> gradient);

  TrainConfig cfg_;
  TabularPolicy policy_;
  double h_init_;
  Scheduler scheduler_;
  std::size_t round_ = 0;
  std::size_t adam_t_ = 0;
  std::vector<double> adam_m_;
  std::vector<double> adam_v_;
};

using RowCallback = std::function<void(const MetricsRow&)>;

/// Runs cfg.rounds rounds. Deterministic for a fixed config.
std::vector<MetricsRow> train(const TrainConfig& cfg, const RowCallback& on_row = {});

/// Same as train, after checking that an intervention set is configured.
std::vector<MetricsRow> intervention_train(const TrainConfig& cfg,
                                           const RowCallback& on_row = {});

struct PassAtK {
  double pass1 = 0.0;
  double passk = 0.0;
};

/// 1 - C(n - c, k) / C(n, k): probability that k draws without replacement
/// from n samples with c correct contain a correct one.
double pass_at_k_estimate(std::size_t n, std::size_t correct, std::size_t k);

/// Samples n_samples responses per context and averages the unbiased
/// pass@1 / pass@k estimates over contexts. Requires an AnyExact task.
PassAtK eval_pass_at_k(const TabularPolicy& policy, const TaskSpec& task, std::size_t k,
                       std::size_t n_samples, std::uint64_t seed);

struct GradEntropyDiag {
  std::optional<double> pearson; // unset when either series is constant
  double max_ratio = 0.0;        // max grad_norm / (2 entropy)
};

GradEntropyDiag grad_entropy_diag(std::span<const MetricsRow> rows);

} // namespace entroclip

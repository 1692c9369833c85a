#pragma once

// Synthetic verifiable-reward tasks and the tabular softmax policy that is
// trained on them. A task has n_contexts prompts; a response is a sequence
// of exactly `horizon` tokens from a vocabulary of size `vocab`. The policy
// holds one logit vector per (context, step) cell, so every parameter has a
// closed-form gradient.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "entroclip/numerics.hpp"

namespace entroclip {

using TokenSeq = std::vector<std::size_t>;

/// fraction: best match fraction over the targets; exact: 1 iff the sequence
/// equals a target.
enum class RewardMode { FractionMatch, AnyExact };

std::string to_string(RewardMode mode);
std::optional<RewardMode> parse_reward_mode(const std::string& name);

struct TaskSpec {
  std::string name = "custom";
  std::size_t n_contexts = 0;
  std::size_t vocab = 0;
  std::size_t horizon = 0;
  /// targets[c] holds the 1..M accepted sequences for context c.
  std::vector<std::vector<TokenSeq>> targets;
  RewardMode reward_mode = RewardMode::FractionMatch;
  /// Probability that the verifier's score for a trajectory is replaced by
  /// an independent uniform draw in [0, 1] (an imperfect verifier).
  double reward_noise = 0.0;

  /// Throws InvalidInput on any shape or range violation.
  void validate() const;
  bool operator==(const TaskSpec&) const = default;
};

/// Named presets: "default" (32 contexts, V=16, L=4, one target,
/// FractionMatch) and "multi2" (32 contexts, V=6, L=4, two distinct targets
/// per context, AnyExact). Targets are drawn from `target_seed`.
TaskSpec make_task_preset(const std::string& name, std::uint64_t target_seed = 0);

/// Seeded random targets for a task shape.
std::vector<std::vector<TokenSeq>> random_targets(std::size_t n_contexts, std::size_t vocab,
                                                  std::size_t horizon, std::size_t per_context,
                                                  std::uint64_t seed);

/// Fraction of positions where `seq` agrees with `target`.
double match_fraction(std::span<const std::size_t> seq, const TokenSeq& target);

/// Noise-free verifier score in [0, 1].
double verify_reward(std::span<const std::size_t> seq, std::size_t context, const TaskSpec& task);

class TabularPolicy {
public:
  TabularPolicy(std::size_t n_contexts, std::size_t horizon, std::size_t vocab);
  explicit TabularPolicy(const TaskSpec& task);

  std::size_t n_contexts() const { return n_contexts_; }
  std::size_t horizon() const { return horizon_; }
  std::size_t vocab() const { return vocab_; }
  std::size_t n_cells() const { return n_contexts_ * horizon_; }

  std::size_t cell_index(std::size_t context, std::size_t step) const;
  std::span<const double> logits(std::size_t context, std::size_t step) const;
  std::span<double> logits(std::size_t context, std::size_t step);
  std::span<const double> table() const { return table_; }

  ProbVector probs(std::size_t context, std::size_t step) const;
  double prob(std::size_t context, std::size_t step, std::size_t action) const;

  /// logits += scale * direction; direction has the shape of table().
  void add_scaled(std::span<const double> direction, double scale);

  /// Gaussian logits with standard deviation `scale`.
  void randomize(double scale, std::uint64_t seed);

  bool operator==(const TabularPolicy&) const = default;

private:
  std::size_t n_contexts_;
  std::size_t horizon_;
  std::size_t vocab_;
  std::vector<double> table_;
};

/// Frozen copy of the policy taken at rollout time; supplies pi_old.
class PolicySnapshot {
public:
  explicit PolicySnapshot(const TabularPolicy& policy)
      : frozen_(std::make_shared<const TabularPolicy>(policy)) {}

  const TabularPolicy& policy() const { return *frozen_; }
  double prob(std::size_t context, std::size_t step, std::size_t action) const {
    return frozen_->prob(context, step, action);
  }

private:
  std::shared_ptr<const TabularPolicy> frozen_;
};

struct Trajectory {
  std::size_t context = 0;
  TokenSeq tokens;
  std::vector<double> p_old;
  double reward = 0.0;
};

struct RolloutGroup {
  std::size_t prompt = 0;
  std::vector<Trajectory> trajectories;
  std::vector<double> rewards;
  std::vector<double> advantages;
};

struct RolloutBatch {
  PolicySnapshot snapshot;
  std::vector<RolloutGroup> groups;
};

/// Deterministic 64-bit RNG stream keyed by (seed, a, b, c).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

/// Uniform double in [0, 1) from 53 random bits.
double uniform01(std::uint64_t bits);

/// Inverse-CDF categorical draw.
std::size_t sample_categorical(const ProbVector& p, double u);

/// Samples G trajectories for every context at temperature 1 from a
/// snapshot taken before sampling. `round` selects an independent RNG
/// stream so successive rounds see fresh randomness. Advantages are left
/// empty for the caller.
RolloutBatch sample_rollouts(const TabularPolicy& policy, const TaskSpec& task,
                             std::size_t group_size, std::uint64_t seed, std::uint64_t round = 0);

/// Mean entropy of softmax(logits) over every (context, step) cell.
double mean_policy_entropy(const TabularPolicy& policy);

} // namespace entroclip

#include "entroclip/taskpolicy.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "entroclip/error.hpp"

namespace entroclip {

std::string to_string(RewardMode mode) {
  switch (mode) {
  case RewardMode::FractionMatch: return "fraction";
  case RewardMode::AnyExact: return "exact";
  }
  return "fraction";
}

std::optional<RewardMode> parse_reward_mode(const std::string& name) {
  for (RewardMode m : {RewardMode::FractionMatch, RewardMode::AnyExact})
    if (name == to_string(m)) return m;
  return std::nullopt;
}

void TaskSpec::validate() const {
  if (n_contexts == 0) throw InvalidInput("task: n_contexts must be >= 1");
  if (vocab < 2) throw InvalidInput("task: vocab must be >= 2");
  if (horizon == 0) throw InvalidInput("task: horizon must be >= 1");
  if (!(reward_noise >= 0.0 && reward_noise <= 1.0))
    throw InvalidInput("task: reward_noise must lie in [0, 1]");
  if (targets.size() != n_contexts)
    throw InvalidInput("task: need one target list per context");
  for (const auto& per_ctx : targets) {
    if (per_ctx.empty()) throw InvalidInput("task: every context needs at least one target");
    for (const TokenSeq& t : per_ctx) {
      if (t.size() != horizon) throw InvalidInput("task: target length differs from horizon");
      for (std::size_t tok : t)
        if (tok >= vocab) throw InvalidInput("task: target token outside vocabulary");
    }
  }
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  // splitmix64 finalizer applied to each key component in turn.
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  std::uint64_t h = mix(seed);
  h = mix(h ^ a);
  h = mix(h ^ b);
  h = mix(h ^ c);
  return h;
}

double uniform01(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

std::size_t sample_categorical(const ProbVector& p, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  // u landed in the rounding gap above the last partial sum.
  for (std::size_t i = p.size(); i-- > 0;)
    if (p[i] > 0.0) return i;
  return p.size() - 1;
}

std::vector<std::vector<TokenSeq>> random_targets(std::size_t n_contexts, std::size_t vocab,
                                                  std::size_t horizon, std::size_t per_context,
                                                  std::uint64_t seed) {
  if (per_context == 0) throw InvalidInput("random_targets: need at least one target");
  std::vector<std::vector<TokenSeq>> out(n_contexts);
  for (std::size_t c = 0; c < n_contexts; ++c) {
    std::mt19937_64 rng(stream_seed(seed, 0x7a59e7, c));
    while (out[c].size() < per_context) {
      TokenSeq t(horizon);
      for (auto& tok : t) tok = static_cast<std::size_t>(rng() % vocab);
      bool fresh = true;
      for (const TokenSeq& prev : out[c]) fresh = fresh && prev != t;
      if (fresh) out[c].push_back(std::move(t));
    }
  }
  return out;
}

TaskSpec make_task_preset(const std::string& name, std::uint64_t target_seed) {
  TaskSpec t;
  t.name = name;
  if (name == "default") {
    t.n_contexts = 32;
    t.vocab = 16;
    t.horizon = 4;
    t.reward_mode = RewardMode::FractionMatch;
    t.targets = random_targets(t.n_contexts, t.vocab, t.horizon, 1, target_seed);
  } else if (name == "multi2") {
    t.n_contexts = 32;
    t.vocab = 6;
    t.horizon = 4;
    t.reward_mode = RewardMode::AnyExact;
    t.targets = random_targets(t.n_contexts, t.vocab, t.horizon, 2, target_seed);
  } else {
    throw InvalidInput("unknown task preset '" + name + "'");
  }
  return t;
}

double match_fraction(std::span<const std::size_t> seq, const TokenSeq& target) {
  if (seq.size() != target.size() || seq.empty())
    throw InvalidInput("match_fraction: length mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) hits += seq[i] == target[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(seq.size());
}

double verify_reward(std::span<const std::size_t> seq, std::size_t context, const TaskSpec& task) {
  if (context >= task.n_contexts) throw InvalidInput("verify_reward: context out of range");
  if (seq.size() != task.horizon) throw InvalidInput("verify_reward: sequence length != horizon");
  double best = 0.0;
  for (const TokenSeq& target : task.targets[context]) {
    const double f = match_fraction(seq, target);
    if (task.reward_mode == RewardMode::AnyExact && f == 1.0) return 1.0;
    best = std::max(best, f);
  }
  return task.reward_mode == RewardMode::AnyExact ? 0.0 : best;
}

TabularPolicy::TabularPolicy(std::size_t n_contexts, std::size_t horizon, std::size_t vocab)
    : n_contexts_(n_contexts), horizon_(horizon), vocab_(vocab),
      table_(n_contexts * horizon * vocab, 0.0) {
  if (vocab < 2) throw InvalidInput("TabularPolicy: vocab must be >= 2");
}

TabularPolicy::TabularPolicy(const TaskSpec& task)
    : TabularPolicy(task.n_contexts, task.horizon, task.vocab) {}

std::size_t TabularPolicy::cell_index(std::size_t context, std::size_t step) const {
  if (context >= n_contexts_ || step >= horizon_)
    throw InvalidInput("TabularPolicy: cell out of range");
  return context * horizon_ + step;
}

std::span<const double> TabularPolicy::logits(std::size_t context, std::size_t step) const {
  return std::span<const double>(table_).subspan(cell_index(context, step) * vocab_, vocab_);
}

std::span<double> TabularPolicy::logits(std::size_t context, std::size_t step) {
  return std::span<double>(table_).subspan(cell_index(context, step) * vocab_, vocab_);
}

ProbVector TabularPolicy::probs(std::size_t context, std::size_t step) const {
  auto z = logits(context, step);
  return softmax(LogitVector(std::vector<double>(z.begin(), z.end())));
}

double TabularPolicy::prob(std::size_t context, std::size_t step, std::size_t action) const {
  if (action >= vocab_) throw InvalidInput("TabularPolicy: token out of range");
  return probs(context, step)[action];
}

void TabularPolicy::add_scaled(std::span<const double> direction, double scale) {
  if (direction.size() != table_.size())
    throw InvalidInput("TabularPolicy: update has the wrong shape");
  for (std::size_t i = 0; i < table_.size(); ++i) table_[i] += scale * direction[i];
}

void TabularPolicy::randomize(double scale, std::uint64_t seed) {
  std::mt19937_64 rng(stream_seed(seed, 0x1417));
  for (std::size_t i = 0; i < table_.size(); ++i) {
    // Box-Muller keeps the draw identical across standard libraries.
    const double u1 = 1.0 - uniform01(rng());
    const double u2 = uniform01(rng());
    table_[i] = scale * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
}

RolloutBatch sample_rollouts(const TabularPolicy& policy, const TaskSpec& task,
                             std::size_t group_size, std::uint64_t seed, std::uint64_t round) {
  if (group_size < 2) throw InvalidInput("sample_rollouts: group size must be >= 2");
  if (policy.n_contexts() != task.n_contexts || policy.horizon() != task.horizon ||
      policy.vocab() != task.vocab)
    throw InvalidInput("sample_rollouts: policy shape does not match task");

  RolloutBatch batch{PolicySnapshot(policy), {}};
  const TabularPolicy& frozen = batch.snapshot.policy();

  std::vector<ProbVector> cell_probs;
  cell_probs.reserve(frozen.n_cells());
  for (std::size_t c = 0; c < task.n_contexts; ++c)
    for (std::size_t s = 0; s < task.horizon; ++s) cell_probs.push_back(frozen.probs(c, s));

  batch.groups.reserve(task.n_contexts);
  for (std::size_t c = 0; c < task.n_contexts; ++c) {
    RolloutGroup g;
    g.prompt = c;
    std::mt19937_64 rng(stream_seed(seed, round, c));
    // Separate stream so the noise setting never perturbs token sampling.
    std::mt19937_64 noise(stream_seed(seed, round, c, 0x401e));
    for (std::size_t i = 0; i < group_size; ++i) {
      Trajectory tr;
      tr.context = c;
      tr.tokens.resize(task.horizon);
      tr.p_old.resize(task.horizon);
      for (std::size_t s = 0; s < task.horizon; ++s) {
        const ProbVector& p = cell_probs[frozen.cell_index(c, s)];
        const std::size_t a = sample_categorical(p, uniform01(rng()));
        tr.tokens[s] = a;
        tr.p_old[s] = p[a];
      }
      tr.reward = verify_reward(tr.tokens, c, task);
      if (task.reward_noise > 0.0) {
        const double coin = uniform01(noise());
        const double replacement = uniform01(noise());
        if (coin < task.reward_noise) tr.reward = replacement;
      }
      g.rewards.push_back(tr.reward);
      g.trajectories.push_back(std::move(tr));
    }
    batch.groups.push_back(std::move(g));
  }
  return batch;
}

double mean_policy_entropy(const TabularPolicy& policy) {
  double sum = 0.0;
  for (std::size_t c = 0; c < policy.n_contexts(); ++c)
    for (std::size_t s = 0; s < policy.horizon(); ++s) sum += entropy(policy.probs(c, s));
  return sum / static_cast<double>(policy.n_cells());
}

} // namespace entroclip

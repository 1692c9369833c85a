#include "entroclip/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "entroclip/error.hpp"

namespace entroclip {

std::string TokenRecord::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "TokenRecord{context=" << context << ", step=" << step << ", action=" << action
     << ", p_old=" << p_old << ", p_theta=" << p_theta << ", advantage=" << advantage
     << ", region=" << to_string(region) << ", objective=" << clip.objective
     << ", grad_coeff=" << clip.grad_coeff << ", clipped=" << clip.clipped
     << ", r_min=" << clip.r_min << ", r_max=" << clip.r_max << "}";
  return os.str();
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::Sgd ? "sgd" : "adam"; }

std::string to_string(OthersTreatment t) {
  switch (t) {
  case OthersTreatment::Unclipped: return "unclipped";
  case OthersTreatment::HardClip: return "hard";
  case OthersTreatment::Masked: return "masked";
  }
  return "unclipped";
}

std::string to_string(PolicyInit i) {
  switch (i) {
  case PolicyInit::Zero: return "zero";
  case PolicyInit::Gaussian: return "gaussian";
  case PolicyInit::Peaked: return "peaked";
  case PolicyInit::Prior: return "prior";
  }
  return "zero";
}

std::optional<OptimizerKind> parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  return std::nullopt;
}

std::optional<OthersTreatment> parse_others(const std::string& name) {
  for (auto t : {OthersTreatment::Unclipped, OthersTreatment::HardClip, OthersTreatment::Masked})
    if (name == to_string(t)) return t;
  return std::nullopt;
}

std::optional<PolicyInit> parse_init(const std::string& name) {
  for (auto i : {PolicyInit::Zero, PolicyInit::Gaussian, PolicyInit::Peaked, PolicyInit::Prior})
    if (name == to_string(i)) return i;
  return std::nullopt;
}

void TrainConfig::validate() const {
  try {
    task.validate();
    strategy.validate();
    bands.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("train: learning_rate must be finite and >= 0");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (minibatches < 1) throw ConfigError("train: minibatches must be >= 1");
  if (rounds < 1) throw ConfigError("train: rounds must be >= 1");
  if (group_size < 2) throw ConfigError("train: group_size must be >= 2");
  if (!(advantage_delta > 0.0)) throw ConfigError("train: advantage_delta must be positive");
  if (intervention && intervention->empty())
    throw ConfigError("train: intervention set must not be empty");
  if (!(init_scale >= 0.0)) throw ConfigError("train: init_scale must be >= 0");
  if (eval.every > 0) {
    if (task.reward_mode != RewardMode::AnyExact)
      throw ConfigError("eval: pass@k needs an exact-match task");
    if (eval.k < 1 || eval.k > eval.n_samples)
      throw ConfigError("eval: need 1 <= k <= n_samples");
  }
}

TabularPolicy initial_policy(const TrainConfig& cfg) {
  TabularPolicy policy(cfg.task);
  switch (cfg.init) {
  case PolicyInit::Zero: break;
  case PolicyInit::Gaussian: policy.randomize(cfg.init_scale, cfg.seed); break;
  case PolicyInit::Peaked: {
    std::mt19937_64 rng(stream_seed(cfg.seed, 0x9ea7));
    for (std::size_t c = 0; c < policy.n_contexts(); ++c)
      for (std::size_t s = 0; s < policy.horizon(); ++s)
        policy.logits(c, s)[rng() % policy.vocab()] += cfg.init_scale;
    break;
  }
  case PolicyInit::Prior:
    for (std::size_t c = 0; c < policy.n_contexts(); ++c) {
      const TokenSeq& first = cfg.task.targets[c].front();
      for (std::size_t s = 0; s < policy.horizon(); ++s)
        policy.logits(c, s)[first[s]] += cfg.init_scale;
    }
    break;
  }
  return policy;
}

std::vector<TokenRecord> token_records(const RolloutBatch& batch) {
  std::vector<TokenRecord> out;
  for (const RolloutGroup& g : batch.groups) {
    for (std::size_t i = 0; i < g.trajectories.size(); ++i) {
      const Trajectory& tr = g.trajectories[i];
      const double adv = g.advantages.empty() ? 0.0 : g.advantages[i];
      for (std::size_t s = 0; s < tr.tokens.size(); ++s) {
        TokenRecord r;
        r.context = tr.context;
        r.step = s;
        r.action = tr.tokens[s];
        r.p_old = tr.p_old[s];
        r.p_theta = tr.p_old[s];
        r.advantage = adv;
        out.push_back(r);
      }
    }
  }
  return out;
}

namespace {

bool in_set(const std::vector<RegionLabel>& set, RegionLabel l) {
  return std::find(set.begin(), set.end(), l) != set.end();
}

ClipOutcome evaluate_token(const TokenRecord& r, const ThresholdPair& pair,
                           const TrainConfig& cfg) {
  const RatioBounds bounds = ratio_bounds(r.p_old, pair);
  if (!cfg.intervention || in_set(*cfg.intervention, r.region))
    return token_objective(r.p_theta, r.p_old, r.advantage, bounds, cfg.clip_mode);
  switch (cfg.others) {
  case OthersTreatment::HardClip:
    return token_objective(r.p_theta, r.p_old, r.advantage, bounds, ClipMode::HardClip);
  case OthersTreatment::Masked: {
    ClipOutcome out = unclipped_objective(r.p_theta, r.p_old, r.advantage, bounds);
    out.grad_coeff = 0.0;
    return out;
  }
  case OthersTreatment::Unclipped: break;
  }
  return unclipped_objective(r.p_theta, r.p_old, r.advantage, bounds);
}

} // namespace

UpdateResult assemble_gradient(const TabularPolicy& policy, std::span<TokenRecord> records,
                               const ThresholdPair& pair, const TrainConfig& cfg) {
  const std::size_t vocab = policy.vocab();
  UpdateResult out;
  out.gradient.assign(policy.table().size(), 0.0);
  if (records.empty()) return out;

  std::vector<std::optional<ProbVector>> cache(policy.n_cells());
  const double scale = 1.0 / static_cast<double>(records.size());
  for (TokenRecord& r : records) {
    const std::size_t cell = policy.cell_index(r.context, r.step);
    if (!cache[cell]) cache[cell] = policy.probs(r.context, r.step);
    const ProbVector& p = *cache[cell];
    r.p_theta = p[r.action];
    r.region = classify_band(r.p_theta, r.p_old, r.advantage, cfg.bands);
    r.clip = evaluate_token(r, pair, cfg);
    if (!std::isfinite(r.clip.objective) || !std::isfinite(r.clip.grad_coeff))
      throw RuntimeAbort("non-finite clipped objective: " + r.describe());

    out.objective += r.clip.objective * scale;
    if (r.clip.grad_coeff == 0.0) continue;
    // grad_z ln p_a = e_a - p
    double* g = out.gradient.data() + cell * vocab;
    const double w = r.clip.grad_coeff * scale;
    for (std::size_t x = 0; x < vocab; ++x) g[x] -= w * p[x];
    g[r.action] += w;
  }
  return out;
}

Trainer::Trainer(TrainConfig cfg)
    : cfg_(std::move(cfg)), policy_(initial_policy((cfg_.validate(), cfg_))),
      h_init_(mean_policy_entropy(policy_)),
      scheduler_([this] {
        StrategyConfig s = cfg_.strategy;
        if (!s.h_init) s.h_init = h_init_;
        return s;
      }()) {
  if (cfg_.optimizer == OptimizerKind::Adam) {
    adam_m_.assign(policy_.table().size(), 0.0);
    adam_v_.assign(policy_.table().size(), 0.0);
  }
}

void Trainer::apply_update(std::span<const double> gradient) {
  const std::size_t vocab = policy_.vocab();
  for (std::size_t cell = 0; cell < policy_.n_cells(); ++cell) {
    double sum = 0.0;
    for (std::size_t x = 0; x < vocab; ++x) sum += gradient[cell * vocab + x];
    if (std::abs(sum) > 1e-8)
      throw RuntimeAbort("cell update does not sum to zero (cell " + std::to_string(cell) + ")");
  }

  if (cfg_.optimizer == OptimizerKind::Sgd) {
    policy_.add_scaled(gradient, cfg_.learning_rate);
  } else {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++adam_t_;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(adam_t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(adam_t_));
    std::vector<double> step(gradient.size());
    for (std::size_t i = 0; i < gradient.size(); ++i) {
      adam_m_[i] = b1 * adam_m_[i] + (1.0 - b1) * gradient[i];
      adam_v_[i] = b2 * adam_v_[i] + (1.0 - b2) * gradient[i] * gradient[i];
      step[i] = (adam_m_[i] / c1) / (std::sqrt(adam_v_[i] / c2) + eps);
    }
    policy_.add_scaled(step, cfg_.learning_rate);
  }
  for (double v : policy_.table())
    if (!std::isfinite(v)) throw RuntimeAbort("non-finite logit after update");
}

MetricsRow Trainer::run_round() {
  if (done()) throw RuntimeAbort("training budget exhausted");
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t k = round_;

  MetricsRow row;
  row.step = k;
  row.entropy = mean_policy_entropy(policy_);
  const ThresholdPair pair = scheduler_.step(k, row.entropy);
  row.od_state = scheduler_.state().mode;

  RolloutBatch batch = sample_rollouts(policy_, cfg_.task, cfg_.group_size, cfg_.seed, k);
  double reward_sum = 0.0;
  std::size_t n_traj = 0;
  for (RolloutGroup& g : batch.groups) {
    g.advantages = group_advantages(g.rewards, cfg_.advantage_delta);
    for (double r : g.rewards) reward_sum += r;
    n_traj += g.rewards.size();
  }
  row.reward_mean = reward_sum / static_cast<double>(n_traj);

  std::vector<TokenRecord> records = token_records(batch);
  row.tokens = records.size();

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<TokenRecord> minibatch;
  std::size_t n_updates = 0, n_evals = 0, n_clipped = 0;
  double grad_norm_sum = 0.0, eps_up = 0.0, eps_lo = 0.0;

  for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
    if (cfg_.minibatches > 1) {
      std::mt19937_64 rng(stream_seed(cfg_.seed, k, epoch, 0x5bf1));
      std::shuffle(order.begin(), order.end(), rng);
    }
    for (std::size_t m = 0; m < cfg_.minibatches; ++m) {
      const std::size_t lo = records.size() * m / cfg_.minibatches;
      const std::size_t hi = records.size() * (m + 1) / cfg_.minibatches;
      minibatch.clear();
      for (std::size_t i = lo; i < hi; ++i) minibatch.push_back(records[order[i]]);

      UpdateResult upd = assemble_gradient(policy_, minibatch, pair, cfg_);
      for (std::size_t i = lo; i < hi; ++i) records[order[i]] = minibatch[i - lo];
      for (const TokenRecord& r : minibatch) {
        n_clipped += r.clip.clipped ? 1 : 0;
        eps_up += r.clip.r_max - 1.0;
        eps_lo += 1.0 - r.clip.r_min;
      }
      n_evals += minibatch.size();
      grad_norm_sum += std::sqrt(dot(upd.gradient, upd.gradient));
      ++n_updates;
      apply_update(upd.gradient);
    }
  }

  row.grad_norm = n_updates ? grad_norm_sum / static_cast<double>(n_updates) : 0.0;
  if (n_evals) {
    const double n = static_cast<double>(n_evals);
    row.clip_frac = static_cast<double>(n_clipped) / n;
    row.eps_up_mean = eps_up / n;
    row.eps_lo_mean = eps_lo / n;
  }
  row.regions = region_histogram(records, cfg_.bands);

  ++round_;
  if (cfg_.eval.every > 0 && (round_ % cfg_.eval.every == 0 || round_ == cfg_.rounds)) {
    const PassAtK pk = eval_pass_at_k(policy_, cfg_.task, cfg_.eval.k, cfg_.eval.n_samples,
                                      stream_seed(cfg_.seed, k, 0xe7a1));
    row.pass1 = pk.pass1;
    row.passk = pk.passk;
  }
  if (cfg_.record_wallclock)
    row.elapsed_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

std::vector<MetricsRow> train(const TrainConfig& cfg, const RowCallback& on_row) {
  Trainer trainer(cfg);
  std::vector<MetricsRow> rows;
  rows.reserve(cfg.rounds);
  while (!trainer.done()) {
    rows.push_back(trainer.run_round());
    if (on_row) on_row(rows.back());
  }
  return rows;
}

std::vector<MetricsRow> intervention_train(const TrainConfig& cfg, const RowCallback& on_row) {
  if (!cfg.intervention || cfg.intervention->empty())
    throw ConfigError("intervention_train: intervention set must not be empty");
  return train(cfg, on_row);
}

double pass_at_k_estimate(std::size_t n, std::size_t correct, std::size_t k) {
  if (k > n || correct > n) throw InvalidInput("pass_at_k_estimate: need k, c <= n");
  if (n - correct < k) return 1.0;
  double miss = 1.0;
  for (std::size_t i = n - correct + 1; i <= n; ++i)
    miss *= 1.0 - static_cast<double>(k) / static_cast<double>(i);
  return 1.0 - miss;
}

PassAtK eval_pass_at_k(const TabularPolicy& policy, const TaskSpec& task, std::size_t k,
                       std::size_t n_samples, std::uint64_t seed) {
  if (task.reward_mode != RewardMode::AnyExact)
    throw InvalidInput("eval_pass_at_k: task must use exact-match rewards");
  if (k < 1 || k > n_samples) throw InvalidInput("eval_pass_at_k: need 1 <= k <= n_samples");
  PassAtK out;
  TokenSeq seq(task.horizon);
  for (std::size_t c = 0; c < task.n_contexts; ++c) {
    std::vector<ProbVector> cells;
    for (std::size_t s = 0; s < task.horizon; ++s) cells.push_back(policy.probs(c, s));
    std::mt19937_64 rng(stream_seed(seed, c, 0xba55));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n_samples; ++i) {
      for (std::size_t s = 0; s < task.horizon; ++s)
        seq[s] = sample_categorical(cells[s], uniform01(rng()));
      correct += verify_reward(seq, c, task) == 1.0 ? 1 : 0;
    }
    out.pass1 += pass_at_k_estimate(n_samples, correct, 1);
    out.passk += pass_at_k_estimate(n_samples, correct, k);
  }
  out.pass1 /= static_cast<double>(task.n_contexts);
  out.passk /= static_cast<double>(task.n_contexts);
  return out;
}

GradEntropyDiag grad_entropy_diag(std::span<const MetricsRow> rows) {
  if (rows.size() < 10) throw InvalidInput("grad_entropy_diag: need at least 10 rows");
  GradEntropyDiag d;
  const double n = static_cast<double>(rows.size());
  double mh = 0.0, mg = 0.0;
  for (const MetricsRow& r : rows) {
    mh += r.entropy;
    mg += r.grad_norm;
    const double ratio = r.entropy > 0.0 ? r.grad_norm / (2.0 * r.entropy)
                                         : (r.grad_norm > 0.0 ? INFINITY : 0.0);
    d.max_ratio = std::max(d.max_ratio, ratio);
  }
  mh /= n;
  mg /= n;
  double shh = 0.0, sgg = 0.0, shg = 0.0;
  for (const MetricsRow& r : rows) {
    shh += (r.entropy - mh) * (r.entropy - mh);
    sgg += (r.grad_norm - mg) * (r.grad_norm - mg);
    shg += (r.entropy - mh) * (r.grad_norm - mg);
  }
  if (shh > 0.0 && sgg > 0.0) d.pearson = shg / std::sqrt(shh * sgg);
  return d;
}

} // namespace entroclip

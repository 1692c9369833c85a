#pragma once

// Experiment configuration files: `key = value` lines grouped in
// `[section]` blocks, `#` comments. Unknown sections or keys are rejected.
//
//   [task]      preset, target_seed, n_contexts, vocab, horizon,
//               targets_per_context, reward, reward_noise, name, targets
//   [strategy]  kind, eps_std, upper_slope, upper_intercept, lower_slope,
//               lower_intercept, t_max, phase_ratio, phase2_formula,
//               h_init, h_min_factor
//   [train]     learning_rate, epochs, minibatches, rounds, group_size, seed,
//               clip_mode, intervention, others, band_p_high, band_p_low,
//               band_ratio_lo, band_ratio_hi, advantage_delta, optimizer,
//               init, init_scale
//   [eval]      every, k, n_samples
//   [output]    dir, format, wallclock
//
// Inline targets use `;` between contexts, `|` between alternatives and
// spaces between tokens: `targets = 0 1 2 | 3 3 3 ; 1 1 0 | 2 0 1`.

#include <filesystem>
#include <string>

#include "entroclip/trainer.hpp"

namespace entroclip {

enum class MetricsFormat { Jsonl, Csv };

std::string to_string(MetricsFormat f);

struct ExperimentConfig {
  TrainConfig train;
  std::string out_dir = "runs/default";
  MetricsFormat format = MetricsFormat::Jsonl;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses configuration text; `origin` names the source in error messages.
/// Throws ConfigError.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");

ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully explicit configuration text that parses back to `cfg`.
std::string render_config(const ExperimentConfig& cfg);

} // namespace entroclip

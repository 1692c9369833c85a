#pragma once

// Batch commands behind the `entroclip` executable. Each returns a process
// exit code: 0 ok, 1 check/report failure, 2 config error, 3 runtime abort.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "entroclip/checks.hpp"
#include "entroclip/config.hpp"

namespace entroclip {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Environment variable that, when set, roots relative output directories.
inline constexpr const char* kOutRootEnv = "ENTROCLIP_OUT_ROOT";

std::filesystem::path resolve_out_dir(const std::string& out_dir);

/// Runs one experiment and writes metrics.<fmt> and resolved.cfg into dir.
/// Returns the metrics path.
std::filesystem::path run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir);

int cmd_train(const std::filesystem::path& config, std::ostream& out, std::ostream& err);
int cmd_check(std::ostream& out, std::ostream& err, const CheckHooks& hooks = {});
int cmd_sweep(const std::filesystem::path& config, const std::vector<double>& ratios,
              std::ostream& out, std::ostream& err);
int cmd_report(const std::filesystem::path& metrics, std::ostream& out, std::ostream& err);

/// Parses "0.3,0.4" into values; throws ConfigError on bad or empty input.
std::vector<double> parse_ratio_list(const std::string& text);

} // namespace entroclip

#pragma once

// Metrics persistence.
//
// JSONL: the first line is a header object {"header": {...}} carrying the
// seed, strategy and column list; each following line is one row with the
// fields, in order:
//
//   step, entropy, reward_mean, grad_norm, clip_frac, eps_up_mean,
//   eps_lo_mean, regions{e1,e2,e3,e4,neutral}, od_state, pass1, passk,
//   elapsed_s
//
// pass1, passk and elapsed_s are null when not measured.
//
// CSV: `# key=value` header comment lines, then a column-name line, then
// one row per line with regions flattened to regions_e1 .. regions_neutral
// and nulls written as empty cells.

#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "entroclip/config.hpp"
#include "entroclip/trainer.hpp"

namespace entroclip {

/// Column names in file order (regions flattened as in the CSV layout).
const std::vector<std::string>& metrics_columns();

class MetricsWriter {
public:
  MetricsWriter(const std::filesystem::path& path, MetricsFormat format,
                const std::map<std::string, std::string>& header);

  void write(const MetricsRow& row);

private:
  std::ofstream out_;
  MetricsFormat format_;
};

std::string row_to_json_line(const MetricsRow& row);

/// Header fields recorded for a run (seed, strategy, task, rounds).
std::map<std::string, std::string> run_header(const ExperimentConfig& cfg);

class MetricsParseError : public std::runtime_error {
public:
  MetricsParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

struct MetricsFile {
  std::map<std::string, std::string> header;
  std::vector<MetricsRow> rows;
};

/// Reads either format (detected from the first non-empty line). Throws
/// MetricsParseError naming the offending line.
MetricsFile read_metrics(const std::filesystem::path& path);

struct RunSummary {
  std::size_t rows = 0;
  double entropy_min = 0.0;
  double entropy_max = 0.0;
  double entropy_final = 0.0;
  std::size_t entropy_argmax = 0;
  double reward_final = 0.0;
  double clip_frac_mean = 0.0;
  std::size_t od_switches = 0;
  std::optional<double> pass1_final;
  std::optional<double> passk_final;
};

RunSummary summarize(std::span<const MetricsRow> rows);

/// Whitespace-separated plot-ready columns, one row per line.
void write_plot_columns(const std::filesystem::path& path, std::span<const MetricsRow> rows);

} // namespace entroclip

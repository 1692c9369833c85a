#include "entroclip/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "entroclip/error.hpp"
#include "entroclip/metrics_io.hpp"

namespace entroclip {

namespace fs = std::filesystem;

fs::path resolve_out_dir(const std::string& out_dir) {
  fs::path p(out_dir);
  if (const char* root = std::getenv(kOutRootEnv); root && *root && p.is_relative())
    return fs::path(root) / p;
  return p;
}

fs::path run_experiment(const ExperimentConfig& cfg, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw RuntimeAbort("cannot create output directory " + dir.string() + ": " + ec.message());

  {
    std::ofstream resolved(dir / "resolved.cfg", std::ios::binary | std::ios::trunc);
    if (!resolved) throw RuntimeAbort("cannot write " + (dir / "resolved.cfg").string());
    resolved << render_config(cfg);
  }
  const fs::path metrics = dir / ("metrics." + to_string(cfg.format));
  MetricsWriter writer(metrics, cfg.format, run_header(cfg));
  train(cfg.train, [&](const MetricsRow& row) { writer.write(row); });
  return metrics;
}

int cmd_train(const fs::path& config, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    const fs::path metrics = run_experiment(cfg, resolve_out_dir(cfg.out_dir));
    out << "wrote " << metrics.string() << " (" << cfg.train.rounds << " rows)\n";
  } catch (const RuntimeAbort& e) {
    err << "runtime abort: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "runtime abort: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_check(std::ostream& out, std::ostream& err, const CheckHooks& hooks) {
  bool all = true;
  for (const SuiteResult& r : run_all_checks(hooks)) {
    out << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(22) << r.name << r.summary
        << '\n';
    for (const std::string& f : r.failures) err << "  " << r.name << ": " << f << '\n';
    all = all && r.passed;
  }
  return all ? kExitOk : kExitFailure;
}

std::vector<double> parse_ratio_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("bad ratio '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty ratio list");
  return out;
}

int cmd_sweep(const fs::path& config, const std::vector<double>& ratios, std::ostream& out,
              std::ostream& err) {
  ExperimentConfig base;
  try {
    if (ratios.empty()) throw ConfigError("sweep needs at least one phase ratio");
    base = load_config(config);
    const StrategyKind k = base.train.strategy.kind;
    if (k != StrategyKind::ID && k != StrategyKind::DID)
      throw ConfigError("sweep needs strategy id or did, got " + to_string(k));
    for (double r : ratios) {
      ExperimentConfig probe = base;
      probe.train.strategy.phase_ratio = r;
      probe.train.validate();
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  const fs::path root = resolve_out_dir(base.out_dir);
  try {
    fs::create_directories(root);
    std::ofstream summary(root / "sweep_summary.csv", std::ios::binary | std::ios::trunc);
    summary << "phase_ratio,final_entropy,final_reward_mean,max_entropy,argmax_step\n";
    out << "phase_ratio  final_entropy  final_reward  max_entropy  argmax_step\n";
    for (double r : ratios) {
      ExperimentConfig run = base;
      run.train.strategy.phase_ratio = r;
      std::ostringstream name;
      name << "ratio_" << r;
      run.out_dir = (fs::path(base.out_dir) / name.str()).string();
      const fs::path metrics = run_experiment(run, root / name.str());
      const MetricsFile file = read_metrics(metrics);
      const RunSummary s = summarize(file.rows);
      summary << r << ',' << s.entropy_final << ',' << s.reward_final << ',' << s.entropy_max
              << ',' << s.entropy_argmax << '\n';
      out << std::left << std::setw(13) << r << std::setw(15) << s.entropy_final << std::setw(14)
          << s.reward_final << std::setw(13) << s.entropy_max << s.entropy_argmax << '\n';
    }
    out << "wrote " << (root / "sweep_summary.csv").string() << '\n';
  } catch (const std::exception& e) {
    err << "runtime abort: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_report(const fs::path& metrics, std::ostream& out, std::ostream& err) {
  MetricsFile file;
  try {
    file = read_metrics(metrics);
  } catch (const MetricsParseError& e) {
    err << metrics.string() << ": " << e.what() << '\n';
    return kExitFailure;
  }
  if (file.rows.empty()) {
    err << metrics.string() << ": no metrics rows\n";
    return kExitFailure;
  }
  const RunSummary s = summarize(file.rows);
  out << "rows            " << s.rows << '\n'
      << "entropy min     " << s.entropy_min << '\n'
      << "entropy max     " << s.entropy_max << " (step " << file.rows[s.entropy_argmax].step
      << ")\n"
      << "entropy final   " << s.entropy_final << '\n'
      << "reward final    " << s.reward_final << '\n'
      << "clip frac mean  " << s.clip_frac_mean << '\n'
      << "od switches     " << s.od_switches << '\n';
  if (s.pass1_final) out << "pass@1 final    " << *s.pass1_final << '\n';
  if (s.passk_final) out << "pass@k final    " << *s.passk_final << '\n';
  for (const auto& [k, v] : file.header) out << "header." << k << " = " << v << '\n';

  try {
    fs::path cols = metrics;
    cols.replace_extension(".dat");
    write_plot_columns(cols, file.rows);
    out << "wrote " << cols.string() << '\n';
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

} // namespace entroclip

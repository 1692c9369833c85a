#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "entroclip/commands.hpp"
#include "entroclip/error.hpp"

int main(int argc, char** argv) {
  using namespace entroclip;

  CLI::App app{"entroclip: clip-threshold entropy control experiments"};
  app.require_subcommand(1);

  std::string train_cfg;
  auto* train = app.add_subcommand("train", "run one experiment from a config file");
  train->add_option("config", train_cfg, "config file")->required();

  app.add_subcommand("check", "run the built-in oracle and invariant suites");

  std::string sweep_cfg, ratios = "0.3,0.4,0.5,0.6";
  auto* sweep = app.add_subcommand("sweep", "phase-ratio sweep for id/did strategies");
  sweep->add_option("config", sweep_cfg, "config file")->required();
  sweep->add_option("--ratios", ratios, "comma-separated phase ratios");

  std::string metrics;
  auto* report = app.add_subcommand("report", "summarize a metrics file");
  report->add_option("metrics", metrics, "metrics file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*train) return cmd_train(train_cfg, std::cout, std::cerr);
  if (app.got_subcommand("check")) return cmd_check(std::cout, std::cerr);
  if (*sweep) {
    std::vector<double> values;
    try {
      values = parse_ratio_list(ratios);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitConfig;
    }
    return cmd_sweep(sweep_cfg, values, std::cout, std::cerr);
  }
  if (*report) return cmd_report(metrics, std::cout, std::cerr);
  return kExitConfig;
}

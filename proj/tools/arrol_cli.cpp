// Experiment runner CLI: `run <config>` executes one experiment config,
// `report <dir>` summarizes a finished run, `sweep <config> --param k=v1,v2`
// fans one policy parameter across values. Exit codes: 0 ok, 2 config error,
// 3 infeasible keep-rate target.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "arrol/csv.hpp"
#include "arrol/experiment.hpp"

namespace {

std::optional<std::string> output_root_from(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("ARROL_OUTPUT_ROOT"); env && *env) return std::string(env);
  return std::nullopt;
}

struct SweepParam {
  std::string name;
  std::vector<double> values;
};

SweepParam parse_sweep_param(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos)
    throw arrol::ConfigError("--param: expected name=v1,v2,..., got '" + text + "'");
  SweepParam param;
  param.name = text.substr(0, eq);
  std::string body = text.substr(eq + 1);
  std::size_t pos = 0;
  while (pos <= body.size()) {
    auto comma = body.find(',', pos);
    if (comma == std::string::npos) comma = body.size();
    const std::string token = body.substr(pos, comma - pos);
    if (!token.empty()) {
      try {
        param.values.push_back(std::stod(token));
      } catch (const std::exception&) {
        throw arrol::ConfigError("--param: bad value '" + token + "'");
      }
    }
    pos = comma + 1;
  }
  if (param.values.empty()) throw arrol::ConfigError("--param: no values given");
  return param;
}

void apply_param(arrol::ExperimentConfig& cfg, const std::string& name, double value) {
  if (name == "kappa")
    cfg.policy.kappa = value;
  else if (name == "rho")
    cfg.policy.rho = value;
  else if (name == "lambda")
    cfg.policy.lambda = value;
  else
    throw arrol::ConfigError("--param: unsupported parameter '" + name +
                             "' (supported: kappa, rho, lambda)");
  cfg.policy.validate();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ARRoL rollout-pruning experiment runner"};
  app.require_subcommand(1);

  std::string run_config, run_root;
  CLI::App* run_cmd = app.add_subcommand("run", "run one experiment config");
  run_cmd->add_option("config", run_config, "path to the TOML experiment config")->required();
  run_cmd->add_option("--output-root", run_root, "root directory for relative output dirs");

  std::string report_dir;
  CLI::App* report_cmd = app.add_subcommand("report", "summarize a finished run directory");
  report_cmd->add_option("run_dir", report_dir, "run directory containing manifest.json")
      ->required();

  std::string sweep_config, sweep_root, sweep_param;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "sweep one policy parameter across values");
  sweep_cmd->add_option("config", sweep_config, "path to the TOML experiment config")->required();
  sweep_cmd->add_option("--param", sweep_param, "parameter sweep, e.g. kappa=0.25,0.5,0.75,1.0")
      ->required();
  sweep_cmd->add_option("--output-root", sweep_root, "root directory for relative output dirs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const auto cfg = arrol::ExperimentConfig::load(run_config);
      arrol::run_experiment(cfg, output_root_from(run_root));
      std::cout << "wrote " << arrol::resolve_output_dir(cfg, output_root_from(run_root)).string()
                << "\n";
      return 0;
    }
    if (report_cmd->parsed()) {
      arrol::report(report_dir, std::cout);
      return 0;
    }
    if (sweep_cmd->parsed()) {
      const auto base = arrol::ExperimentConfig::load(sweep_config);
      const SweepParam param = parse_sweep_param(sweep_param);
      const auto root = output_root_from(sweep_root);
      const std::filesystem::path sweep_dir = arrol::resolve_output_dir(base, root);
      std::filesystem::create_directories(sweep_dir);

      std::ofstream index(sweep_dir / "sweep_runs.csv", std::ios::binary);
      arrol::CsvWriter csv(index);
      csv.header({"param", "value", "run_dir"});
      for (double value : param.values) {
        arrol::ExperimentConfig cfg = base;
        apply_param(cfg, param.name, value);
        cfg.output_dir =
            (std::filesystem::path(base.output_dir) /
             (param.name + "=" + arrol::format_double(value))).string();
        arrol::run_experiment(cfg, root);
        csv.cell(param.name)
            .cell(value)
            .cell(arrol::resolve_output_dir(cfg, root).string());
        csv.end_row();
        std::cout << param.name << "=" << arrol::format_double(value) << " done\n";
      }
      return 0;
    }
  } catch (const arrol::UnreachableTargetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const arrol::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

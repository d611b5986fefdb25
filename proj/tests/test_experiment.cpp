#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "arrol/experiment.hpp"

using namespace arrol;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "arrol_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_CASE("empty config reproduces the paper defaults") {
  const ExperimentConfig cfg = ExperimentConfig::from_toml_text("");
  REQUIRE(cfg.kind == ExperimentKind::TrainSim);
  REQUIRE(cfg.policy.kappa == 0.5);
  REQUIRE(cfg.policy.rho == 0.5);
  REQUIRE(cfg.policy.lambda == 0.5);
  REQUIRE(cfg.policy.cold_start_steps == 20);
  REQUIRE(cfg.calibrator.bins == 128);
  REQUIRE(cfg.calibrator.alpha == 1.0);
  REQUIRE(cfg.engine.l_detect == 512);
  REQUIRE(cfg.workload.group_size == 16);
}

TEST_CASE("config validation produces field-level diagnostics") {
  REQUIRE_THROWS_AS(ExperimentConfig::from_toml_text("experiment = \"nope\"\n"), ConfigError);
  try {
    ExperimentConfig::from_toml_text("[policy]\nkappa = 1.5\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE(std::string(e.what()).find("policy.kappa") != std::string::npos);
  }
  REQUIRE_THROWS_AS(ExperimentConfig::from_toml_text("[workload]\ngroup_size = 1\n"),
                    ConfigError);
}

TEST_CASE("tts experiment writes its artifacts and reports") {
  const fs::path dir = fresh_dir("tts");
  ExperimentConfig cfg = ExperimentConfig::from_toml_text(R"cfg(
experiment = "tts"
seed = 3
[tts]
questions = 60
candidates = 8
quality_auc = 0.8
confidence_auc = 0.65
)cfg");
  cfg.output_dir = dir.string();
  REQUIRE(run_experiment(cfg) == 0);
  REQUIRE(fs::exists(dir / "manifest.json"));
  REQUIRE(fs::exists(dir / "voting.csv"));
  REQUIRE(fs::exists(dir / "cohort.jsonl"));
  REQUIRE(fs::exists(dir / "summary.csv"));

  std::ostringstream report_out;
  REQUIRE(report(dir, report_out) == 0);
  REQUIRE(report_out.str().find("rank-weighted >= majority") != std::string::npos);
}

TEST_CASE("theory experiment summary and report line") {
  const fs::path dir = fresh_dir("theory");
  ExperimentConfig cfg = ExperimentConfig::from_toml_text(R"cfg(
experiment = "theory"
seed = 5
[theory]
trials = 300
lemma_instances = 100
hoeffding_trials = 2000
)cfg");
  cfg.output_dir = dir.string();
  REQUIRE(run_experiment(cfg) == 0);

  std::ostringstream report_out;
  REQUIRE(report(dir, report_out) == 0);
  const std::string text = report_out.str();
  REQUIRE(text.find("theorem1 violations:") != std::string::npos);
  REQUIRE(text.find("PASS") != std::string::npos);
}

TEST_CASE("train_sim and kappa_sweep write deterministic artifacts") {
  const std::string base_config = R"cfg(
experiment = "train_sim"
seed = 11
[workload]
num_prompts = 3
group_size = 6
length = "fixed(48)"
score_model = "epsilon_uniform(0.05)"
difficulty = "beta(2,8)"
difficulty_mode = "per_rollout"
[policy]
cold_start_steps = 3
[engine]
capacity = 16
l_detect = 16
[train_sim]
steps = 8
log_rollouts = true
)cfg";
  const fs::path dir_a = fresh_dir("train_a");
  const fs::path dir_b = fresh_dir("train_b");
  ExperimentConfig cfg = ExperimentConfig::from_toml_text(base_config);
  cfg.output_dir = dir_a.string();
  REQUIRE(run_experiment(cfg) == 0);
  cfg.output_dir = dir_b.string();
  REQUIRE(run_experiment(cfg) == 0);

  for (const char* name : {"metrics.csv", "phase_summary.csv", "balance_summary.csv",
                           "rollouts.jsonl"})
    REQUIRE(slurp(dir_a / name) == slurp(dir_b / name));

  std::ostringstream report_out;
  REQUIRE(report(dir_a, report_out) == 0);
  REQUIRE(report_out.str().find("phase costs") != std::string::npos);
}

TEST_CASE("kappa sweep output shape") {
  const fs::path dir = fresh_dir("sweep");
  ExperimentConfig cfg = ExperimentConfig::from_toml_text(R"cfg(
experiment = "kappa_sweep"
seed = 13
[workload]
num_prompts = 3
group_size = 6
length = "fixed(64)"
score_model = "epsilon_uniform(0.05)"
[policy]
cold_start_steps = 2
[engine]
capacity = 32
l_detect = 16
[kappa_sweep]
kappas = [1.0, 0.5]
steps = 6
)cfg");
  cfg.output_dir = dir.string();
  REQUIRE(run_experiment(cfg) == 0);
  const std::string sweep = slurp(dir / "sweep.csv");
  REQUIRE(sweep.find("kappa,total_cost") != std::string::npos);

  std::ostringstream report_out;
  REQUIRE(report(dir, report_out) == 0);
  REQUIRE(report_out.str().find("total cost strictly decreasing") != std::string::npos);
}

TEST_CASE("calibration experiment meets its defaults") {
  const fs::path dir = fresh_dir("calibration");
  ExperimentConfig cfg = ExperimentConfig::from_toml_text(R"cfg(
experiment = "calibration"
seed = 17
[workload]
difficulty = "uniform(0,1)"
score_model = "logit_gauss(0)"
[calibration]
observations = 3000
)cfg");
  cfg.output_dir = dir.string();
  REQUIRE(run_experiment(cfg) == 0);
  REQUIRE(fs::exists(dir / "calibration_bins.csv"));
  std::ostringstream report_out;
  REQUIRE(report(dir, report_out) == 0);
  REQUIRE(report_out.str().find("invariance") != std::string::npos);
}

TEST_CASE("unreachable kappa surfaces as UnreachableTargetError") {
  const fs::path dir = fresh_dir("unreachable");
  ExperimentConfig cfg = ExperimentConfig::from_toml_text(R"cfg(
experiment = "train_sim"
seed = 19
[workload]
num_prompts = 2
group_size = 4
length = "fixed(32)"
[policy]
kappa = 0.97
cold_start_steps = 1
[engine]
capacity = 8
l_detect = 8
[train_sim]
steps = 4
baselines = []
)cfg");
  cfg.output_dir = dir.string();
  REQUIRE_THROWS_AS(run_experiment(cfg), UnreachableTargetError);
}

TEST_CASE("report on a missing manifest is a config error") {
  const fs::path dir = fresh_dir("empty_run");
  std::ostringstream out;
  REQUIRE_THROWS_AS(report(dir, out), ConfigError);
}

TEST_CASE("manifest reproduces the run") {
  const fs::path dir = fresh_dir("manifest");
  ExperimentConfig cfg = ExperimentConfig::from_toml_text(
      "experiment = \"tts\"\nseed = 23\n[tts]\nquestions = 10\ncandidates = 4\n");
  cfg.output_dir = dir.string();
  REQUIRE(run_experiment(cfg) == 0);

  const nlohmann::json manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  REQUIRE(manifest.at("experiment") == "tts");
  REQUIRE(manifest.at("seed") == 23);
  ExperimentConfig replay =
      ExperimentConfig::from_toml_text(manifest.at("config_text").get<std::string>());
  const fs::path dir2 = fresh_dir("manifest_replay");
  replay.output_dir = dir2.string();
  REQUIRE(run_experiment(replay) == 0);
  REQUIRE(slurp(dir / "cohort.jsonl") == slurp(dir2 / "cohort.jsonl"));
  REQUIRE(slurp(dir / "voting.csv") == slurp(dir2 / "voting.csv"));
}

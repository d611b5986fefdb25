#pragma once

// Experiment runner: parses the TOML config, dispatches the five experiment
// families (calibration, theory, train_sim, kappa_sweep, tts), and writes
// metrics CSV / rollout JSONL / a run manifest. Every artifact is a pure
// function of (config, seed); the manifest embeds the config text so a run
// can be reproduced from the manifest alone.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "arrol/balance_oracle.hpp"
#include "arrol/calibration.hpp"
#include "arrol/common.hpp"
#include "arrol/csv.hpp"
#include "arrol/engine.hpp"
#include "arrol/rng.hpp"
#include "arrol/rollout.hpp"
#include "arrol/survival.hpp"
#include "arrol/toml.hpp"
#include "arrol/voting.hpp"
#include "arrol/workload.hpp"

namespace arrol {

struct CalibratorConfig {
  int bins = 128;
  double alpha = 1.0;
  std::int64_t buffer_capacity = 4096;

  void validate() const {
    if (bins < 2) throw ConfigError("calibrator.bins: must be >= 2");
    if (alpha < 0.0) throw ConfigError("calibrator.alpha: must be >= 0");
    if (buffer_capacity < 1) throw ConfigError("calibrator.buffer_capacity: must be >= 1");
  }
  BinnedCalibrator make() const {
    return BinnedCalibrator(bins, alpha, static_cast<std::size_t>(buffer_capacity));
  }
};

enum class ExperimentKind { Calibration, Theory, TrainSim, KappaSweep, Tts };

inline std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Calibration: return "calibration";
    case ExperimentKind::Theory: return "theory";
    case ExperimentKind::TrainSim: return "train_sim";
    case ExperimentKind::KappaSweep: return "kappa_sweep";
    case ExperimentKind::Tts: return "tts";
  }
  throw std::logic_error("unknown experiment kind");
}

inline ExperimentKind experiment_kind_from_string(const std::string& name) {
  if (name == "calibration") return ExperimentKind::Calibration;
  if (name == "theory") return ExperimentKind::Theory;
  if (name == "train_sim") return ExperimentKind::TrainSim;
  if (name == "kappa_sweep") return ExperimentKind::KappaSweep;
  if (name == "tts") return ExperimentKind::Tts;
  throw ConfigError("experiment: expected one of calibration|theory|train_sim|kappa_sweep|tts, got '" +
                    name + "'");
}

struct TheoryConfig {
  int trials = 10000;
  int g = 17;
  double epsilon = 0.05;
  double confidence_delta = 0.05;
  double rho = 0.5;
  int lemma_instances = 1000;
  int lemma_max_g = 16;
  std::vector<double> hoeffding_g{9, 17};
  std::vector<double> t_grid{0.1, 0.2, 0.34, 0.5};
  int hoeffding_trials = 100000;
};

struct TrainSimConfig {
  int steps = 200;
  std::vector<std::string> baselines{"random", "none"};
  bool log_rollouts = false;
};

struct KappaSweepConfig {
  std::vector<double> kappas{1.0, 0.75, 0.5, 0.25};
  int steps = 60;
};

struct TtsConfig {
  int questions = 1000;
  int candidates = 32;
  double quality_auc = 0.8;
  double confidence_auc = 0.65;
  int wrong_answer_pool = 4;
  std::string pass_rate = "uniform(0.05,0.95)";
};

struct CalibrationExpConfig {
  int observations = 10000;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::TrainSim;
  std::uint64_t seed = 0;
  std::string output_dir;

  WorkloadConfig workload;
  SurvivalPolicyParams policy;
  EngineConfig engine;
  CalibratorConfig calibrator;

  TheoryConfig theory;
  TrainSimConfig train_sim;
  KappaSweepConfig kappa_sweep;
  TtsConfig tts;
  CalibrationExpConfig calibration;

  std::string config_text;

  static ExperimentConfig from_toml_text(const std::string& text) {
    const toml::Document doc = toml::parse(text);
    ExperimentConfig cfg;
    cfg.config_text = text;
    cfg.kind = experiment_kind_from_string(doc.get_string("", "experiment", "train_sim"));
    const std::int64_t seed = doc.get_int("", "seed", 0);
    if (seed < 0) throw ConfigError("seed: must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.output_dir = doc.get_string("", "output_dir", "runs/" + to_string(cfg.kind));

    cfg.workload.num_prompts = static_cast<int>(doc.get_int("workload", "num_prompts", 16));
    cfg.workload.group_size = static_cast<int>(doc.get_int("workload", "group_size", 16));
    if (doc.has("workload", "difficulty"))
      cfg.workload.difficulty = DifficultySpec::parse(doc.get_string("workload", "difficulty", ""));
    const std::string mode = doc.get_string("workload", "difficulty_mode", "per_prompt");
    if (mode == "per_rollout")
      cfg.workload.per_rollout_difficulty = true;
    else if (mode == "per_prompt")
      cfg.workload.per_rollout_difficulty = false;
    else
      throw ConfigError("workload.difficulty_mode: expected per_prompt or per_rollout");
    if (doc.has("workload", "length"))
      cfg.workload.length = LengthSpec::parse(doc.get_string("workload", "length", ""));
    if (doc.has("workload", "score_model"))
      cfg.workload.score_model =
          ScoreModelSpec::parse(doc.get_string("workload", "score_model", ""));
    cfg.workload.validate();

    cfg.policy.kappa = doc.get_double("policy", "kappa", 0.5);
    cfg.policy.rho = doc.get_double("policy", "rho", 0.5);
    cfg.policy.lambda = doc.get_double("policy", "lambda", 0.5);
    cfg.policy.p_min = doc.get_double("policy", "p_min", 0.05);
    cfg.policy.p_max = doc.get_double("policy", "p_max", 0.95);
    cfg.policy.min_survivors = static_cast<int>(doc.get_int("policy", "min_survivors", 2));
    cfg.policy.cold_start_steps = static_cast<int>(doc.get_int("policy", "cold_start_steps", 20));
    cfg.policy.validate();

    cfg.engine.capacity = static_cast<int>(doc.get_int("engine", "capacity", 256));
    cfg.engine.l_detect = doc.get_int("engine", "l_detect", 512);
    cfg.engine.cost_gen_per_token_step =
        doc.get_double("engine", "cost_gen_per_token_step", cfg.engine.cost_gen_per_token_step);
    cfg.engine.cost_logprob_per_token =
        doc.get_double("engine", "cost_logprob_per_token", cfg.engine.cost_logprob_per_token);
    cfg.engine.cost_update_per_token =
        doc.get_double("engine", "cost_update_per_token", cfg.engine.cost_update_per_token);
    cfg.engine.validate();

    cfg.calibrator.bins = static_cast<int>(doc.get_int("calibrator", "bins", 128));
    cfg.calibrator.alpha = doc.get_double("calibrator", "alpha", 1.0);
    cfg.calibrator.buffer_capacity = doc.get_int("calibrator", "buffer_capacity", 4096);
    cfg.calibrator.validate();

    cfg.theory.trials = static_cast<int>(doc.get_int("theory", "trials", 10000));
    cfg.theory.g = static_cast<int>(doc.get_int("theory", "g", 17));
    cfg.theory.epsilon = doc.get_double("theory", "epsilon", 0.05);
    cfg.theory.confidence_delta = doc.get_double("theory", "confidence_delta", 0.05);
    cfg.theory.rho = doc.get_double("theory", "rho", 0.5);
    cfg.theory.lemma_instances = static_cast<int>(doc.get_int("theory", "lemma_instances", 1000));
    cfg.theory.lemma_max_g = static_cast<int>(doc.get_int("theory", "lemma_max_g", 16));
    cfg.theory.hoeffding_g = doc.get_double_array("theory", "hoeffding_g", cfg.theory.hoeffding_g);
    cfg.theory.t_grid = doc.get_double_array("theory", "t_grid", cfg.theory.t_grid);
    cfg.theory.hoeffding_trials =
        static_cast<int>(doc.get_int("theory", "hoeffding_trials", 100000));
    if (cfg.theory.trials < 1) throw ConfigError("theory.trials: must be >= 1");
    if (cfg.theory.g < 2) throw ConfigError("theory.g: must be >= 2");
    if (!(cfg.theory.confidence_delta > 0.0 && cfg.theory.confidence_delta < 1.0))
      throw ConfigError("theory.confidence_delta: must lie in (0,1)");

    cfg.train_sim.steps = static_cast<int>(doc.get_int("train_sim", "steps", 200));
    cfg.train_sim.baselines =
        doc.get_string_array("train_sim", "baselines", cfg.train_sim.baselines);
    cfg.train_sim.log_rollouts = doc.get_bool("train_sim", "log_rollouts", false);
    for (const auto& b : cfg.train_sim.baselines)
      if (b != "random" && b != "none")
        throw ConfigError("train_sim.baselines: expected random or none, got '" + b + "'");

    cfg.kappa_sweep.kappas =
        doc.get_double_array("kappa_sweep", "kappas", cfg.kappa_sweep.kappas);
    cfg.kappa_sweep.steps = static_cast<int>(doc.get_int("kappa_sweep", "steps", 60));
    if (cfg.kappa_sweep.kappas.empty()) throw ConfigError("kappa_sweep.kappas: must be nonempty");

    cfg.tts.questions = static_cast<int>(doc.get_int("tts", "questions", 1000));
    cfg.tts.candidates = static_cast<int>(doc.get_int("tts", "candidates", 32));
    cfg.tts.quality_auc = doc.get_double("tts", "quality_auc", 0.8);
    cfg.tts.confidence_auc = doc.get_double("tts", "confidence_auc", 0.65);
    cfg.tts.wrong_answer_pool = static_cast<int>(doc.get_int("tts", "wrong_answer_pool", 4));
    cfg.tts.pass_rate = doc.get_string("tts", "pass_rate", cfg.tts.pass_rate);

    cfg.calibration.observations =
        static_cast<int>(doc.get_int("calibration", "observations", 10000));
    if (cfg.calibration.observations < 1)
      throw ConfigError("calibration.observations: must be >= 1");

    return cfg;
  }

  static ExperimentConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file not found: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_toml_text(buffer.str());
  }
};

// --- manifest ---------------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace detail

inline void write_manifest(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                           const std::vector<std::string>& artifacts) {
  nlohmann::json manifest{
      {"experiment", to_string(cfg.kind)},
      {"seed", cfg.seed},
      {"version", std::string("arrol ") + kVersion},
      {"config_hash", "fnv1a64:" + detail::hex64(fnv1a64(cfg.config_text))},
      {"config_text", cfg.config_text},
      {"artifacts", artifacts},
  };
  detail::write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

// --- experiment bodies ------------------------------------------------------

namespace detail {

// Strictly increasing map of normalized scores that preserves bin assignment
// (squares the within-bin fraction); used for the invariance check.
inline double bin_preserving_transform(double raw, int bins) {
  const double u = normalize_score(raw);
  const int b = bin_index(u, bins);
  const double frac =
      std::clamp(u * static_cast<double>(bins) - static_cast<double>(b), 0.0, 1.0);
  const double u2 = (static_cast<double>(b) + frac * frac) / static_cast<double>(bins);
  return logit(u2);
}

struct CalibrationOutcome {
  double mace = 0.0;
  int occupied_bins = 0;
  double invariance_max_abs_diff = 0.0;
};

inline CalibrationOutcome run_calibration_experiment(const ExperimentConfig& cfg,
                                                     const std::filesystem::path& dir,
                                                     std::vector<std::string>& artifacts) {
  BinnedCalibrator calibrator = cfg.calibrator.make();
  BinnedCalibrator twin = cfg.calibrator.make();
  const int bins = cfg.calibrator.bins;
  std::vector<double> q_sum(static_cast<std::size_t>(bins), 0.0);
  std::vector<std::int64_t> q_count(static_cast<std::size_t>(bins), 0);

  Rng rng(derive_seed(cfg.seed, 0xCA11));
  for (int i = 0; i < cfg.calibration.observations; ++i) {
    const double q = cfg.workload.difficulty.sample(rng);
    const int label = draw_label(q, rng);
    const double raw = cfg.workload.score_model.raw_score(q, rng);
    calibrator.observe(raw, label);
    twin.observe(bin_preserving_transform(raw, bins), label);
    const int b = bin_index(normalize_score(raw), bins);
    q_sum[static_cast<std::size_t>(b)] += q;
    ++q_count[static_cast<std::size_t>(b)];
  }

  CalibrationOutcome outcome;
  std::ofstream bins_out(dir / "calibration_bins.csv", std::ios::binary);
  CsvWriter csv(bins_out);
  csv.header({"bin", "pos_count", "neg_count", "occupancy", "posterior", "true_rate",
              "abs_error"});
  double err_sum = 0.0;
  for (int b = 0; b < bins; ++b) {
    const auto idx = static_cast<std::size_t>(b);
    if (calibrator.occupancy(b) == 0) continue;
    const double post = calibrator.posterior_for_bin(b);
    const double truth = q_count[idx] > 0 ? q_sum[idx] / static_cast<double>(q_count[idx]) : 0.0;
    const double err = std::abs(post - truth);
    err_sum += err;
    ++outcome.occupied_bins;
    csv.cell(b)
        .cell(calibrator.pos_count(b))
        .cell(calibrator.neg_count(b))
        .cell(calibrator.occupancy(b))
        .cell(post)
        .cell(truth)
        .cell(err);
    csv.end_row();
  }
  artifacts.push_back("calibration_bins.csv");
  outcome.mace =
      outcome.occupied_bins > 0 ? err_sum / static_cast<double>(outcome.occupied_bins) : 0.0;

  for (int b = 0; b < bins; ++b) {
    if (calibrator.occupancy(b) == 0 && twin.occupancy(b) == 0) continue;
    outcome.invariance_max_abs_diff =
        std::max(outcome.invariance_max_abs_diff,
                 std::abs(calibrator.posterior_for_bin(b) - twin.posterior_for_bin(b)));
  }

  std::ofstream summary_out(dir / "summary.csv", std::ios::binary);
  CsvWriter summary(summary_out);
  summary.header({"metric", "value"});
  summary.cell("observations").cell(std::int64_t{cfg.calibration.observations});
  summary.end_row();
  summary.cell("occupied_bins").cell(std::int64_t{outcome.occupied_bins});
  summary.end_row();
  summary.cell("mace").cell(outcome.mace);
  summary.end_row();
  summary.cell("invariance_max_abs_diff").cell(outcome.invariance_max_abs_diff);
  summary.end_row();
  artifacts.push_back("summary.csv");
  return outcome;
}

inline void run_theory_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                                  std::vector<std::string>& artifacts) {
  const TheoryConfig& th = cfg.theory;

  std::int64_t violations = 0;
  {
    std::ofstream out(dir / "theorem1_trials.csv", std::ios::binary);
    CsvWriter csv(out);
    csv.header({"trial", "g", "epsilon", "confidence_delta", "lhs", "rhs", "holds"});
    Rng rng(derive_seed(cfg.seed, 0x7401));
    for (int t = 0; t < th.trials; ++t) {
      const auto inst = PruneInstance::random(th.g, th.epsilon, th.rho, rng);
      const Theorem1Trial trial = theorem1_trial(inst, th.confidence_delta, rng);
      if (!trial.holds) ++violations;
      csv.cell(std::int64_t{t})
          .cell(th.g)
          .cell(th.epsilon)
          .cell(th.confidence_delta)
          .cell(trial.lhs)
          .cell(trial.rhs)
          .cell(trial.holds);
      csv.end_row();
    }
    artifacts.push_back("theorem1_trials.csv");
  }

  std::int64_t error_transfer_violations = 0, near_optimality_violations = 0, lemma1_applicable = 0,
               lemma1_improvement_failures = 0;
  {
    std::ofstream out(dir / "lemma_checks.csv", std::ios::binary);
    CsvWriter csv(out);
    csv.header({"instance", "g", "error_transfer_ok", "near_optimality_ok", "lemma1_applicable", "deviation_before",
                "deviation_after"});
    Rng rng(derive_seed(cfg.seed, 0x7402));
    for (int i = 0; i < th.lemma_instances; ++i) {
      const int g = 2 + static_cast<int>(rng.uniform_int(std::max(1, th.lemma_max_g - 1)));
      const auto inst = PruneInstance::random(g, th.epsilon, th.rho, rng);

      bool error_transfer_ok = true;
      for (std::size_t j = 0; j < inst.q_star.size(); ++j)
        if (std::abs(pruned_mean(inst.q_hat, j) - pruned_mean(inst.q_star, j)) > inst.epsilon)
          error_transfer_ok = false;
      const std::size_t j_hat = best_prune_index(inst.q_hat, inst.rho);
      double min_dev = std::abs(pruned_mean(inst.q_star, 0) - inst.rho);
      for (std::size_t j = 1; j < inst.q_star.size(); ++j)
        min_dev = std::min(min_dev, std::abs(pruned_mean(inst.q_star, j) - inst.rho));
      const bool near_optimality_ok =
          std::abs(pruned_mean(inst.q_star, j_hat) - inst.rho) <= min_dev + 2.0 * inst.epsilon;
      if (!error_transfer_ok) ++error_transfer_violations;
      if (!near_optimality_ok) ++near_optimality_violations;

      const Lemma1Report report = lemma1_check(inst);
      if (report.applicable) {
        ++lemma1_applicable;
        if (!(report.deviation_after < report.deviation_before)) ++lemma1_improvement_failures;
      }
      csv.cell(std::int64_t{i})
          .cell(g)
          .cell(error_transfer_ok)
          .cell(near_optimality_ok)
          .cell(report.applicable)
          .cell(report.deviation_before)
          .cell(report.deviation_after);
      csv.end_row();
    }
    artifacts.push_back("lemma_checks.csv");
  }

  bool hoeffding_all_hold = true;
  {
    std::ofstream out(dir / "hoeffding.csv", std::ios::binary);
    CsvWriter csv(out);
    csv.header({"g", "t", "empirical", "bound", "sigma_mc", "holds"});
    for (double g_value : th.hoeffding_g) {
      const int g = static_cast<int>(g_value);
      Rng qrng(derive_seed(cfg.seed, 0x7403 + static_cast<std::uint64_t>(g)));
      std::vector<double> q_star(static_cast<std::size_t>(g));
      for (double& q : q_star) q = qrng.uniform01();
      const auto points =
          hoeffding_tail_check(g, q_star, th.t_grid, th.hoeffding_trials,
                               derive_seed(cfg.seed, 0x7500 + static_cast<std::uint64_t>(g)));
      for (const HoeffdingPoint& pt : points) {
        if (!pt.holds) hoeffding_all_hold = false;
        csv.cell(g).cell(pt.t).cell(pt.empirical).cell(pt.bound).cell(pt.sigma_mc).cell(pt.holds);
        csv.end_row();
      }
    }
    artifacts.push_back("hoeffding.csv");
  }

  std::ofstream out(dir / "summary.csv", std::ios::binary);
  CsvWriter csv(out);
  csv.header({"metric", "value"});
  csv.cell("theorem1_trials").cell(std::int64_t{th.trials});
  csv.end_row();
  csv.cell("theorem1_violations").cell(violations);
  csv.end_row();
  csv.cell("theorem1_violation_fraction")
      .cell(static_cast<double>(violations) / static_cast<double>(th.trials));
  csv.end_row();
  csv.cell("confidence_delta").cell(th.confidence_delta);
  csv.end_row();
  csv.cell("lemma_instances").cell(std::int64_t{th.lemma_instances});
  csv.end_row();
  csv.cell("error_transfer_violations").cell(error_transfer_violations);
  csv.end_row();
  csv.cell("near_optimality_violations").cell(near_optimality_violations);
  csv.end_row();
  csv.cell("lemma1_applicable").cell(lemma1_applicable);
  csv.end_row();
  csv.cell("lemma1_improvement_failures").cell(lemma1_improvement_failures);
  csv.end_row();
  csv.cell("hoeffding_all_hold").cell(hoeffding_all_hold);
  csv.end_row();
  artifacts.push_back("summary.csv");
}

struct ModeSummary {
  std::string mode;
  PhaseCosts costs;      // post-cold-start steps only
  PhaseCosts costs_all;  // every step
  double keep_ratio = 0.0;
  double mean_rho_hat = 0.0;
  double mean_variance_proxy = 0.0;
  double predictor_accuracy = 0.0;
  double mean_abs_advantage = 0.0;
  int counted_steps = 0;
};

inline PruneMode prune_mode_from_string(const std::string& name) {
  if (name == "arrol") return PruneMode::Arrol;
  if (name == "random") return PruneMode::Random;
  if (name == "none") return PruneMode::None;
  throw ConfigError("pruning mode: expected arrol|random|none, got '" + name + "'");
}

// Post-cold-start means; the warmup window is identical across modes, so
// excluding it keeps the phase comparison about pruning, not warmup.
inline ModeSummary summarize_mode(const std::string& mode, const TrainingResult& result,
                                  int cold_start_steps) {
  ModeSummary s;
  s.mode = mode;
  for (const StepMetrics& m : result.series) {
    s.costs_all.generation += m.gen_cost;
    s.costs_all.logprob += m.logprob_cost;
    s.costs_all.update += m.update_cost;
    if (m.step < cold_start_steps) continue;
    s.costs.generation += m.gen_cost;
    s.costs.logprob += m.logprob_cost;
    s.costs.update += m.update_cost;
    s.keep_ratio += m.keep_ratio;
    s.mean_rho_hat += m.mean_rho_hat;
    s.mean_variance_proxy += m.mean_variance_proxy;
    s.predictor_accuracy += m.predictor_accuracy;
    s.mean_abs_advantage += m.mean_abs_advantage;
    ++s.counted_steps;
  }
  if (s.counted_steps == 0) {
    // degenerate config (cold start covers the whole run): fall back to all steps
    for (const StepMetrics& m : result.series) {
      s.costs.generation += m.gen_cost;
      s.costs.logprob += m.logprob_cost;
      s.costs.update += m.update_cost;
      s.keep_ratio += m.keep_ratio;
      s.mean_rho_hat += m.mean_rho_hat;
      s.mean_variance_proxy += m.mean_variance_proxy;
      s.predictor_accuracy += m.predictor_accuracy;
      s.mean_abs_advantage += m.mean_abs_advantage;
      ++s.counted_steps;
    }
  }
  const auto n = static_cast<double>(std::max(s.counted_steps, 1));
  s.keep_ratio /= n;
  s.mean_rho_hat /= n;
  s.mean_variance_proxy /= n;
  s.predictor_accuracy /= n;
  s.mean_abs_advantage /= n;
  return s;
}

inline void write_metrics_csv(CsvWriter& csv, const std::string& mode,
                              const std::vector<StepMetrics>& series) {
  for (const StepMetrics& m : series) {
    csv.cell(mode)
        .cell(m.step)
        .cell(m.gen_cost)
        .cell(m.logprob_cost)
        .cell(m.update_cost)
        .cell(m.step_cost)
        .cell(m.cum_wall_cost)
        .cell(m.mean_group_reward)
        .cell(m.mean_rho_hat)
        .cell(m.mean_variance_proxy)
        .cell(m.keep_ratio)
        .cell(m.predictor_accuracy)
        .cell(m.mean_abs_advantage)
        .cell(m.degenerate_fraction)
        .cell(m.delta)
        .cell(m.direction)
        .cell(m.pruned_this_step);
    csv.end_row();
  }
}

inline const std::vector<std::string> kMetricsColumns{
    "mode",          "step",          "gen_cost",        "logprob_cost",
    "update_cost",   "step_cost",     "cum_wall_cost",   "mean_group_reward",
    "mean_rho_hat",  "mean_variance_proxy", "keep_ratio", "predictor_accuracy",
    "mean_abs_advantage", "degenerate_fraction", "delta", "direction",
    "pruned_this_step"};

inline void run_train_sim_experiment(const ExperimentConfig& cfg,
                                     const std::filesystem::path& dir,
                                     std::vector<std::string>& artifacts) {
  std::vector<std::string> modes{"arrol"};
  for (const std::string& b : cfg.train_sim.baselines)
    if (std::find(modes.begin(), modes.end(), b) == modes.end()) modes.push_back(b);

  std::ofstream metrics_out(dir / "metrics.csv", std::ios::binary);
  CsvWriter metrics(metrics_out);
  metrics.header(kMetricsColumns);

  std::vector<ModeSummary> summaries;
  for (const std::string& mode : modes) {
    TrainingOptions options;
    options.steps = cfg.train_sim.steps;
    options.mode = prune_mode_from_string(mode);
    options.log_rollouts = cfg.train_sim.log_rollouts && mode == "arrol";
    const TrainingResult result =
        run_training(cfg.engine, cfg.workload, SurvivalPolicy(cfg.policy), cfg.calibrator.make(),
                     options, cfg.seed);
    write_metrics_csv(metrics, mode, result.series);
    summaries.push_back(summarize_mode(mode, result, cfg.policy.cold_start_steps));
    if (options.log_rollouts) {
      std::ofstream jsonl(dir / "rollouts.jsonl", std::ios::binary);
      write_rollouts_jsonl(jsonl, result.logged_rollouts);
      artifacts.push_back("rollouts.jsonl");
    }
    if (mode == "arrol") {
      // checkpoint of the on-the-fly quality estimator
      write_text_file(dir / "calibrator_snapshot.json",
                      result.final_calibrator.snapshot().dump() + "\n");
      artifacts.push_back("calibrator_snapshot.json");
    }
  }
  artifacts.push_back("metrics.csv");

  const ModeSummary* baseline = nullptr;
  for (const ModeSummary& s : summaries)
    if (s.mode == "none") baseline = &s;

  std::ofstream phase_out(dir / "phase_summary.csv", std::ios::binary);
  CsvWriter phase(phase_out);
  phase.header({"mode", "generation", "logprob", "update", "total", "speedup_generation",
                "speedup_logprob", "speedup_update", "speedup_total"});
  for (const ModeSummary& s : summaries) {
    phase.cell(s.mode)
        .cell(s.costs.generation)
        .cell(s.costs.logprob)
        .cell(s.costs.update)
        .cell(s.costs.total());
    if (baseline && s.costs.generation > 0.0 && s.costs.logprob > 0.0 && s.costs.update > 0.0) {
      phase.cell(baseline->costs.generation / s.costs.generation)
          .cell(baseline->costs.logprob / s.costs.logprob)
          .cell(baseline->costs.update / s.costs.update)
          .cell(baseline->costs.total() / s.costs.total());
    } else {
      phase.cell(1.0).cell(1.0).cell(1.0).cell(1.0);
    }
    phase.end_row();
  }
  artifacts.push_back("phase_summary.csv");

  std::ofstream balance_out(dir / "balance_summary.csv", std::ios::binary);
  CsvWriter balance(balance_out);
  balance.header({"mode", "keep_ratio", "mean_rho_hat", "mean_variance_proxy",
                  "predictor_accuracy", "mean_abs_advantage", "counted_steps"});
  for (const ModeSummary& s : summaries) {
    balance.cell(s.mode)
        .cell(s.keep_ratio)
        .cell(s.mean_rho_hat)
        .cell(s.mean_variance_proxy)
        .cell(s.predictor_accuracy)
        .cell(s.mean_abs_advantage)
        .cell(std::int64_t{s.counted_steps});
    balance.end_row();
  }
  artifacts.push_back("balance_summary.csv");
}

inline void run_kappa_sweep_experiment(const ExperimentConfig& cfg,
                                       const std::filesystem::path& dir,
                                       std::vector<std::string>& artifacts) {
  std::ofstream metrics_out(dir / "metrics.csv", std::ios::binary);
  CsvWriter metrics(metrics_out);
  metrics.header(kMetricsColumns);

  struct Row {
    double kappa;
    ModeSummary summary;
  };
  std::vector<Row> rows;
  for (double kappa : cfg.kappa_sweep.kappas) {
    SurvivalPolicyParams params = cfg.policy;
    params.kappa = kappa;
    params.validate();
    if (kappa < 1.0 && (kappa < params.p_min || kappa > params.p_max))
      throw UnreachableTargetError(
          "kappa_sweep: kappa outside [p_min, p_max]",
          std::clamp(kappa, params.p_min, params.p_max));
    TrainingOptions options;
    options.steps = cfg.kappa_sweep.steps;
    options.mode = PruneMode::Arrol;
    const TrainingResult result = run_training(cfg.engine, cfg.workload, SurvivalPolicy(params),
                                               cfg.calibrator.make(), options, cfg.seed);
    const std::string label = "kappa=" + format_double(kappa);
    write_metrics_csv(metrics, label, result.series);
    rows.push_back({kappa, summarize_mode(label, result, params.cold_start_steps)});
  }
  artifacts.push_back("metrics.csv");

  const Row* reference = nullptr;  // the kappa=1 run, else the largest kappa
  for (const Row& r : rows)
    if (!reference || r.kappa > reference->kappa) reference = &r;

  std::ofstream sweep_out(dir / "sweep.csv", std::ios::binary);
  CsvWriter sweep(sweep_out);
  sweep.header({"kappa", "total_cost", "generation", "logprob", "update", "speedup",
                "keep_ratio", "mean_rho_hat", "mean_variance_proxy"});
  for (const Row& r : rows) {
    const double total = r.summary.costs_all.total();
    sweep.cell(r.kappa)
        .cell(total)
        .cell(r.summary.costs_all.generation)
        .cell(r.summary.costs_all.logprob)
        .cell(r.summary.costs_all.update)
        .cell(total > 0.0 ? reference->summary.costs_all.total() / total : 1.0)
        .cell(r.summary.keep_ratio)
        .cell(r.summary.mean_rho_hat)
        .cell(r.summary.mean_variance_proxy);
    sweep.end_row();
  }
  artifacts.push_back("sweep.csv");
}

inline void run_tts_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                               std::vector<std::string>& artifacts) {
  TtsCohortConfig cohort_config;
  cohort_config.num_questions = cfg.tts.questions;
  cohort_config.candidates_per_question = cfg.tts.candidates;
  cohort_config.quality_auc = cfg.tts.quality_auc;
  cohort_config.confidence_auc = cfg.tts.confidence_auc;
  cohort_config.wrong_answer_pool = cfg.tts.wrong_answer_pool;
  cohort_config.pass_rate = DifficultySpec::parse(cfg.tts.pass_rate);
  const TtsCohort cohort = generate_tts_cohort(cohort_config, derive_seed(cfg.seed, 0x7751));

  {
    std::ofstream jsonl(dir / "cohort.jsonl", std::ios::binary);
    write_tts_jsonl(jsonl, cohort.questions);
    artifacts.push_back("cohort.jsonl");
  }

  std::ofstream out(dir / "voting.csv", std::ios::binary);
  CsvWriter csv(out);
  csv.header({"method", "accuracy", "ci_low", "ci_high"});
  const std::vector<std::pair<std::string, VoteMethod>> methods{
      {"majority", VoteMethod::Majority},
      {"confidence", VoteMethod::Confidence},
      {"rank_quality", VoteMethod::RankQuality},
  };
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const VotingAccuracy acc = evaluate_voting(cohort.questions, methods[m].second,
                                               derive_seed(cfg.seed, 0x7760 + m));
    csv.cell(methods[m].first).cell(acc.accuracy).cell(acc.ci_low).cell(acc.ci_high);
    csv.end_row();
  }
  artifacts.push_back("voting.csv");

  std::ofstream summary_out(dir / "summary.csv", std::ios::binary);
  CsvWriter summary(summary_out);
  summary.header({"metric", "value"});
  summary.cell("measured_quality_auc").cell(cohort.measured_quality_auc);
  summary.end_row();
  summary.cell("measured_confidence_auc").cell(cohort.measured_confidence_auc);
  summary.end_row();
  artifacts.push_back("summary.csv");
}

}  // namespace detail

inline std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg,
                                                const std::optional<std::string>& output_root) {
  std::filesystem::path out(cfg.output_dir);
  if (output_root && out.is_relative()) out = std::filesystem::path(*output_root) / out;
  return out;
}

// Runs the configured experiment and writes all artifacts plus the manifest.
// Returns 0 on success; throws ConfigError / UnreachableTargetError.
inline int run_experiment(const ExperimentConfig& cfg,
                          const std::optional<std::string>& output_root = std::nullopt) {
  const std::filesystem::path dir = resolve_output_dir(cfg, output_root);
  std::filesystem::create_directories(dir);
  std::vector<std::string> artifacts;
  switch (cfg.kind) {
    case ExperimentKind::Calibration:
      detail::run_calibration_experiment(cfg, dir, artifacts);
      break;
    case ExperimentKind::Theory:
      detail::run_theory_experiment(cfg, dir, artifacts);
      break;
    case ExperimentKind::TrainSim:
      detail::run_train_sim_experiment(cfg, dir, artifacts);
      break;
    case ExperimentKind::KappaSweep:
      detail::run_kappa_sweep_experiment(cfg, dir, artifacts);
      break;
    case ExperimentKind::Tts:
      detail::run_tts_experiment(cfg, dir, artifacts);
      break;
  }
  write_manifest(cfg, dir, artifacts);
  return 0;
}

// --- report -----------------------------------------------------------------

namespace detail {

inline std::vector<std::map<std::string, std::string>> read_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("report: missing artifact " + path.string());
  std::vector<std::map<std::string, std::string>> rows;
  std::string line;
  std::vector<std::string> header;
  const auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      const auto comma = s.find(',', pos);
      if (comma == std::string::npos) {
        cells.push_back(s.substr(pos));
        break;
      }
      cells.push_back(s.substr(pos, comma - pos));
      pos = comma + 1;
    }
    return cells;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (header.empty()) {
      header = cells;
      continue;
    }
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i)
      row[header[i]] = cells[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

inline double csv_num(const std::map<std::string, std::string>& row, const std::string& key) {
  return std::stod(row.at(key));
}

inline std::map<std::string, std::string> summary_map(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  for (const auto& row : read_csv(path)) out[row.at("metric")] = row.at("value");
  return out;
}

inline const char* pass(bool ok) { return ok ? "PASS" : "FAIL"; }

}  // namespace detail

// Prints headline metrics with their acceptance thresholds and a PASS/FAIL
// mark per line. Returns 0; throws ConfigError when the manifest is missing.
inline int report(const std::filesystem::path& run_dir, std::ostream& out) {
  const std::filesystem::path manifest_path = run_dir / "manifest.json";
  std::ifstream manifest_in(manifest_path);
  if (!manifest_in) throw ConfigError("report: missing manifest " + manifest_path.string());
  const nlohmann::json manifest = nlohmann::json::parse(manifest_in);
  const std::string kind = manifest.at("experiment").get<std::string>();

  out << "experiment: " << kind << "  seed: " << manifest.at("seed").get<std::uint64_t>()
      << "  (" << manifest.at("version").get<std::string>() << ")\n";

  if (kind == "theory") {
    const auto summary = detail::summary_map(run_dir / "summary.csv");
    const double violations = std::stod(summary.at("theorem1_violations"));
    const double trials = std::stod(summary.at("theorem1_trials"));
    const double delta = std::stod(summary.at("confidence_delta"));
    const double fraction = std::stod(summary.at("theorem1_violation_fraction"));
    out << "theorem1 violations: " << static_cast<std::int64_t>(violations) << "/"
        << static_cast<std::int64_t>(trials) << " (bound delta=" << delta
        << "): " << detail::pass(fraction <= delta) << "\n";
    const double a1 = std::stod(summary.at("error_transfer_violations"));
    const double a2 = std::stod(summary.at("near_optimality_violations"));
    out << "error-transfer violations: " << static_cast<std::int64_t>(a1) << ": "
        << detail::pass(a1 == 0) << "\n";
    out << "near-optimality violations: " << static_cast<std::int64_t>(a2) << ": "
        << detail::pass(a2 == 0) << "\n";
    const bool hoeffding = summary.at("hoeffding_all_hold") == "true";
    out << "hoeffding tails within bound + 3 sigma: " << detail::pass(hoeffding) << "\n";
  } else if (kind == "calibration") {
    const auto summary = detail::summary_map(run_dir / "summary.csv");
    const double mace = std::stod(summary.at("mace"));
    const double inv = std::stod(summary.at("invariance_max_abs_diff"));
    out << "mean absolute calibration error: " << mace
        << " (threshold 0.05): " << detail::pass(mace <= 0.05) << "\n";
    out << "monotone-transform invariance max diff: " << inv
        << " (exact): " << detail::pass(inv == 0.0) << "\n";
  } else if (kind == "train_sim") {
    const auto phases = detail::read_csv(run_dir / "phase_summary.csv");
    out << "phase costs (post cold start)\n";
    out << "  mode        generation      logprob       update\n";
    for (const auto& row : phases) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "  %-10s %10.2f (%.2fx) %9.2f (%.2fx) %9.2f (%.2fx)\n",
                    row.at("mode").c_str(), detail::csv_num(row, "generation"),
                    detail::csv_num(row, "speedup_generation"), detail::csv_num(row, "logprob"),
                    detail::csv_num(row, "speedup_logprob"), detail::csv_num(row, "update"),
                    detail::csv_num(row, "speedup_update"));
      out << buf;
    }
    const auto balance = detail::read_csv(run_dir / "balance_summary.csv");
    const std::map<std::string, std::string>* arrol = nullptr;
    const std::map<std::string, std::string>* random = nullptr;
    out << "balance (post cold start)\n";
    for (const auto& row : balance) {
      out << "  " << row.at("mode") << ": keep_ratio " << row.at("keep_ratio") << ", E[rho_hat] "
          << row.at("mean_rho_hat") << ", E[rho_hat(1-rho_hat)] " << row.at("mean_variance_proxy")
          << ", predictor_accuracy " << row.at("predictor_accuracy") << "\n";
      if (row.at("mode") == "arrol") arrol = &row;
      if (row.at("mode") == "random") random = &row;
    }
    if (arrol && random) {
      const double proxy_gap = detail::csv_num(*arrol, "mean_variance_proxy") -
                               detail::csv_num(*random, "mean_variance_proxy");
      const double rho = 0.5;
      const double dev_arrol = std::abs(detail::csv_num(*arrol, "mean_rho_hat") - rho);
      const double dev_random = std::abs(detail::csv_num(*random, "mean_rho_hat") - rho);
      out << "variance-proxy gap vs random: " << format_double(proxy_gap)
          << " (threshold +0.01): " << detail::pass(proxy_gap >= 0.01) << "\n";
      out << "|E[rho_hat]-rho| " << format_double(dev_arrol) << " vs random "
          << format_double(dev_random) << ": " << detail::pass(dev_arrol < dev_random) << "\n";
    }
  } else if (kind == "kappa_sweep") {
    const auto rows = detail::read_csv(run_dir / "sweep.csv");
    out << "  kappa   total_cost   speedup   keep_ratio\n";
    for (const auto& row : rows) {
      char buf[120];
      std::snprintf(buf, sizeof(buf), "  %-7s %12.2f %8.2fx %11.4f\n", row.at("kappa").c_str(),
                    detail::csv_num(row, "total_cost"), detail::csv_num(row, "speedup"),
                    detail::csv_num(row, "keep_ratio"));
      out << buf;
    }
    std::vector<std::pair<double, double>> cost_by_kappa;
    for (const auto& row : rows)
      cost_by_kappa.emplace_back(detail::csv_num(row, "kappa"),
                                 detail::csv_num(row, "total_cost"));
    std::sort(cost_by_kappa.begin(), cost_by_kappa.end());
    bool monotone = true;
    for (std::size_t i = 1; i < cost_by_kappa.size(); ++i)
      if (!(cost_by_kappa[i - 1].second < cost_by_kappa[i].second)) monotone = false;
    out << "total cost strictly decreasing as kappa decreases: " << detail::pass(monotone)
        << "\n";
  } else if (kind == "tts") {
    const auto rows = detail::read_csv(run_dir / "voting.csv");
    double majority = 0.0, rank = 0.0, confidence = 0.0;
    out << "  method        accuracy   95% CI\n";
    for (const auto& row : rows) {
      char buf[120];
      std::snprintf(buf, sizeof(buf), "  %-12s %8.4f   [%.4f, %.4f]\n",
                    row.at("method").c_str(), detail::csv_num(row, "accuracy"),
                    detail::csv_num(row, "ci_low"), detail::csv_num(row, "ci_high"));
      out << buf;
      if (row.at("method") == "majority") majority = detail::csv_num(row, "accuracy");
      if (row.at("method") == "rank_quality") rank = detail::csv_num(row, "accuracy");
      if (row.at("method") == "confidence") confidence = detail::csv_num(row, "accuracy");
    }
    out << "rank-weighted >= majority: " << detail::pass(rank >= majority) << "\n";
    out << "rank-weighted >= confidence-weighted: " << detail::pass(rank >= confidence) << "\n";
  } else {
    throw ConfigError("report: unknown experiment kind '" + kind + "'");
  }
  return 0;
}

}  // namespace arrol

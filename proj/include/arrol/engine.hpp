#pragma once

// Discrete-event simulator of the frontend/backend training loop. The
// backend holds a FIFO request pool and advances up to `capacity` active
// sequences by one token per engine step. The first time a sequence reaches
// the detection length its raw score is turned into a posterior, a survival
// probability is computed and a keep/prune decision is sampled; pruned
// sequences leave the active set immediately and the pool refills at the
// next step, so freed capacity goes to other sequences. The frontend then
// re-batches survivors for log-probability and update cost accounting.
//
// Costs are abstract units: generation accrues per active sequence per
// engine step, logprob/update per survivor token. Defaults reproduce the
// no-prune phase split 106.82 : 18.40 : 63.05.
//
// A single run is single-threaded and bit-deterministic in
// (config, workload, seed); prune decisions draw from per-rollout substreams
// so an individual decision does not depend on capacity or admission order.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "arrol/calibration.hpp"
#include "arrol/common.hpp"
#include "arrol/rng.hpp"
#include "arrol/rollout.hpp"
#include "arrol/survival.hpp"
#include "arrol/workload.hpp"

namespace arrol {

struct EngineConfig {
  int capacity = 256;
  std::int64_t l_detect = 512;
  double cost_gen_per_token_step = 1.0;
  double cost_logprob_per_token = 18.40 / 106.82;
  double cost_update_per_token = 63.05 / 106.82;

  void validate() const {
    if (capacity < 1) throw ConfigError("engine.capacity: must be >= 1");
    if (l_detect < 1) throw ConfigError("engine.l_detect: must be >= 1");
    if (cost_gen_per_token_step < 0.0 || cost_logprob_per_token < 0.0 ||
        cost_update_per_token < 0.0)
      throw ConfigError("engine costs: must be >= 0");
  }
};

struct PhaseCosts {
  double generation = 0.0;
  double logprob = 0.0;
  double update = 0.0;

  double total() const { return generation + logprob + update; }
  PhaseCosts& operator+=(const PhaseCosts& other) {
    generation += other.generation;
    logprob += other.logprob;
    update += other.update;
    return *this;
  }
};

enum class PruneMode { Arrol, Random, None };

struct EngineStepOptions {
  PruneMode mode = PruneMode::Arrol;
  bool pruning_enabled = true;
  bool record_active_counts = false;  // for work-conservation checks
};

struct EngineStepResult {
  std::vector<Rollout> rollouts;  // input order, with final lengths and flags
  std::map<std::int64_t, bool> prune_mask;
  PhaseCosts costs;  // generation phase only
  std::int64_t engine_steps = 0;
  std::int64_t generated_tokens = 0;
  std::int64_t decisions = 0;
  std::int64_t kept_at_decision = 0;
  std::int64_t forced_keeps = 0;
  std::vector<std::int64_t> active_per_step;
};

// Simulates one generation round over the given groups. The calibrator is
// frozen for the whole round (observations only flow back between steps).
inline EngineStepResult run_step(std::span<const RolloutGroup> groups,
                                 const SurvivalPolicy& policy,
                                 const BinnedCalibrator& calibrator,
                                 const EngineConfig& config, std::uint64_t seed,
                                 EngineStepOptions options = {}) {
  config.validate();

  EngineStepResult result;
  std::vector<int> group_of;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (const Rollout& r : groups[g].rollouts) {
      result.rollouts.push_back(r);
      result.rollouts.back().generated_length = 0;
      result.rollouts.back().pruned = false;
      group_of.push_back(static_cast<int>(g));
    }
  }
  if (result.rollouts.empty()) return result;

  // Per-group floor bookkeeping: members that cannot be pruned any more
  // (kept at decision, or too short to ever face one) count as guaranteed.
  struct GroupState {
    std::int64_t guaranteed = 0;
    std::int64_t pending = 0;
  };
  std::vector<GroupState> group_state(groups.size());
  for (std::size_t i = 0; i < result.rollouts.size(); ++i) {
    auto& gs = group_state[static_cast<std::size_t>(group_of[i])];
    if (result.rollouts[i].total_length <= config.l_detect)
      ++gs.guaranteed;
    else
      ++gs.pending;
  }
  const auto floor_per_group = static_cast<std::int64_t>(
      std::max(policy.params().min_survivors, 0));

  std::deque<std::size_t> pool;
  for (std::size_t i = 0; i < result.rollouts.size(); ++i) pool.push_back(i);
  std::vector<std::size_t> active;
  active.reserve(static_cast<std::size_t>(config.capacity));

  while (!pool.empty() || !active.empty()) {
    while (static_cast<int>(active.size()) < config.capacity && !pool.empty()) {
      active.push_back(pool.front());
      pool.pop_front();
    }
    if (options.record_active_counts)
      result.active_per_step.push_back(static_cast<std::int64_t>(active.size()));

    result.costs.generation +=
        static_cast<double>(active.size()) * config.cost_gen_per_token_step;
    result.generated_tokens += static_cast<std::int64_t>(active.size());
    ++result.engine_steps;

    std::vector<std::size_t> still_active;
    still_active.reserve(active.size());
    for (std::size_t idx : active) {
      Rollout& r = result.rollouts[idx];
      ++r.generated_length;

      if (options.pruning_enabled && r.generated_length == config.l_detect &&
          r.total_length > config.l_detect) {
        ++result.decisions;
        double p = policy.params().kappa;
        if (options.mode == PruneMode::Arrol)
          p = policy.survival_prob(calibrator.posterior(r.raw_score));
        r.survival_prob = p;
        Rng decision_rng(derive_seed(seed, static_cast<std::uint64_t>(r.id)));
        bool keep = decision_rng.bernoulli(p);
        auto& gs = group_state[static_cast<std::size_t>(group_of[idx])];
        if (!keep && gs.guaranteed + gs.pending - 1 < floor_per_group) {
          keep = true;
          ++result.forced_keeps;
        }
        --gs.pending;
        if (keep) {
          ++gs.guaranteed;
          ++result.kept_at_decision;
        } else {
          r.pruned = true;
          continue;  // leaves the active set immediately
        }
      }

      if (r.generated_length < r.total_length) still_active.push_back(idx);
    }
    active.swap(still_active);
  }

  for (const Rollout& r : result.rollouts) result.prune_mask[r.id] = r.pruned;
  return result;
}

// Survivor re-batching cost: logprob and update are linear in survivor tokens.
inline PhaseCosts frontend_step(std::span<const Rollout> survivors, const EngineConfig& config) {
  std::int64_t tokens = 0;
  for (const Rollout& r : survivors) {
    if (r.pruned) continue;
    tokens += r.generated_length;
  }
  PhaseCosts costs;
  costs.logprob = static_cast<double>(tokens) * config.cost_logprob_per_token;
  costs.update = static_cast<double>(tokens) * config.cost_update_per_token;
  return costs;
}

// --- training loop ---------------------------------------------------------

struct TrainingOptions {
  int steps = 200;
  PruneMode mode = PruneMode::Arrol;
  std::int64_t first_prompt_id = 0;
  bool log_rollouts = false;
};

struct StepMetrics {
  int step = 0;
  double gen_cost = 0.0;
  double logprob_cost = 0.0;
  double update_cost = 0.0;
  double step_cost = 0.0;
  double cum_wall_cost = 0.0;
  double mean_group_reward = 0.0;      // mean label over completed rollouts
  double mean_rho_hat = 0.0;           // E[rho_hat] across groups
  double mean_variance_proxy = 0.0;    // E[rho_hat (1 - rho_hat)]
  double keep_ratio = 1.0;
  double predictor_accuracy = 0.0;     // thresholded posterior vs label
  double mean_abs_advantage = 0.0;
  double degenerate_fraction = 0.0;    // groups with zero reward variance
  double delta = 0.0;
  int direction = 1;
  bool pruned_this_step = false;
};

struct TrainingResult {
  std::vector<StepMetrics> series;
  std::vector<Rollout> logged_rollouts;
  PhaseCosts totals;
  SurvivalPolicy final_policy{SurvivalPolicyParams{}};
  BinnedCalibrator final_calibrator{};
};

// Frontend loop: generate groups, prune in the backend sim, re-batch
// survivors, account costs, compute balance stats and advantages, and feed
// completed rollouts back into the calibrator (the on-the-fly quality head).
// During the cold-start window everything is kept and only observed. Pruned
// rollouts never reach the calibrator.
inline TrainingResult run_training(const EngineConfig& engine, const WorkloadConfig& workload,
                                   SurvivalPolicy policy, BinnedCalibrator calibrator,
                                   const TrainingOptions& options, std::uint64_t seed) {
  engine.validate();
  workload.validate();
  if (options.steps < 1) throw ConfigError("train.steps: must be >= 1");

  TrainingResult result;
  result.series.reserve(static_cast<std::size_t>(options.steps));
  double cum_cost = 0.0;

  for (int step = 0; step < options.steps; ++step) {
    const std::uint64_t step_seed = derive_seed(seed, static_cast<std::uint64_t>(step));
    const auto groups = generate_batch(
        workload, options.first_prompt_id + static_cast<std::int64_t>(step) * workload.num_prompts,
        workload.num_prompts, derive_seed(step_seed, 1));

    const bool cold = step < policy.params().cold_start_steps;
    bool pruning = !cold && options.mode != PruneMode::None && policy.params().kappa < 1.0;
    StepMetrics m;
    m.step = step;
    if (pruning && options.mode == PruneMode::Arrol) {
      const auto dist = calibrator_bin_distribution(calibrator);
      if (dist.empty())
        pruning = false;  // nothing observed yet
      else
        policy.solve_delta(dist);
    }
    m.delta = policy.delta();
    m.direction = policy.direction();
    m.pruned_this_step = pruning;

    EngineStepOptions step_options;
    step_options.mode = options.mode;
    step_options.pruning_enabled = pruning;
    const EngineStepResult backend =
        run_step(groups, policy, calibrator, engine, derive_seed(step_seed, 2), step_options);

    // Re-assemble groups with final flags for balance/advantage computation.
    std::vector<RolloutGroup> finished(groups.size());
    {
      std::size_t cursor = 0;
      for (std::size_t g = 0; g < groups.size(); ++g) {
        finished[g].prompt_id = groups[g].prompt_id;
        for (std::size_t k = 0; k < groups[g].rollouts.size(); ++k)
          finished[g].rollouts.push_back(backend.rollouts[cursor++]);
      }
    }

    const PhaseCosts fe = frontend_step(backend.rollouts, engine);
    m.gen_cost = backend.costs.generation;
    m.logprob_cost = fe.logprob;
    m.update_cost = fe.update;
    m.step_cost = m.gen_cost + m.logprob_cost + m.update_cost;
    cum_cost += m.step_cost;
    m.cum_wall_cost = cum_cost;
    result.totals += backend.costs;
    result.totals += fe;

    std::int64_t completed = 0, positives = 0, correct_pred = 0;
    for (const Rollout& r : backend.rollouts) {
      if (r.pruned) continue;
      ++completed;
      positives += r.label;
      const int predicted = calibrator.posterior(r.raw_score) >= 0.5 ? 1 : 0;
      correct_pred += predicted == r.label ? 1 : 0;
    }
    m.keep_ratio = static_cast<double>(completed) / static_cast<double>(backend.rollouts.size());
    m.mean_group_reward =
        completed > 0 ? static_cast<double>(positives) / static_cast<double>(completed) : 0.0;
    m.predictor_accuracy =
        completed > 0 ? static_cast<double>(correct_pred) / static_cast<double>(completed) : 0.0;

    double rho_sum = 0.0, proxy_sum = 0.0, adv_sum = 0.0;
    std::int64_t groups_with_survivors = 0, degenerate = 0, adv_count = 0;
    for (const RolloutGroup& g : finished) {
      try {
        const BalanceStats stats = balance_stats(g);
        rho_sum += stats.rho_hat;
        proxy_sum += stats.variance_proxy;
        ++groups_with_survivors;
        if (stats.variance_proxy == 0.0) ++degenerate;
      } catch (const DegenerateGroupError&) {
        continue;
      }
      try {
        for (double a : group_advantages(g)) {
          adv_sum += std::abs(a);
          ++adv_count;
        }
      } catch (const DegenerateGroupError&) {
      }
    }
    if (groups_with_survivors > 0) {
      m.mean_rho_hat = rho_sum / static_cast<double>(groups_with_survivors);
      m.mean_variance_proxy = proxy_sum / static_cast<double>(groups_with_survivors);
      m.degenerate_fraction =
          static_cast<double>(degenerate) / static_cast<double>(groups_with_survivors);
    }
    if (adv_count > 0) m.mean_abs_advantage = adv_sum / static_cast<double>(adv_count);

    for (const Rollout& r : backend.rollouts)
      if (!r.pruned) calibrator.observe(r.raw_score, r.label);

    if (options.log_rollouts)
      result.logged_rollouts.insert(result.logged_rollouts.end(), backend.rollouts.begin(),
                                    backend.rollouts.end());
    result.series.push_back(m);
  }

  result.final_policy = policy;
  result.final_calibrator = calibrator;
  return result;
}

}  // namespace arrol

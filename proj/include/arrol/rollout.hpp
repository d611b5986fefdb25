#pragma once

// Core domain types: rollouts, prompt groups, verifiable rewards and the
// group-relative statistics computed over survivors.

#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "arrol/common.hpp"
#include "arrol/rng.hpp"

namespace arrol {

// One sampled trajectory. q_star is the latent Bernoulli success parameter
// the theory is stated over; label is the realized verifiable reward.
struct Rollout {
  std::int64_t id = 0;
  std::int64_t prompt_id = 0;
  double q_star = 0.0;
  int label = 0;
  double raw_score = 0.0;
  std::int64_t total_length = 1;
  std::int64_t generated_length = 0;
  bool pruned = false;
  std::optional<double> survival_prob;
};

// G rollouts for one prompt; the unit of advantage computation.
struct RolloutGroup {
  std::int64_t prompt_id = 0;
  std::vector<Rollout> rollouts;

  int group_size() const { return static_cast<int>(rollouts.size()); }
};

struct BalanceStats {
  double rho_hat = 0.0;        // positive fraction among survivors
  double variance_proxy = 0.0; // rho_hat * (1 - rho_hat)
};

inline int draw_label(double q_star, Rng& rng) {
  if (!(q_star >= 0.0 && q_star <= 1.0))
    throw std::domain_error("draw_label: q_star must lie in [0,1]");
  return rng.bernoulli(q_star) ? 1 : 0;
}

inline int draw_label(double q_star, std::uint64_t seed) {
  Rng rng(seed);
  return draw_label(q_star, rng);
}

inline void validate_group(const RolloutGroup& group) {
  if (group.group_size() < 2)
    throw DegenerateGroupError("group must contain at least 2 rollouts");
  for (const Rollout& r : group.rollouts)
    if (r.prompt_id != group.prompt_id)
      throw std::invalid_argument("group members must share the group prompt_id");
}

// Group-relative advantages over surviving rollouts, normalized by the
// population standard deviation. A zero-variance group yields all-zero
// advantages (vanishing learning signal, not an error).
inline std::vector<double> group_advantages(const RolloutGroup& group) {
  std::vector<double> rewards;
  rewards.reserve(group.rollouts.size());
  for (const Rollout& r : group.rollouts)
    if (!r.pruned) rewards.push_back(static_cast<double>(r.label));
  const auto n = rewards.size();
  if (n < 2)
    throw DegenerateGroupError("group_advantages: fewer than 2 surviving rollouts");

  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(n);
  const double sd = std::sqrt(var);

  std::vector<double> adv(n, 0.0);
  if (sd > 0.0)
    for (std::size_t i = 0; i < n; ++i) adv[i] = (rewards[i] - mean) / sd;
  return adv;
}

inline BalanceStats balance_stats(const RolloutGroup& group) {
  std::int64_t survivors = 0, positives = 0;
  for (const Rollout& r : group.rollouts) {
    if (r.pruned) continue;
    ++survivors;
    positives += r.label;
  }
  if (survivors == 0)
    throw DegenerateGroupError("balance_stats: group has no survivors");
  BalanceStats stats;
  stats.rho_hat = static_cast<double>(positives) / static_cast<double>(survivors);
  stats.variance_proxy = stats.rho_hat * (1.0 - stats.rho_hat);
  return stats;
}

// --- JSONL serialization -------------------------------------------------

inline nlohmann::json rollout_to_json(const Rollout& r) {
  nlohmann::json j{
      {"id", r.id},
      {"prompt_id", r.prompt_id},
      {"q_star", r.q_star},
      {"label", r.label},
      {"raw_score", r.raw_score},
      {"total_length", r.total_length},
      {"generated_length", r.generated_length},
      {"pruned", r.pruned},
  };
  if (r.survival_prob)
    j["survival_prob"] = *r.survival_prob;
  else
    j["survival_prob"] = nullptr;
  return j;
}

inline Rollout rollout_from_json(const nlohmann::json& j) {
  Rollout r;
  r.id = j.at("id").get<std::int64_t>();
  r.prompt_id = j.at("prompt_id").get<std::int64_t>();
  r.q_star = j.at("q_star").get<double>();
  r.label = j.at("label").get<int>();
  r.raw_score = j.at("raw_score").get<double>();
  r.total_length = j.at("total_length").get<std::int64_t>();
  r.generated_length = j.at("generated_length").get<std::int64_t>();
  r.pruned = j.at("pruned").get<bool>();
  const auto& sp = j.at("survival_prob");
  if (!sp.is_null()) r.survival_prob = sp.get<double>();
  return r;
}

inline void write_rollouts_jsonl(std::ostream& out, std::span<const Rollout> rollouts) {
  for (const Rollout& r : rollouts) out << rollout_to_json(r).dump() << '\n';
}

inline std::vector<Rollout> read_rollouts_jsonl(std::istream& in) {
  std::vector<Rollout> rollouts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rollouts.push_back(rollout_from_json(nlohmann::json::parse(line)));
  }
  return rollouts;
}

// Reassembles groups from a flat rollout list (e.g. a JSONL import),
// preserving first-seen prompt order and within-group order.
inline std::vector<RolloutGroup> group_rollouts(std::span<const Rollout> rollouts) {
  std::vector<RolloutGroup> groups;
  std::vector<std::int64_t> order;
  for (const Rollout& r : rollouts) {
    std::size_t slot = order.size();
    for (std::size_t i = 0; i < order.size(); ++i)
      if (order[i] == r.prompt_id) {
        slot = i;
        break;
      }
    if (slot == order.size()) {
      order.push_back(r.prompt_id);
      groups.push_back(RolloutGroup{r.prompt_id, {}});
    }
    groups[slot].rollouts.push_back(r);
  }
  return groups;
}

}  // namespace arrol

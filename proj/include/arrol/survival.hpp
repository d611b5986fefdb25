#pragma once

// Survival policy: map posterior success estimates to keep probabilities via
// the affine-clip rule
//
//   p(q) = clip(kappa + delta + s * lambda * (rho - q), p_min, p_max)
//
// where delta is solved by binary search so the expected keep rate over a
// reference posterior distribution equals kappa. The steer sign s is +1 when
// the reference distribution's mean sits at or above rho (prune likely
// positives) and -1 below rho (prune likely negatives); either way pruning
// pulls the surviving positive ratio toward rho. With the default s = +1 the
// rule is monotone nonincreasing in q.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "arrol/calibration.hpp"
#include "arrol/common.hpp"
#include "arrol/rng.hpp"

namespace arrol {

struct WeightedPosterior {
  double q = 0.0;
  double weight = 0.0;
};

struct SurvivalPolicyParams {
  double kappa = 0.5;
  double rho = 0.5;
  double lambda = 0.5;
  double p_min = 0.05;
  double p_max = 0.95;
  int min_survivors = 2;
  int cold_start_steps = 20;

  void validate() const {
    if (!(kappa >= 0.0 && kappa <= 1.0)) throw ConfigError("policy.kappa: must lie in [0,1]");
    if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("policy.rho: must lie in [0,1]");
    if (lambda < 0.0) throw ConfigError("policy.lambda: must be >= 0");
    if (!(p_min > 0.0 && p_min < p_max && p_max <= 1.0))
      throw ConfigError("policy.p_min/p_max: need 0 < p_min < p_max <= 1");
    if (min_survivors < 0) throw ConfigError("policy.min_survivors: must be >= 0");
    if (cold_start_steps < 0) throw ConfigError("policy.cold_start_steps: must be >= 0");
  }
};

class SurvivalPolicy {
public:
  SurvivalPolicy() { params_.validate(); }
  explicit SurvivalPolicy(SurvivalPolicyParams params) : params_(params) { params_.validate(); }

  const SurvivalPolicyParams& params() const { return params_; }
  double delta() const { return delta_; }
  int direction() const { return direction_; }
  void set_delta(double delta) { delta_ = delta; }
  void set_direction(int direction) {
    if (direction != 1 && direction != -1)
      throw std::invalid_argument("set_direction: direction must be +1 or -1");
    direction_ = direction;
  }

  double survival_prob(double q) const {
    if (!(q >= 0.0 && q <= 1.0))
      throw std::domain_error("survival_prob: q must lie in [0,1]");
    const double p = params_.kappa + delta_ +
                     static_cast<double>(direction_) * params_.lambda * (params_.rho - q);
    return std::clamp(p, params_.p_min, params_.p_max);
  }

  double expected_keep_rate(std::span<const WeightedPosterior> dist) const {
    double wsum = 0.0, psum = 0.0;
    for (const auto& [q, w] : dist) {
      psum += w * survival_prob(q);
      wsum += w;
    }
    if (wsum <= 0.0)
      throw std::invalid_argument("expected_keep_rate: distribution has no weight");
    return psum / wsum;
  }

  // Picks the steer direction from the distribution's weighted mean, then
  // binary-searches delta so the expected keep rate matches kappa (the
  // clipped mean is continuous and nondecreasing in delta). Tolerance 1e-6,
  // at most 200 bisections or an interval narrower than 1e-9.
  double solve_delta(std::span<const WeightedPosterior> dist) {
    if (dist.empty()) throw std::invalid_argument("solve_delta: empty distribution");
    double wsum = 0.0, qsum = 0.0;
    for (const auto& [q, w] : dist) {
      if (w < 0.0) throw std::invalid_argument("solve_delta: negative weight");
      qsum += w * q;
      wsum += w;
    }
    if (wsum <= 0.0) throw std::invalid_argument("solve_delta: distribution has no weight");
    const double kappa = params_.kappa;
    if (kappa < params_.p_min || kappa > params_.p_max) {
      const double nearest = std::clamp(kappa, params_.p_min, params_.p_max);
      throw UnreachableTargetError(
          "solve_delta: kappa outside [p_min, p_max]; nearest achievable keep rate is " +
              std::to_string(nearest),
          nearest);
    }
    direction_ = (qsum / wsum < params_.rho) ? -1 : 1;

    double lo = -(1.0 + params_.lambda);
    double hi = 1.0 + params_.lambda;
    const double saved = delta_;
    for (int iter = 0; iter < 200 && hi - lo > 1e-9; ++iter) {
      const double mid = 0.5 * (lo + hi);
      delta_ = mid;
      if (expected_keep_rate(dist) < kappa)
        lo = mid;
      else
        hi = mid;
    }
    delta_ = 0.5 * (lo + hi);
    if (std::abs(expected_keep_rate(dist) - kappa) > 1e-6) {
      const double achieved = expected_keep_rate(dist);
      delta_ = saved;
      throw UnreachableTargetError(
          "solve_delta: could not match kappa; nearest achieved keep rate is " +
              std::to_string(achieved),
          achieved);
    }
    return delta_;
  }

  // Independent Bernoulli keep per rollout. If the draw keeps fewer than
  // min_survivors, the kept set becomes exactly the min_survivors rollouts
  // with the highest survival probability (ties: lowest index).
  std::vector<std::uint8_t> decide(std::span<const double> qs, std::uint64_t seed) const {
    Rng rng(seed);
    const std::size_t n = qs.size();
    std::vector<double> probs(n);
    std::vector<std::uint8_t> keep(n, 0);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < n; ++i) {
      probs[i] = survival_prob(qs[i]);
      keep[i] = rng.bernoulli(probs[i]) ? 1 : 0;
      kept += keep[i];
    }
    const std::size_t floor = std::min<std::size_t>(
        static_cast<std::size_t>(std::max(params_.min_survivors, 0)), n);
    if (kept < floor) {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
      std::fill(keep.begin(), keep.end(), 0);
      for (std::size_t k = 0; k < floor; ++k) keep[order[k]] = 1;
    }
    return keep;
  }

private:
  SurvivalPolicyParams params_;
  double delta_ = 0.0;
  int direction_ = 1;
};

// The reference distribution the appendix solves delta against: the
// calibrator's bin posteriors weighted by current buffer occupancy.
inline std::vector<WeightedPosterior> calibrator_bin_distribution(const BinnedCalibrator& cal) {
  std::vector<WeightedPosterior> dist;
  for (int b = 0; b < cal.num_bins(); ++b) {
    const std::int64_t occ = cal.occupancy(b);
    if (occ == 0) continue;
    dist.push_back({cal.posterior_for_bin(b), static_cast<double>(occ)});
  }
  return dist;
}

}  // namespace arrol

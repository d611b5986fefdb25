#pragma once

// Synthetic workload generation: per-prompt (or per-rollout) latent
// difficulties, rollout lengths, raw quality scores with controllable
// informativeness, and candidate cohorts for test-time-scaling evaluation.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "arrol/common.hpp"
#include "arrol/confidence.hpp"
#include "arrol/rng.hpp"
#include "arrol/rollout.hpp"
#include "arrol/voting.hpp"

namespace arrol {

namespace detail {

// Parses "name(a,b,...)" into name + numeric args.
inline std::pair<std::string, std::vector<double>> parse_spec(const std::string& text,
                                                              const char* what) {
  const auto open = text.find('(');
  const auto close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw ConfigError(std::string(what) + ": expected name(args), got '" + text + "'");
  std::string name = text.substr(0, open);
  name.erase(std::remove_if(name.begin(), name.end(),
                            [](unsigned char c) { return std::isspace(c); }),
             name.end());
  std::vector<double> args;
  std::string body = text.substr(open + 1, close - open - 1);
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto comma = body.find(',', pos);
    if (comma == std::string::npos) comma = body.size();
    const std::string token = body.substr(pos, comma - pos);
    try {
      args.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": bad numeric argument '" + token + "'");
    }
    pos = comma + 1;
  }
  return {name, args};
}

inline double logit(double q) {
  const double c = std::clamp(q, 1e-9, 1.0 - 1e-9);
  return std::log(c / (1.0 - c));
}

// Inverse standard normal CDF by bisection on erfc; plenty for tuning the
// class separation of synthetic score models.
inline double probit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("probit: p must lie in (0,1)");
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
    (cdf < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

struct DifficultySpec {
  enum class Kind { Point, Beta, Uniform };
  Kind kind = Kind::Uniform;
  double a = 0.0, b = 1.0;

  static DifficultySpec parse(const std::string& text) {
    auto [name, args] = detail::parse_spec(text, "difficulty");
    DifficultySpec spec;
    if (name == "point" && args.size() == 1) {
      spec.kind = Kind::Point;
      spec.a = args[0];
      if (!(spec.a >= 0.0 && spec.a <= 1.0))
        throw ConfigError("difficulty point(v): v must lie in [0,1]");
    } else if (name == "beta" && args.size() == 2) {
      spec.kind = Kind::Beta;
      spec.a = args[0];
      spec.b = args[1];
      if (!(spec.a > 0.0 && spec.b > 0.0))
        throw ConfigError("difficulty beta(a,b): parameters must be positive");
    } else if (name == "uniform" && args.size() == 2) {
      spec.kind = Kind::Uniform;
      spec.a = args[0];
      spec.b = args[1];
      if (!(spec.a >= 0.0 && spec.b <= 1.0 && spec.a <= spec.b))
        throw ConfigError("difficulty uniform(lo,hi): need 0 <= lo <= hi <= 1");
    } else {
      throw ConfigError("difficulty: expected point(v), beta(a,b) or uniform(lo,hi)");
    }
    return spec;
  }

  double sample(Rng& rng) const {
    switch (kind) {
      case Kind::Point: return a;
      case Kind::Beta: return rng.beta(a, b);
      case Kind::Uniform: return rng.uniform(a, b);
    }
    throw std::logic_error("difficulty: unknown kind");
  }
};

struct LengthSpec {
  enum class Kind { Fixed, Uniform, LogNormal };
  Kind kind = Kind::LogNormal;
  // lognormal: mu/sigma in log space, clipped to [min_len, max_len].
  double a = 7.4733, b = 0.55;
  std::int64_t min_len = 512, max_len = 8192;

  static LengthSpec parse(const std::string& text) {
    auto [name, args] = detail::parse_spec(text, "length");
    LengthSpec spec;
    if (name == "fixed" && args.size() == 1) {
      spec.kind = Kind::Fixed;
      spec.a = args[0];
      if (spec.a < 1.0) throw ConfigError("length fixed(n): n must be >= 1");
    } else if (name == "uniform" && args.size() == 2) {
      spec.kind = Kind::Uniform;
      spec.a = args[0];
      spec.b = args[1];
      if (!(spec.a >= 1.0 && spec.b >= spec.a))
        throw ConfigError("length uniform(lo,hi): need 1 <= lo <= hi");
    } else if (name == "lognormal" && args.size() == 4) {
      spec.kind = Kind::LogNormal;
      spec.a = args[0];
      spec.b = args[1];
      spec.min_len = static_cast<std::int64_t>(args[2]);
      spec.max_len = static_cast<std::int64_t>(args[3]);
      if (spec.min_len < 1 || spec.max_len < spec.min_len)
        throw ConfigError("length lognormal(mu,sigma,min,max): need 1 <= min <= max");
    } else {
      throw ConfigError("length: expected fixed(n), uniform(lo,hi) or lognormal(mu,sigma,min,max)");
    }
    return spec;
  }

  std::int64_t sample(Rng& rng) const {
    switch (kind) {
      case Kind::Fixed:
        return static_cast<std::int64_t>(a);
      case Kind::Uniform:
        return static_cast<std::int64_t>(std::llround(rng.uniform(a, b)));
      case Kind::LogNormal: {
        const auto len = static_cast<std::int64_t>(std::llround(rng.lognormal(a, b)));
        return std::clamp(len, min_len, max_len);
      }
    }
    throw std::logic_error("length: unknown kind");
  }
};

// epsilon_uniform(eps): the sigmoid-normalized score equals
// clip(q_star + U[-eps,eps], 0, 1), so the induced posterior estimate is
// within eps of q_star by construction. logit_gauss(sigma): raw score is
// logit(q_star) + N(0, sigma^2).
struct ScoreModelSpec {
  enum class Kind { EpsilonUniform, LogitGauss };
  Kind kind = Kind::EpsilonUniform;
  double param = 0.05;

  static ScoreModelSpec parse(const std::string& text) {
    auto [name, args] = detail::parse_spec(text, "score_model");
    ScoreModelSpec spec;
    if (name == "epsilon_uniform" && args.size() == 1) {
      spec.kind = Kind::EpsilonUniform;
      spec.param = args[0];
      if (spec.param < 0.0) throw ConfigError("score_model epsilon_uniform(e): e must be >= 0");
    } else if (name == "logit_gauss" && args.size() == 1) {
      spec.kind = Kind::LogitGauss;
      spec.param = args[0];
      if (spec.param < 0.0) throw ConfigError("score_model logit_gauss(s): s must be >= 0");
    } else {
      throw ConfigError("score_model: expected epsilon_uniform(e) or logit_gauss(s)");
    }
    return spec;
  }

  double raw_score(double q_star, Rng& rng) const {
    switch (kind) {
      case Kind::EpsilonUniform: {
        const double q_hat = clamp01(q_star + rng.uniform(-param, param));
        return detail::logit(q_hat);
      }
      case Kind::LogitGauss:
        return detail::logit(q_star) + (param > 0.0 ? rng.normal(0.0, param) : 0.0);
    }
    throw std::logic_error("score_model: unknown kind");
  }
};

struct WorkloadConfig {
  int num_prompts = 16;
  int group_size = 16;
  DifficultySpec difficulty;
  bool per_rollout_difficulty = false;  // default: one q_star per prompt
  LengthSpec length;
  ScoreModelSpec score_model;

  void validate() const {
    if (num_prompts < 1) throw ConfigError("workload.num_prompts: must be >= 1");
    if (group_size < 2) throw ConfigError("workload.group_size: must be >= 2");
  }
};

// One prompt group; seeded per prompt_id so generation is order-independent
// across prompts.
inline RolloutGroup generate_group(const WorkloadConfig& config, std::int64_t prompt_id,
                                   std::uint64_t base_seed) {
  config.validate();
  Rng rng(derive_seed(base_seed, static_cast<std::uint64_t>(prompt_id)));
  RolloutGroup group;
  group.prompt_id = prompt_id;
  group.rollouts.reserve(static_cast<std::size_t>(config.group_size));
  const double shared_q = config.difficulty.sample(rng);
  for (int i = 0; i < config.group_size; ++i) {
    Rollout r;
    r.id = prompt_id * config.group_size + i;
    r.prompt_id = prompt_id;
    r.q_star = config.per_rollout_difficulty && i > 0 ? config.difficulty.sample(rng) : shared_q;
    r.label = draw_label(r.q_star, rng);
    r.total_length = std::max<std::int64_t>(1, config.length.sample(rng));
    r.raw_score = config.score_model.raw_score(r.q_star, rng);
    group.rollouts.push_back(r);
  }
  return group;
}

inline std::vector<RolloutGroup> generate_batch(const WorkloadConfig& config,
                                                std::int64_t first_prompt_id, int num_prompts,
                                                std::uint64_t base_seed) {
  std::vector<RolloutGroup> groups;
  groups.reserve(static_cast<std::size_t>(num_prompts));
  for (int k = 0; k < num_prompts; ++k)
    groups.push_back(generate_group(config, first_prompt_id + k, base_seed));
  return groups;
}

// --- TTS cohorts -----------------------------------------------------------

struct TtsCohortConfig {
  int num_questions = 1000;
  int candidates_per_question = 32;
  double quality_auc = 0.8;
  std::optional<double> confidence_auc;  // defaults to quality_auc
  DifficultySpec pass_rate = DifficultySpec::parse("uniform(0.05,0.95)");
  int wrong_answer_pool = 4;  // distinct wrong answer keys per question
  int trace_length = 192;     // synthetic confidence trace
  int trace_window = 64;
};

struct TtsCohort {
  std::vector<TtsQuestion> questions;
  double measured_quality_auc = 0.0;
  double measured_confidence_auc = 0.0;
};

// Rank-based (Mann-Whitney) AUC of score against the binary label.
inline double measure_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("measure_auc: size mismatch");
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum_pos += avg_rank;
        ++n_pos;
      } else {
        ++n_neg;
      }
    }
    i = j + 1;
  }
  if (n_pos == 0 || n_neg == 0)
    throw std::domain_error("measure_auc: need both classes present");
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// Per question: a pass rate drawn from pass_rate, candidate correctness
// Bernoulli(pass rate), quality scores from class-conditional Gaussians
// separated so AUC hits the target, and a confidence score produced by
// scoring a synthetic confidence trace (class-conditional level plus
// candidate-level N(0,1), which dominates) with trace_score(bottom10).
// The achieved AUCs are verified to +/-0.02 on cohorts with >= 10,000
// candidates per class pair.
inline TtsCohort generate_tts_cohort(const TtsCohortConfig& config, std::uint64_t seed) {
  if (config.num_questions < 1) throw ConfigError("tts.questions: must be >= 1");
  if (config.candidates_per_question < 1) throw ConfigError("tts.candidates: must be >= 1");
  const double auc_q = config.quality_auc;
  const double auc_c = config.confidence_auc.value_or(auc_q);
  for (double auc : {auc_q, auc_c})
    if (!(auc >= 0.5 && auc <= 1.0))
      throw ConfigError("tts AUC targets must lie in [0.5, 1.0]");
  if (config.wrong_answer_pool < 1) throw ConfigError("tts.wrong_answer_pool: must be >= 1");

  const auto separation = [](double auc) {
    return std::sqrt(2.0) * detail::probit(std::min(auc, 1.0 - 1e-12));
  };
  const double d_quality = separation(auc_q);
  const double d_confidence = separation(auc_c);

  TtsCohort cohort;
  cohort.questions.reserve(static_cast<std::size_t>(config.num_questions));
  std::vector<double> q_scores, c_scores;
  std::vector<int> labels;

  for (int qid = 0; qid < config.num_questions; ++qid) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(qid)));
    TtsQuestion question;
    question.question_id = qid;
    const double pass_rate = config.pass_rate.sample(rng);
    for (int k = 0; k < config.candidates_per_question; ++k) {
      TtsCandidate cand;
      const bool correct = rng.bernoulli(pass_rate);
      cand.correct = correct ? 1 : 0;
      cand.answer_key = correct ? std::string("C")
                                : "W" + std::to_string(rng.uniform_int(config.wrong_answer_pool));
      cand.quality_score = (correct ? d_quality : 0.0) + rng.normal();

      const double level = (correct ? d_confidence : 0.0) + rng.normal();
      ConfidenceTrace trace;
      trace.window_size = config.trace_window;
      trace.token_conf.resize(static_cast<std::size_t>(config.trace_length));
      for (double& h : trace.token_conf) h = 1.0 + level + 0.05 * rng.normal();
      cand.confidence_score = trace_score(trace, TraceScoreMode::Bottom10Mean);

      q_scores.push_back(cand.quality_score);
      c_scores.push_back(cand.confidence_score);
      labels.push_back(*cand.correct);
      question.candidates.push_back(std::move(cand));
    }
    cohort.questions.push_back(std::move(question));
  }

  std::size_t n_pos = 0;
  for (int y : labels) n_pos += static_cast<std::size_t>(y);
  if (n_pos > 0 && n_pos < labels.size()) {
    cohort.measured_quality_auc = measure_auc(q_scores, labels);
    cohort.measured_confidence_auc = measure_auc(c_scores, labels);
    if (labels.size() >= 10000) {
      if (std::abs(cohort.measured_quality_auc - auc_q) > 0.02)
        throw ConfigError("tts cohort: measured quality AUC misses target by more than 0.02");
      if (std::abs(cohort.measured_confidence_auc - auc_c) > 0.02)
        throw ConfigError("tts cohort: measured confidence AUC misses target by more than 0.02");
    }
  }
  return cohort;
}

}  // namespace arrol

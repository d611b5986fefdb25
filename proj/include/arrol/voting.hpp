#pragma once

// Test-time vote aggregation: plain majority, confidence-weighted, and the
// quality-head rank-weighted vote. Weights act as per-candidate multipliers
// on a count of 1; the argmax over answer keys is scale-invariant.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "arrol/common.hpp"
#include "arrol/rng.hpp"

namespace arrol {

struct Candidate {
  std::string answer_key;
  double score = 0.0;
  std::optional<int> correct;
};

struct VoteResult {
  std::string winner;
  std::map<std::string, double> weights;     // total weight per answer key
  std::vector<double> per_candidate_weight;  // in [0,1], as supplied
};

// Ascending ranks 0..n-1 rescaled to [0,1]; ties get the average of their
// tied ranks. A single candidate gets weight 1.
inline std::vector<double> rank_weights(std::span<const double> scores) {
  const std::size_t n = scores.size();
  if (n == 0) throw std::domain_error("rank_weights: no candidates");
  if (n == 1) return {1.0};

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::vector<double> weights(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j);  // mean of ranks i..j
    for (std::size_t k = i; k <= j; ++k)
      weights[order[k]] = avg_rank / static_cast<double>(n - 1);
    i = j + 1;
  }
  return weights;
}

// Sums weights per answer key; the winner is the key with the largest total.
// Ties break to the key holding the highest single-candidate weight, then
// lexicographically.
inline VoteResult weighted_vote(std::span<const Candidate> candidates,
                                std::span<const double> weights) {
  if (candidates.empty()) throw std::domain_error("weighted_vote: no candidates");
  if (candidates.size() != weights.size())
    throw std::invalid_argument("weighted_vote: weight count must match candidates");

  VoteResult result;
  std::map<std::string, double> best_single;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double w = weights[i];
    if (!(w >= 0.0 && w <= 1.0))
      throw std::invalid_argument("weighted_vote: weights must lie in [0,1]");
    result.weights[candidates[i].answer_key] += w;
    auto [it, inserted] = best_single.emplace(candidates[i].answer_key, w);
    if (!inserted) it->second = std::max(it->second, w);
  }
  result.per_candidate_weight.assign(weights.begin(), weights.end());

  const std::string* winner = nullptr;
  for (const auto& [key, total] : result.weights) {
    if (!winner) {
      winner = &key;
      continue;
    }
    const double cur = result.weights.at(*winner);
    if (total > cur ||
        (total == cur && best_single.at(key) > best_single.at(*winner))) {
      winner = &key;
    }
    // equal totals and equal best-single fall through to the earlier
    // (lexicographically smaller) key: std::map iterates keys in order.
  }
  result.winner = *winner;
  return result;
}

// --- synthetic evaluation cohorts ----------------------------------------

enum class VoteMethod { Majority, Confidence, RankQuality };

struct TtsCandidate {
  std::string answer_key;
  double quality_score = 0.0;
  double confidence_score = 0.0;
  std::optional<int> correct;
};

struct TtsQuestion {
  std::int64_t question_id = 0;
  std::vector<TtsCandidate> candidates;
};

struct VotingAccuracy {
  double accuracy = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

namespace detail {

inline std::vector<double> method_weights(const TtsQuestion& question, VoteMethod method) {
  const std::size_t n = question.candidates.size();
  std::vector<double> weights(n, 1.0);
  switch (method) {
    case VoteMethod::Majority:
      return weights;
    case VoteMethod::RankQuality: {
      std::vector<double> scores(n);
      for (std::size_t i = 0; i < n; ++i) scores[i] = question.candidates[i].quality_score;
      return rank_weights(scores);
    }
    case VoteMethod::Confidence: {
      // Confidence scores are arbitrary reals; min-max normalize per question
      // so they are valid [0,1] weights. All-equal falls back to majority.
      double lo = question.candidates[0].confidence_score;
      double hi = lo;
      for (const auto& c : question.candidates) {
        lo = std::min(lo, c.confidence_score);
        hi = std::max(hi, c.confidence_score);
      }
      if (hi > lo)
        for (std::size_t i = 0; i < n; ++i)
          weights[i] = (question.candidates[i].confidence_score - lo) / (hi - lo);
      return weights;
    }
  }
  throw std::logic_error("method_weights: unknown method");
}

}  // namespace detail

inline bool vote_is_correct(const TtsQuestion& question, VoteMethod method) {
  if (question.candidates.empty())
    throw std::domain_error("vote_is_correct: question has no candidates");
  std::vector<Candidate> candidates;
  candidates.reserve(question.candidates.size());
  for (const auto& c : question.candidates) {
    if (!c.correct) throw std::invalid_argument("vote_is_correct: candidate missing ground truth");
    candidates.push_back({c.answer_key, c.quality_score, c.correct});
  }
  const VoteResult result = weighted_vote(candidates, detail::method_weights(question, method));
  for (const auto& c : question.candidates)
    if (c.answer_key == result.winner) return *c.correct == 1;
  return false;
}

// Fraction of questions whose winning answer is correct, with a percentile
// bootstrap 95% CI over questions.
inline VotingAccuracy evaluate_voting(std::span<const TtsQuestion> questions, VoteMethod method,
                                      std::uint64_t bootstrap_seed,
                                      int bootstrap_resamples = 1000) {
  if (questions.empty()) throw std::domain_error("evaluate_voting: no questions");
  std::vector<std::uint8_t> correct(questions.size());
  double hits = 0.0;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    correct[i] = vote_is_correct(questions[i], method) ? 1 : 0;
    hits += correct[i];
  }
  VotingAccuracy out;
  out.accuracy = hits / static_cast<double>(questions.size());

  Rng rng(bootstrap_seed);
  std::vector<double> means(static_cast<std::size_t>(bootstrap_resamples));
  for (auto& m : means) {
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < questions.size(); ++i)
      sum += correct[static_cast<std::size_t>(
          rng.uniform_int(static_cast<std::int64_t>(questions.size())))];
    m = static_cast<double>(sum) / static_cast<double>(questions.size());
  }
  std::sort(means.begin(), means.end());
  const auto quantile = [&](double q) {
    const auto idx = static_cast<std::size_t>(
        std::llround(q * static_cast<double>(means.size() - 1)));
    return means[idx];
  };
  out.ci_low = quantile(0.025);
  out.ci_high = quantile(0.975);
  return out;
}

// --- JSONL ----------------------------------------------------------------
// Record shape: {question_id, answer_key, score, correct} with an optional
// confidence_score extension (defaults to score when absent).

inline void write_tts_jsonl(std::ostream& out, std::span<const TtsQuestion> questions) {
  for (const auto& q : questions) {
    for (const auto& c : q.candidates) {
      nlohmann::json j{
          {"question_id", q.question_id},
          {"answer_key", c.answer_key},
          {"score", c.quality_score},
          {"correct", c.correct ? nlohmann::json(*c.correct) : nlohmann::json(nullptr)},
          {"confidence_score", c.confidence_score},
      };
      out << j.dump() << '\n';
    }
  }
}

inline std::vector<TtsQuestion> read_tts_jsonl(std::istream& in) {
  std::map<std::int64_t, TtsQuestion> by_id;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    TtsCandidate c;
    c.answer_key = j.at("answer_key").get<std::string>();
    c.quality_score = j.at("score").get<double>();
    c.confidence_score = j.contains("confidence_score")
                             ? j.at("confidence_score").get<double>()
                             : c.quality_score;
    if (j.contains("correct") && !j.at("correct").is_null())
      c.correct = j.at("correct").get<int>();
    const auto id = j.at("question_id").get<std::int64_t>();
    auto& q = by_id[id];
    q.question_id = id;
    q.candidates.push_back(std::move(c));
  }
  std::vector<TtsQuestion> questions;
  questions.reserve(by_id.size());
  for (auto& [id, q] : by_id) questions.push_back(std::move(q));
  return questions;
}

}  // namespace arrol

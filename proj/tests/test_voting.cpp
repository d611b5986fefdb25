#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "arrol/voting.hpp"

using namespace arrol;

namespace {

std::vector<Candidate> candidates_from(const std::vector<std::string>& keys) {
  std::vector<Candidate> out;
  for (const auto& k : keys) out.push_back({k, 0.0, std::nullopt});
  return out;
}

// Independent majority: count per key, argmax with the documented tie rule
// (equal totals -> lexicographically smaller key, since all weights are 1).
std::string plain_majority(const std::vector<std::string>& keys) {
  std::map<std::string, int> counts;
  for (const auto& k : keys) ++counts[k];
  std::string best;
  int best_count = -1;
  for (const auto& [key, count] : counts)
    if (count > best_count) {
      best = key;
      best_count = count;
    }
  return best;
}

}  // namespace

TEST_CASE("rank_weights definition") {
  REQUIRE(rank_weights(std::vector<double>{0.2, 0.5, 0.9}) ==
          std::vector<double>{0.0, 0.5, 1.0});
  REQUIRE(rank_weights(std::vector<double>{0.7, 0.7}) == std::vector<double>{0.5, 0.5});
  REQUIRE(rank_weights(std::vector<double>{42.0}) == std::vector<double>{1.0});
}

TEST_CASE("rank_weights only depend on the ranks") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> scores(8);
    for (double& s : scores) s = rng.uniform(-5.0, 5.0);
    std::vector<double> transformed(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
      transformed[i] = std::exp(0.7 * scores[i]) + 3.0;  // strictly increasing
    REQUIRE(rank_weights(scores) == rank_weights(transformed));
  }
}

TEST_CASE("weighted_vote basics") {
  const auto abb = candidates_from({"A", "A", "B"});
  const VoteResult heavy = weighted_vote(abb, std::vector<double>{0.1, 0.1, 0.9});
  REQUIRE(heavy.winner == "B");
  REQUIRE(heavy.weights.at("A") == Catch::Approx(0.2));
  REQUIRE(heavy.weights.at("B") == Catch::Approx(0.9));

  const VoteResult tie = weighted_vote(candidates_from({"B", "A"}),
                                       std::vector<double>{0.5, 0.5});
  REQUIRE(tie.winner == "A");  // equal totals, equal best-single -> lexicographic

  REQUIRE_THROWS_AS(weighted_vote(std::vector<Candidate>{}, std::vector<double>{}),
                    std::domain_error);
  REQUIRE_THROWS_AS(weighted_vote(abb, std::vector<double>{1.0, 1.0}), std::invalid_argument);
  REQUIRE_THROWS_AS(weighted_vote(abb, std::vector<double>{1.0, 1.0, 1.5}),
                    std::invalid_argument);
}

TEST_CASE("uniform weights reduce to plain majority") {
  Rng rng(5);
  const std::vector<std::string> pool{"A", "B", "C", "D"};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> keys;
    const int n = 1 + static_cast<int>(rng.uniform_int(12));
    for (int i = 0; i < n; ++i)
      keys.push_back(pool[static_cast<std::size_t>(rng.uniform_int(4))]);
    const VoteResult vote =
        weighted_vote(candidates_from(keys), std::vector<double>(keys.size(), 1.0));
    REQUIRE(vote.winner == plain_majority(keys));
  }
}

TEST_CASE("zero-weight candidates never change the winner") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> keys;
    std::vector<double> weights;
    const int n = 2 + static_cast<int>(rng.uniform_int(10));
    for (int i = 0; i < n; ++i) {
      keys.push_back(std::string(1, static_cast<char>('A' + rng.uniform_int(3))));
      weights.push_back(rng.uniform01());
    }
    const std::string before = weighted_vote(candidates_from(keys), weights).winner;
    keys.push_back("Z");
    weights.push_back(0.0);
    REQUIRE(weighted_vote(candidates_from(keys), weights).winner == before);
  }
}

TEST_CASE("evaluate_voting on an all-correct cohort") {
  std::vector<TtsQuestion> questions(20);
  for (std::size_t i = 0; i < questions.size(); ++i) {
    questions[i].question_id = static_cast<std::int64_t>(i);
    for (int k = 0; k < 8; ++k)
      questions[i].candidates.push_back({"C", 1.0, 1.0, 1});
  }
  for (auto method : {VoteMethod::Majority, VoteMethod::Confidence, VoteMethod::RankQuality}) {
    const VotingAccuracy acc = evaluate_voting(questions, method, 77);
    REQUIRE(acc.accuracy == 1.0);
    REQUIRE(acc.ci_low <= acc.accuracy);
    REQUIRE(acc.accuracy <= acc.ci_high);
  }
}

TEST_CASE("evaluate_voting requires ground truth") {
  std::vector<TtsQuestion> questions(1);
  questions[0].candidates.push_back({"C", 1.0, 1.0, std::nullopt});
  REQUIRE_THROWS_AS(evaluate_voting(questions, VoteMethod::Majority, 1), std::invalid_argument);
}

TEST_CASE("tts jsonl round-trip with and without the confidence extension") {
  std::vector<TtsQuestion> questions(2);
  questions[0].question_id = 0;
  questions[0].candidates.push_back({"C", 1.25, 0.5, 1});
  questions[0].candidates.push_back({"W0", -0.5, 0.25, 0});
  questions[1].question_id = 1;
  questions[1].candidates.push_back({"W1", 0.0, 0.0, 0});

  std::stringstream io;
  write_tts_jsonl(io, questions);
  const auto back = read_tts_jsonl(io);
  REQUIRE(back.size() == 2);
  REQUIRE(back[0].candidates.size() == 2);
  REQUIRE(back[0].candidates[0].quality_score == 1.25);
  REQUIRE(back[0].candidates[0].confidence_score == 0.5);
  REQUIRE(back[0].candidates[1].correct == 0);

  // spec-shape record without confidence_score: falls back to score
  std::stringstream bare;
  bare << R"({"question_id":5,"answer_key":"C","score":2.0,"correct":1})" << "\n";
  const auto parsed = read_tts_jsonl(bare);
  REQUIRE(parsed.size() == 1);
  REQUIRE(parsed[0].candidates[0].confidence_score == 2.0);
}

TEST_CASE("vote tie-break prefers the key with the highest single weight") {
  const auto abb = candidates_from({"A", "B", "B"});
  // totals tie at 0.6; A holds the largest single-candidate weight
  const VoteResult r = weighted_vote(abb, std::vector<double>{0.6, 0.3, 0.3});
  REQUIRE(r.winner == "A");
  // outright larger total still wins regardless of single weights
  const VoteResult s = weighted_vote(abb, std::vector<double>{0.3, 0.35, 0.05});
  REQUIRE(s.winner == "B");
}

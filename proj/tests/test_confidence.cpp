#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "arrol/confidence.hpp"
#include "arrol/rng.hpp"

using namespace arrol;

TEST_CASE("token_confidence sums -log p over the whole vocabulary") {
  REQUIRE(token_confidence(TokenDistribution({0.25, 0.25, 0.25, 0.25})) ==
          Catch::Approx(4.0 * std::log(4.0)).margin(1e-12));
  REQUIRE(token_confidence(TokenDistribution({1.0})) == 0.0);
  REQUIRE(token_confidence(TokenDistribution({0.5, 0.5})) ==
          Catch::Approx(2.0 * std::log(2.0)).margin(1e-12));
}

TEST_CASE("token distribution validation and flooring") {
  REQUIRE_THROWS_AS(TokenDistribution({0.5, -0.5, 1.0}), std::domain_error);
  REQUIRE_THROWS_AS(TokenDistribution({0.5, 0.4}), std::domain_error);
  REQUIRE_THROWS_AS(TokenDistribution({}), std::domain_error);
  // an exact zero is floored, the log stays finite
  const TokenDistribution d({1.0, 0.0});
  REQUIRE(token_confidence(d) == Catch::Approx(-std::log(1e-12)).margin(1e-9));
}

TEST_CASE("window_confidence sliding means") {
  const std::vector<double> constant{3.0, 3.0, 3.0, 3.0};
  for (double w : window_confidence(constant, 2)) REQUIRE(w == 3.0);

  const std::vector<double> ramp{1.0, 2.0, 3.0};
  const auto windows = window_confidence(ramp, 2);
  REQUIRE(windows == std::vector<double>{1.5, 2.5});

  const auto whole = window_confidence(ramp, 3);
  REQUIRE(whole.size() == 1);
  REQUIRE(whole[0] == 2.0);

  REQUIRE_THROWS_AS(window_confidence(ramp, 4), std::domain_error);
}

TEST_CASE("window count property") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_int(200));
    const int w = 1 + static_cast<int>(rng.uniform_int(n));
    std::vector<double> trace(static_cast<std::size_t>(n));
    for (double& h : trace) h = rng.uniform(0.0, 10.0);
    REQUIRE(window_confidence(trace, w).size() == static_cast<std::size_t>(n - w + 1));
  }
}

TEST_CASE("trace_score aggregation modes") {
  ConfidenceTrace trace{{5.0, 1.0, 3.0}, 1};  // windows are the tokens
  REQUIRE(trace_score(trace, TraceScoreMode::MinWindow) == 1.0);
  REQUIRE(trace_score(trace, TraceScoreMode::Bottom10Mean) == 1.0);  // ceil(0.3) = 1 window
  REQUIRE(trace_score(trace, TraceScoreMode::Mean) == 3.0);

  ConfidenceTrace constant{std::vector<double>(40, 2.5), 8};
  for (auto mode :
       {TraceScoreMode::MinWindow, TraceScoreMode::Bottom10Mean, TraceScoreMode::Mean})
    REQUIRE(trace_score(constant, mode) == 2.5);

  ConfidenceTrace empty{{}, 4};
  REQUIRE_THROWS_AS(trace_score(empty, TraceScoreMode::Mean), std::domain_error);
}

TEST_CASE("short traces only support the mean mode") {
  ConfidenceTrace trace{{2.0, 4.0}, 8};
  REQUIRE(trace_score(trace, TraceScoreMode::Mean) == 3.0);
  REQUIRE_THROWS_AS(trace_score(trace, TraceScoreMode::MinWindow), std::domain_error);
  REQUIRE_THROWS_AS(trace_score(trace, TraceScoreMode::Bottom10Mean), std::domain_error);
}

TEST_CASE("order statistics: min <= bottom10 <= mean on every trace") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(300));
    ConfidenceTrace trace;
    trace.window_size = 1 + static_cast<int>(rng.uniform_int(n));
    trace.token_conf.resize(static_cast<std::size_t>(n));
    for (double& h : trace.token_conf) h = rng.uniform(0.0, 20.0);
    const double lo = trace_score(trace, TraceScoreMode::MinWindow);
    const double mid = trace_score(trace, TraceScoreMode::Bottom10Mean);
    const double hi = trace_score(trace, TraceScoreMode::Mean);
    REQUIRE(lo <= mid + 1e-12);
    REQUIRE(mid <= hi + 1e-12);
  }
}

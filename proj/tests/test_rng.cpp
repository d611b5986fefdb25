#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "arrol/rng.hpp"

using arrol::derive_seed;
using arrol::Rng;

TEST_CASE("same seed replays the same stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.uniform01() == b.uniform01());
}

TEST_CASE("uniform01 stays in [0,1)") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("derived streams differ from each other and the base") {
  REQUIRE(derive_seed(1, 0) != derive_seed(1, 1));
  REQUIRE(derive_seed(1, 0) != derive_seed(2, 0));
  Rng a(derive_seed(9, 0)), b(derive_seed(9, 1));
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a.next_u64() == b.next_u64();
  REQUIRE(same == 0);
}

TEST_CASE("normal moments") {
  Rng rng(11);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  REQUIRE(std::abs(mean) < 0.01);
  REQUIRE(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("beta(2,8) mean") {
  Rng rng(13);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.beta(2.0, 8.0);
    REQUIRE(x >= 0.0);
    REQUIRE(x <= 1.0);
    sum += x;
  }
  REQUIRE(std::abs(sum / n - 0.2) < 0.005);
}

TEST_CASE("uniform_int covers its range") {
  Rng rng(17);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) ++counts[static_cast<std::size_t>(rng.uniform_int(5))];
  for (int c : counts) REQUIRE(c > 8000);
  REQUIRE_THROWS_AS(rng.uniform_int(0), std::invalid_argument);
}

#pragma once

// Seeded RNG with hand-rolled distributions. std::*_distribution output is
// implementation-defined, so every draw here is spelled out explicitly; a
// (seed, stream) pair maps to one bit-exact sequence on any platform.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace arrol {

// splitmix64 finalizer, used for seed mixing and stream derivation.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic substream seed: independent streams for (base, stream_id).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream_id) {
  return mix64(base ^ mix64(stream_id ^ 0xd1b54a32d192ed03ULL));
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform integer in [0, n).
  std::int64_t uniform_int(std::int64_t n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    auto k = static_cast<std::int64_t>(uniform01() * static_cast<double>(n));
    return k >= n ? n - 1 : k;
  }

  // Box-Muller; one value per call, no cached spare (keeps state replayable).
  double normal(double mean = 0.0, double sd = 1.0) {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return mean + sd * r * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Marsaglia-Tsang for shape >= 1; boost by U^(1/shape) below 1.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
    if (shape < 1.0) {
      const double u = uniform01();
      return gamma(shape + 1.0) * std::pow(u <= 0.0 ? 0x1.0p-53 : u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    const double s = x + y;
    return s > 0.0 ? x / s : 0.5;
  }

  double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

private:
  std::mt19937_64 engine_;
};

}  // namespace arrol

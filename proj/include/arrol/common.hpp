#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>

namespace arrol {

inline constexpr const char* kVersion = "0.1.0";

// Configuration problems carry field-level diagnostics in the message
// ("policy.kappa: must lie in (0,1]").
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Raised when a group operation needs more survivors than it has.
class DegenerateGroupError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Raised when the requested keep rate cannot be met under the clip bounds.
// Carries the nearest achievable rate so callers can report it.
class UnreachableTargetError : public std::runtime_error {
public:
  UnreachableTargetError(const std::string& what, double nearest)
      : std::runtime_error(what), nearest_keep_rate(nearest) {}
  double nearest_keep_rate;
};

inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace arrol

#pragma once

// Trace-confidence baselines: per-token confidence H_t = -sum_j log P_t(j)
// over the full vocabulary, sliding-window means, and trace-level
// aggregation (minimum window, bottom-10% mean, mean).

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace arrol {

// Synthetic next-token distribution. Probabilities are floored at 1e-12
// before use so exact zeros survive the log.
struct TokenDistribution {
  std::vector<double> probs;

  explicit TokenDistribution(std::vector<double> p) : probs(std::move(p)) {
    if (probs.empty()) throw std::domain_error("token distribution: empty");
    double sum = 0.0;
    for (double& v : probs) {
      if (v < 0.0) throw std::domain_error("token distribution: negative probability");
      sum += v;
      v = std::max(v, 1e-12);
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::domain_error("token distribution: probabilities must sum to 1");
  }
};

inline double token_confidence(const TokenDistribution& dist) {
  double h = 0.0;
  for (double p : dist.probs) {
    if (p <= 0.0) throw std::domain_error("token_confidence: zero probability after floor");
    h -= std::log(p);
  }
  return h;
}

struct ConfidenceTrace {
  std::vector<double> token_conf;
  int window_size = 128;
};

// Stride-1 sliding means of the per-token confidences.
inline std::vector<double> window_confidence(std::span<const double> token_conf,
                                             int window_size) {
  if (window_size < 1) throw std::invalid_argument("window_confidence: window must be >= 1");
  const std::size_t n = token_conf.size();
  const auto w = static_cast<std::size_t>(window_size);
  if (n < w) throw std::domain_error("window_confidence: trace shorter than window");
  std::vector<double> out;
  out.reserve(n - w + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < w; ++i) sum += token_conf[i];
  out.push_back(sum / static_cast<double>(w));
  for (std::size_t i = w; i < n; ++i) {
    sum += token_conf[i] - token_conf[i - w];
    out.push_back(sum / static_cast<double>(w));
  }
  return out;
}

enum class TraceScoreMode { MinWindow, Bottom10Mean, Mean };

// Aggregates window values: the minimum, the mean of the lowest
// ceil(0.1 * count) windows, or the mean of all windows. Mean mode accepts
// traces shorter than the window by treating the whole trace as one window
// (which makes it the plain token mean there).
inline double trace_score(const ConfidenceTrace& trace, TraceScoreMode mode) {
  if (trace.token_conf.empty()) throw std::domain_error("trace_score: empty trace");
  const std::size_t n = trace.token_conf.size();
  const auto w = static_cast<std::size_t>(std::max(trace.window_size, 1));

  if (mode == TraceScoreMode::Mean && n < w) {
    double sum = 0.0;
    for (double h : trace.token_conf) sum += h;
    return sum / static_cast<double>(n);
  }

  std::vector<double> windows = window_confidence(trace.token_conf, trace.window_size);
  switch (mode) {
    case TraceScoreMode::MinWindow:
      return *std::min_element(windows.begin(), windows.end());
    case TraceScoreMode::Bottom10Mean: {
      const std::size_t count = std::max<std::size_t>(
          1, static_cast<std::size_t>(
                 std::ceil(0.1 * static_cast<double>(windows.size()))));
      std::nth_element(windows.begin(), windows.begin() + static_cast<std::ptrdiff_t>(count - 1),
                       windows.end());
      double sum = 0.0;
      for (std::size_t i = 0; i < count; ++i) sum += windows[i];
      return sum / static_cast<double>(count);
    }
    case TraceScoreMode::Mean: {
      double sum = 0.0;
      for (double v : windows) sum += v;
      return sum / static_cast<double>(windows.size());
    }
  }
  throw std::logic_error("trace_score: unknown mode");
}

}  // namespace arrol

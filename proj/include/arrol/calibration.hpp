#pragma once

// Online binned probability estimator: sigmoid-normalize a raw quality score,
// bucket it into one of B uniform bins, and maintain per-class sliding buffers
// of recent labeled scores. The posterior success estimate for a score is
// Bayes' rule over Laplace-smoothed class-conditional bin likelihoods:
//
//   q(s) = pi * P(b|Y=1) / (pi * P(b|Y=1) + (1-pi) * P(b|Y=0))
//   P(b|Y=c) = (count_c[b] + alpha) / (total_c + alpha * B)
//
// Single writer: observe() mutates, posterior() is a pure read.

#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "arrol/common.hpp"

namespace arrol {

inline double normalize_score(double raw_score) {
  if (!std::isfinite(raw_score))
    throw std::domain_error("normalize_score: raw score must be finite");
  return 1.0 / (1.0 + std::exp(-raw_score));
}

inline int bin_index(double s_norm, int num_bins) {
  if (num_bins < 2) throw std::invalid_argument("bin_index: need at least 2 bins");
  if (!(s_norm >= 0.0 && s_norm <= 1.0))
    throw std::domain_error("bin_index: normalized score must lie in [0,1]");
  const int b = static_cast<int>(std::floor(static_cast<double>(num_bins) * s_norm));
  return b >= num_bins ? num_bins - 1 : b;
}

class BinnedCalibrator {
public:
  explicit BinnedCalibrator(int num_bins = 128, double alpha = 1.0,
                            std::size_t buffer_capacity = 4096)
      : num_bins_(num_bins), alpha_(alpha), capacity_(buffer_capacity),
        pos_counts_(static_cast<std::size_t>(num_bins), 0),
        neg_counts_(static_cast<std::size_t>(num_bins), 0) {
    if (num_bins < 2) throw std::invalid_argument("calibrator: need at least 2 bins");
    if (alpha < 0.0) throw std::invalid_argument("calibrator: alpha must be >= 0");
    if (buffer_capacity == 0) throw std::invalid_argument("calibrator: capacity must be >= 1");
  }

  // Appends the normalized score to the class buffer; the oldest entry is
  // evicted (and its bin count decremented) once the buffer is full.
  void observe(double raw_score, int label) {
    if (label != 0 && label != 1)
      throw std::invalid_argument("observe: label must be 0 or 1");
    auto& buffer = label == 1 ? pos_buffer_ : neg_buffer_;
    auto& counts = label == 1 ? pos_counts_ : neg_counts_;
    const double s = normalize_score(raw_score);
    if (buffer.size() == capacity_) {
      --counts[static_cast<std::size_t>(bin_index(buffer.front(), num_bins_))];
      buffer.pop_front();
    }
    buffer.push_back(s);
    ++counts[static_cast<std::size_t>(bin_index(s, num_bins_))];
  }

  double posterior(double raw_score) const {
    return posterior_for_bin(bin_index(normalize_score(raw_score), num_bins_));
  }

  double posterior_for_bin(int b) const {
    if (b < 0 || b >= num_bins_) throw std::domain_error("posterior: bin out of range");
    if (alpha_ == 0.0 && (pos_buffer_.empty() || neg_buffer_.empty()))
      throw std::domain_error("posterior: alpha=0 with an empty class histogram");
    const double bf = static_cast<double>(num_bins_);
    const double l1 = (static_cast<double>(pos_counts_[static_cast<std::size_t>(b)]) + alpha_) /
                      (static_cast<double>(pos_buffer_.size()) + alpha_ * bf);
    const double l0 = (static_cast<double>(neg_counts_[static_cast<std::size_t>(b)]) + alpha_) /
                      (static_cast<double>(neg_buffer_.size()) + alpha_ * bf);
    const double pi = prior_pi();
    const double denom = pi * l1 + (1.0 - pi) * l0;
    if (denom <= 0.0)
      throw std::domain_error("posterior: undefined likelihood (empty bin with alpha=0)");
    return pi * l1 / denom;
  }

  // Laplace-smoothed class prior, same alpha as the likelihoods.
  double prior_pi() const {
    return (static_cast<double>(pos_buffer_.size()) + alpha_) /
           (static_cast<double>(pos_buffer_.size() + neg_buffer_.size()) + 2.0 * alpha_);
  }

  int num_bins() const { return num_bins_; }
  double alpha() const { return alpha_; }
  std::size_t buffer_capacity() const { return capacity_; }
  std::size_t pos_size() const { return pos_buffer_.size(); }
  std::size_t neg_size() const { return neg_buffer_.size(); }
  std::int64_t pos_count(int b) const { return pos_counts_.at(static_cast<std::size_t>(b)); }
  std::int64_t neg_count(int b) const { return neg_counts_.at(static_cast<std::size_t>(b)); }
  std::int64_t occupancy(int b) const { return pos_count(b) + neg_count(b); }
  bool empty() const { return pos_buffer_.empty() && neg_buffer_.empty(); }

  // Occupancy-weighted mean posterior over occupied bins; drives the steer
  // direction of the survival policy.
  double mean_posterior() const {
    double wsum = 0.0, qsum = 0.0;
    for (int b = 0; b < num_bins_; ++b) {
      const double w = static_cast<double>(occupancy(b));
      if (w == 0.0) continue;
      qsum += w * posterior_for_bin(b);
      wsum += w;
    }
    return wsum > 0.0 ? qsum / wsum : prior_pi();
  }

  // --- snapshot / restore ------------------------------------------------

  nlohmann::json snapshot() const {
    return nlohmann::json{
        {"num_bins", num_bins_},
        {"alpha", alpha_},
        {"buffer_capacity", capacity_},
        {"pos_buffer", std::vector<double>(pos_buffer_.begin(), pos_buffer_.end())},
        {"neg_buffer", std::vector<double>(neg_buffer_.begin(), neg_buffer_.end())},
        {"pos_counts", pos_counts_},
        {"neg_counts", neg_counts_},
    };
  }

  static BinnedCalibrator restore(const nlohmann::json& j) {
    BinnedCalibrator c(j.at("num_bins").get<int>(), j.at("alpha").get<double>(),
                       j.at("buffer_capacity").get<std::size_t>());
    for (double s : j.at("pos_buffer").get<std::vector<double>>()) {
      c.pos_buffer_.push_back(s);
      ++c.pos_counts_[static_cast<std::size_t>(bin_index(s, c.num_bins_))];
    }
    for (double s : j.at("neg_buffer").get<std::vector<double>>()) {
      c.neg_buffer_.push_back(s);
      ++c.neg_counts_[static_cast<std::size_t>(bin_index(s, c.num_bins_))];
    }
    if (c.pos_counts_ != j.at("pos_counts").get<std::vector<std::int64_t>>() ||
        c.neg_counts_ != j.at("neg_counts").get<std::vector<std::int64_t>>())
      throw ConfigError("calibrator snapshot: histogram inconsistent with buffers");
    if (c.pos_buffer_.size() > c.capacity_ || c.neg_buffer_.size() > c.capacity_)
      throw ConfigError("calibrator snapshot: buffer exceeds capacity");
    return c;
  }

private:
  int num_bins_;
  double alpha_;
  std::size_t capacity_;
  std::deque<double> pos_buffer_, neg_buffer_;  // normalized scores, FIFO
  std::vector<std::int64_t> pos_counts_, neg_counts_;
};

}  // namespace arrol

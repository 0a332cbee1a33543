#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "qls/error.hpp"

namespace qls {

enum class SamplingMode { static_batch, dynamic, full };

inline std::string_view to_string(SamplingMode mode) {
  switch (mode) {
    case SamplingMode::static_batch: return "static";
    case SamplingMode::dynamic: return "dynamic";
    case SamplingMode::full: return "full";
  }
  return "?";
}

inline SamplingMode parse_sampling_mode(std::string_view s) {
  if (s == "static") return SamplingMode::static_batch;
  if (s == "dynamic") return SamplingMode::dynamic;
  if (s == "full") return SamplingMode::full;
  throw ConfigError("unknown sampling mode '" + std::string(s) + "'");
}

/// Draws mini-batches as positions 0..pool_size-1 into the training split.
///
/// Within a batch positions are distinct; successive draws are independent.
/// Static mode holds one batch until refresh_static(); full mode always
/// returns every position in order.
class MiniBatchSampler {
 public:
  MiniBatchSampler(SamplingMode mode, std::size_t batch_size, std::size_t pool_size, std::uint64_t seed)
      : mode_(mode), m_(mode == SamplingMode::full ? pool_size : batch_size), rng_(seed), pool_(pool_size) {
    if (pool_size == 0) throw BadBatchSize("sampler: empty training pool");
    if (m_ == 0 || m_ > pool_size) {
      throw BadBatchSize("sampler: batch size " + std::to_string(m_) + " not in [1, " +
                         std::to_string(pool_size) + "]");
    }
    std::iota(pool_.begin(), pool_.end(), std::size_t{0});
    if (mode_ == SamplingMode::full) {
      current_ = pool_;
    } else if (mode_ == SamplingMode::static_batch) {
      draw();
    }
  }

  SamplingMode mode() const { return mode_; }
  std::size_t batch_size() const { return m_; }
  std::size_t pool_size() const { return pool_.size(); }

  const std::vector<std::size_t>& next_batch() {
    if (mode_ == SamplingMode::dynamic) draw();
    return current_;
  }

  void refresh_static() {
    if (mode_ != SamplingMode::static_batch) {
      throw WrongMode(std::string("refresh_static called in ") + std::string(to_string(mode_)) + " mode");
    }
    draw();
  }

  /// The batch a static or full sampler currently holds.
  const std::vector<std::size_t>& current() const { return current_; }

 private:
  // Partial Fisher-Yates over a persistent permutation: the first m_ slots
  // after the swaps are a uniform m-subset regardless of the prior order.
  void draw() {
    const std::size_t n = pool_.size();
    for (std::size_t i = 0; i < m_; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(pool_[i], pool_[pick(rng_)]);
    }
    current_.assign(pool_.begin(), pool_.begin() + static_cast<std::ptrdiff_t>(m_));
  }

  SamplingMode mode_;
  std::size_t m_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> pool_;
  std::vector<std::size_t> current_;
};

}  // namespace qls

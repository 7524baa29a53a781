#pragma once

#include <cstdint>
#include <span>

namespace fluentrx {

// Counter-based pseudo-random stream (SplitMix64 mix over an incrementing
// counter). Every draw is a pure function of (seed, draw index), so streams
// derived for different trial indices never share state and a batch of
// trials produces the same numbers no matter how it is scheduled.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  // Decorrelated stream for substream `index` under `master_seed`.
  static RandomStream derive(std::uint64_t master_seed, std::uint64_t index);

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01();

  // Uniform on [lo, hi). Throws std::invalid_argument when lo > hi.
  double uniform(double lo, double hi);

  // Box-Muller. Always consumes exactly two raw draws, even when stddev is
  // zero, so the stream position stays a function of call count alone.
  double normal(double mean, double stddev);

  // Index sampled according to `probs` (entries must be non-negative;
  // rounding slack falls into the last bucket). Consumes one raw draw.
  std::size_t categorical(std::span<const double> probs);

 private:
  std::uint64_t state_;
};

}  // namespace fluentrx

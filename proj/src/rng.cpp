#include "fluentrx/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fluentrx {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

}  // namespace

RandomStream RandomStream::derive(std::uint64_t master_seed, std::uint64_t index) {
  // Double mix keeps substreams apart even for adjacent indices.
  const std::uint64_t salted = index * 0xD2B74407B1CE6E93ull + 0x8CB92BA72F3D8DD7ull;
  return RandomStream(mix64(mix64(master_seed + kGamma) ^ salted));
}

std::uint64_t RandomStream::next_u64() {
  state_ += kGamma;
  return mix64(state_);
}

double RandomStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform(double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("uniform: lo > hi");
  return lo + (hi - lo) * uniform01();
}

double RandomStream::normal(double mean, double stddev) {
  if (!(stddev >= 0.0)) throw std::invalid_argument("normal: stddev must be >= 0");
  // u1 lies in (0, 1] so the log stays finite; u2 in [0, 1).
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * (radius * std::cos(2.0 * std::numbers::pi * u2));
}

std::size_t RandomStream::categorical(std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("categorical: empty distribution");
  const double u = uniform01();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] < 0.0) throw std::invalid_argument("categorical: negative probability");
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;  // rounding slack lands in the last bucket
}

}  // namespace fluentrx

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace msd {

/// Purpose of a random stream within one Monte Carlo trial.
enum class StreamTag : std::uint64_t {
  kDelay = 1,
  kNoise = 2,
  kInitialState = 3,
  kTest = 0xfeed,
};

/// Counter-based generator: every draw is a pure function of
/// (seed, trial, tag, counter), so streams can be evaluated in any order
/// and on any thread with identical results.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t trial, StreamTag tag) noexcept
      : key_(mix(mix(mix(seed) ^ trial) ^ static_cast<std::uint64_t>(tag))) {}

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t bits_at(std::uint64_t index) const noexcept { return mix(key_ ^ mix(index)); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform_at(std::uint64_t index) const noexcept {
    return static_cast<double>(bits_at(index) >> 11) * 0x1.0p-53;
  }

  /// Standard normal by Box-Muller from draws 2*index and 2*index + 1.
  double normal_at(std::uint64_t index) const noexcept {
    const double u1 = 1.0 - uniform_at(2 * index);  // (0, 1]
    const double u2 = uniform_at(2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Sequential interface: the n-th call returns uniform_at(n).
  double next_uniform() noexcept { return uniform_at(counter_++); }
  double next_normal() noexcept { return normal_at(counter_++); }

  std::uint64_t counter() const noexcept { return counter_; }
  void seek(std::uint64_t counter) noexcept { counter_ = counter; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace msd

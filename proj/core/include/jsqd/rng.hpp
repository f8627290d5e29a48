#pragma once

#include <cstdint>
#include <random>

namespace jsqd {

__extension__ using uint128_t = unsigned __int128;

/// One SplitMix64 output for state x.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed of replication stream `index` under master seed `seed`:
///   splitmix64(seed ^ splitmix64(index + 0x9e3779b97f4a7c15)).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// mt19937_64 plus platform-independent variate transforms (the standard
/// distribution classes are implementation-defined and would break replay).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t index) : engine_(stream_seed(seed, index)) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Exponential with the given rate.
  double exponential(double rate);
  /// Uniform integer on [0, n); n > 0. Multiply-shift, bias below n / 2^64.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<uint128_t>(engine_()) * n) >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace jsqd

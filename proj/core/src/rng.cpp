#include "jsqd/rng.hpp"

#include <cmath>

namespace jsqd {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(seed ^ splitmix64(index + 0x9e3779b97f4a7c15ULL));
}

double Rng::exponential(double rate) {
  // 1 - uniform() lies in (0, 1].
  return -std::log(1.0 - uniform()) / rate;
}

}  // namespace jsqd

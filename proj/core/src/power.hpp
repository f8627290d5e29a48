#pragma once

namespace jsqd::detail {

// x^k for small non-negative integer k; ipow(0, 0) == 1.
inline double ipow(double x, int k) noexcept {
  double r = 1.0;
  while (k > 0) {
    if (k & 1) r *= x;
    x *= x;
    k >>= 1;
  }
  return r;
}

}  // namespace jsqd::detail

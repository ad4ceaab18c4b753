#pragma once

#include <cstdint>
#include <string_view>

namespace city3dqa {

// 64-bit FNV-1a. Used for qids and for deriving named sub-seeds; the exact
// constants are part of the dataset contract (qids must be stable across runs
// and platforms).
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// SplitMix64: tiny, fast, and identical on every platform, unlike the
// standard distributions. All randomness in the toolkit flows through this.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n). n must be > 0. Lemire's multiply-shift with rejection.
  std::uint64_t bounded(std::uint64_t n) {
    while (true) {
      std::uint64_t x = next();
      __uint128_t m = static_cast<__uint128_t>(x) * n;
      auto lo = static_cast<std::uint64_t>(m);
      if (lo >= n || lo >= static_cast<std::uint64_t>(-n) % n) {
        return static_cast<std::uint64_t>(m >> 64);
      }
    }
  }

  // Uniform in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool coin(double p) { return unit() < p; }

 private:
  std::uint64_t state_;
};

// Named sub-seed so independent stages never share a stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
  return fnv1a64(tag, master ^ 0x9e3779b97f4a7c15ull);
}

}  // namespace city3dqa

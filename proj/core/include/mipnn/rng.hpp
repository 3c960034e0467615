#pragma once

#include <cstdint>
#include <vector>

namespace mipnn {

// Counter-based splittable generator (SplitMix64 core).
//
// Streams derived via stream(seed, key) are statistically independent, so
// per-sample draws never depend on evaluation order. All draws are defined
// by fixed 64-bit arithmetic; results are identical across platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  // Independent stream keyed by (seed, key), e.g. (run seed, sample index).
  static Rng stream(uint64_t seed, uint64_t key) {
    return Rng(mix(seed + 0x9e3779b97f4a7c15ull * (key + 1)));
  }

  uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  // Unbiased draw in [0, n); n must be positive.
  uint64_t below(uint64_t n) {
    const uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      uint64_t x = next();
      if (x >= threshold) return x % n;
    }
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Fisher-Yates; deterministic for a given state.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static uint64_t mix(uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  uint64_t state_;
};

}  // namespace mipnn

#pragma once

#include <cstdint>
#include <random>

namespace temsearch {

// Deterministic RNG. mt19937 supplies raw 32-bit draws; all mappings to
// ranges/reals are hand-rolled here so results are identical across
// standard libraries (std::uniform_int_distribution is not portable).
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(static_cast<uint32_t>(seed ^ (seed >> 32))) {}

  uint32_t u32() { return engine_(); }

  // Unbiased integer in [0, n) via rejection sampling.
  uint32_t uniform_int(uint32_t n) {
    if (n == 0) return 0;
    const uint32_t limit = UINT32_MAX - UINT32_MAX % n;
    uint32_t x;
    do {
      x = u32();
    } while (x >= limit);
    return x % n;
  }

  // Uniform in [lo, hi) with 32 bits of resolution.
  float uniform(float lo, float hi) {
    const float u = static_cast<float>(u32() * (1.0 / 4294967296.0));
    return lo + (hi - lo) * u;
  }

  double uniform_double() { return u32() * (1.0 / 4294967296.0); }

 private:
  std::mt19937 engine_;
};

// splitmix64 finalizer; used to derive independent sub-seeds
// (per-epoch shuffles, per-worker streams) from one master seed.
inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace temsearch

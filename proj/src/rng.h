#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace licattack {

// SplitMix64 generator. Hand-rolled transforms instead of <random>
// distributions so that streams are bit-reproducible regardless of the
// standard library in use.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller without a cached spare; one value per call keeps the stream
  // position independent of call history.
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  uint32_t below(uint32_t n) {
    return n == 0 ? 0u : static_cast<uint32_t>(next_u64() % n);
  }

  // Derive an independent sub-stream seed, e.g. per (image, grid cell).
  static uint64_t derive(uint64_t seed, uint64_t stream) {
    Rng r(seed ^ (stream * 0x9e3779b97f4a7c15ull + 0xd1b54a32d192ed03ull));
    return r.next_u64();
  }

 private:
  uint64_t state_;
};

}  // namespace licattack

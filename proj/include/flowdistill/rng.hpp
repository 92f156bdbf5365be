#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace fd {

// SplitMix64: 64-bit deterministic PRNG, split into independent streams by
// (seed, stream_id). The whole generator state is a single u64 so it can be
// checkpointed and restored exactly.
class SplitMix64 {
 public:
  SplitMix64() : state_(mix(0)) {}
  explicit SplitMix64(uint64_t seed, uint64_t stream_id = 0)
      : state_(mix(seed) ^ mix(stream_id * 0x9E3779B97F4A7C15ULL + 0x6A09E667F3BCC909ULL)) {}

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Uniform integer in [0, n). n must be > 0.
  int64_t below(int64_t n) { return static_cast<int64_t>(next_u64() % static_cast<uint64_t>(n)); }

  // Standard normal via Box-Muller; no cached second value so the state
  // stays a plain u64.
  double next_gaussian() {
    double u1 = next_unit();
    double u2 = next_unit();
    while (u1 <= 0.0) u1 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Bulk fill using both Box-Muller outputs per uniform pair.
  template <typename S>
  void fill_gaussian(S* out, int64_t n, double sigma = 1.0, double mu = 0.0) {
    int64_t i = 0;
    while (i + 1 < n) {
      double u1 = next_unit();
      double u2 = next_unit();
      while (u1 <= 0.0) u1 = next_unit();
      const double r = std::sqrt(-2.0 * std::log(u1));
      out[i] = static_cast<S>(mu + sigma * r * std::cos(2.0 * M_PI * u2));
      out[i + 1] = static_cast<S>(mu + sigma * r * std::sin(2.0 * M_PI * u2));
      i += 2;
    }
    if (i < n) out[i] = static_cast<S>(mu + sigma * next_gaussian());
  }

  template <typename S>
  void fill_uniform(S* out, int64_t n, double lo, double hi) {
    for (int64_t i = 0; i < n; ++i) out[i] = static_cast<S>(next_uniform(lo, hi));
  }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
      std::swap(v[i], v[below(i + 1)]);
    }
  }

  uint64_t state() const { return state_; }
  void set_state(uint64_t s) { state_ = s; }

 private:
  static uint64_t mix(uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  uint64_t state_;
};

// Stream ids used across the project so seeding stays stable.
namespace streams {
inline constexpr uint64_t kParamInit = 1;
inline constexpr uint64_t kShuffle = 2;
inline constexpr uint64_t kLatentEps = 3;
inline constexpr uint64_t kSynthPhase = 10;
inline constexpr uint64_t kSynthNoise = 11;
inline constexpr uint64_t kSynthBase = 12;
inline constexpr uint64_t kOracleNoise = 20;
}  // namespace streams

}  // namespace fd

#pragma once

#include <cstdint>
#include <vector>

namespace diar {

// Deterministic random source with explicitly pinned transforms.
// std::* distributions are implementation-defined, so every stochastic stage
// (k-means seeding, GMM init, corpus synthesis) draws through this class to
// keep seeded runs byte-reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // splitmix64 step.
  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // 53-bit uniform in [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Inclusive range, rejection sampled so the draw is exactly uniform.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) return lo;
    std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return lo + static_cast<std::int64_t>(v % range);
  }

  // Box-Muller with cached spare.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  double lognormal(double mu, double sigma);

  // Index draw proportional to non-negative weights (all-zero -> uniform).
  std::size_t categorical(const std::vector<double>& weights);

  // Independent substream; stable across runs for a given (seed, stream).
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace diar

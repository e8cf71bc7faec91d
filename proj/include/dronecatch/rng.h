#ifndef DRONECATCH_RNG_H_
#define DRONECATCH_RNG_H_

#include <cstdint>
#include <limits>
#include <random>

namespace dronecatch {

// Sequential per-episode stream.
using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds from
// (seed, index) pairs.
constexpr uint64_t MixSeed(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr uint64_t DeriveSeed(uint64_t seed, uint64_t index) {
  return MixSeed(seed ^ MixSeed(index + 0x632BE59BD9B4E019ull));
}

// Cheap counter-seeded generator for per-candidate sampling. Seeding costs
// one mix, so every planner candidate gets its own stream and the sampled set
// does not depend on evaluation order.
class StreamRng {
 public:
  using result_type = uint64_t;

  explicit StreamRng(uint64_t seed) : state_(MixSeed(seed)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1).
  double Uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

 private:
  uint64_t state_;
};

}  // namespace dronecatch

#endif  // DRONECATCH_RNG_H_

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "relent/common.hpp"

namespace relent {

// SplitMix64 finalizer. Used both as a mixer and, with the Weyl increment,
// as the counter-based seed stream: trial k of master seed s draws
// mix(s + (k+1)*GOLDEN). Trials are therefore order-insensitive and can be
// re-run or parallelized without changing results.
inline uint64_t splitmix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t index) {
  return splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15ull);
}

// mt19937_64 is fully pinned by the standard; uniform doubles and categorical
// draws below avoid std distributions, whose output is implementation-defined.
struct Rng {
  std::mt19937_64 gen;

  explicit Rng(uint64_t seed) : gen(seed) {}

  // Uniform in [0,1) with 53 random bits.
  double uniform() { return (gen() >> 11) * 0x1.0p-53; }

  bool coin() { return (gen() >> 63) != 0; }

  // Index draw proportional to non-negative weights (need not be normalized).
  int categorical(const std::vector<double>& w) {
    double total = 0.0;
    for (double x : w) total += x;
    if (!(total > 0.0)) throw numeric_error("categorical draw over zero-mass weights");
    double u = uniform() * total;
    double acc = 0.0;
    int last = -1;
    for (size_t i = 0; i < w.size(); ++i) {
      if (w[i] <= 0.0) continue;
      acc += w[i];
      last = static_cast<int>(i);
      if (u < acc) return last;
    }
    return last;  // u landed in terminal rounding slack
  }
};

}  // namespace relent

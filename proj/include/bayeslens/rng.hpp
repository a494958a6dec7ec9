#pragma once

#include <cstdint>
#include <random>

namespace bayeslens {

// Seeded random source with a fixed bits->double mapping so that a given seed
// produces the same stream on every platform (std::uniform_real_distribution
// is implementation-defined; we avoid it).
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  bool chance(double p) { return uniform() < p; }

  std::uint64_t bits() { return engine_(); }

private:
  std::mt19937_64 engine_;
};

}  // namespace bayeslens

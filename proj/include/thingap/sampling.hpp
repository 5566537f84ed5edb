#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace thingap {

/// Radical inverse of `index` in `base` (one coordinate of a Halton point).
inline double halton(std::uint64_t index, std::uint32_t base) {
  double f = 1.0;
  double r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

/// Seeded generator. Draws are built from raw 64-bit words so a given seed
/// yields the same stream on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {
    // Box-Muller; u1 is kept away from 0.
    const double u1 = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace thingap

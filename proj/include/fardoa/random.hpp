#pragma once

// Reproducible random draws. std::normal_distribution is implementation
// defined, so normals are produced here from raw mt19937_64 output with the
// Box-Muller transform; the same seed gives the same stream on every platform.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace fardoa {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Order-independent per-trial seed: mix64 chained over (base, level, trial).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t level, std::uint64_t trial) noexcept {
  return mix64(mix64(mix64(base) ^ level) ^ trial);
}

class NormalSource {
public:
  explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1], u2 in [0, 1)
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

private:
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fardoa

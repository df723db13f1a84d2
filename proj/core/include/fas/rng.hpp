#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace fas::rng {

// SplitMix64 step; the underlying generator for all randomness in fas.
inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Counter-based stream. A stream is keyed by mixing an arbitrary tuple of
// 64-bit ids (seed, sample, step, mode, ...); streams with different keys are
// independent for practical purposes and draws are reproducible regardless of
// thread scheduling.
class Stream {
 public:
  explicit Stream(std::uint64_t key) : state_(key) {}

  static Stream keyed(std::initializer_list<std::uint64_t> ids) {
    std::uint64_t h = 0x853C49E6748FEA9Bull;
    for (std::uint64_t id : ids) {
      h ^= id + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
      splitmix64(h);
    }
    return Stream(h);
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  // uniform in (0, 1)
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller (one value per pair of uniforms; the
  // second value is discarded to keep the stream position deterministic)
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace fas::rng

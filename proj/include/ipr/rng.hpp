#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace ipr {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seeded random stream. Streams derived from (seed, ids...) are independent,
/// and draws are identical across platforms because the double mappings are
/// spelled out here instead of going through std:: distributions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  static Rng stream(uint64_t seed, std::initializer_list<uint64_t> ids) {
    uint64_t s = seed;
    uint64_t h = splitmix64(s);
    for (uint64_t id : ids) {
      s ^= id + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
      h ^= splitmix64(s);
    }
    return Rng(h);
  }

  uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1).
  double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  uint64_t uniform_int(uint64_t n) {
    if (n <= 1) return 0;
    uint64_t bound = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = gen_();
    } while (x >= bound);
    return x % n;
  }

  /// Standard normal via Box-Muller (deterministic, no cached spare).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    u1 = u1 <= 0.0 ? 0x1.0p-53 : u1;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace ipr

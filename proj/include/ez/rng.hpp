#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace ez::rng {

// SplitMix64: 64-bit splittable generator with a fixed, portable output
// sequence. Used everywhere randomness must be reproducible across runs,
// platforms, and standard libraries (std:: distributions are not portable).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

  // Uniform integer in [0, n). Multiply-shift reduction; bias is < n / 2^64.
  std::uint64_t bounded(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  // Standard normal via Box-Muller.
  double gaussian() {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t s) { state_ = s; }

 private:
  std::uint64_t state_;
};

inline std::uint64_t mix_step(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic combination of seed components (seed, epoch, ...).
inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return mix_step(mix_step(a + 0x9e3779b97f4a7c15ULL) ^ (b + 0x9e3779b97f4a7c15ULL));
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix(mix(a, b), c);
}

// FNV-1a over bytes; stable across platforms.
inline std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Fisher-Yates with SplitMix64::bounded; deterministic for a given state.
template <class T>
void shuffle(std::vector<T>& v, SplitMix64& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(g.bounded(i));
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

}  // namespace ez::rng

#pragma once

#include <cstdint>
#include <string_view>

namespace fcnd {

/// SplitMix64 (Steele, Lea, Flood). Portable and fully specified by its
/// constants, so every seeded routine reproduces bit-for-bit across
/// platforms:
///   state += 0x9E3779B97F4A7C15
///   z = (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Uses rejection to stay unbiased.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

/// Derives an independent stream seed from a parent seed and a stage label.
/// FNV-1a over the label, mixed through one SplitMix64 step.
inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view stage) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : stage) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  SplitMix64 mix(parent ^ h);
  return mix.next();
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  SplitMix64 mix(parent + 0x9E3779B97F4A7C15ULL * (index + 1));
  mix.next();
  return mix.next();
}

}  // namespace fcnd

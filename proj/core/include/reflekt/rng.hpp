#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace reflekt {

/// Counter-based pseudo-random stream.
///
/// Each draw is a strong 64-bit mix of (key, counter), so a stream is a pure
/// function of its key and the number of draws made so far. Streams derived
/// from (seed, tag, index) are independent of thread scheduling: sample k of a
/// Monte-Carlo ensemble always sees the same numbers no matter how the work is
/// partitioned.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  /// Hash (seed, tag, index) into a stream key.
  static std::uint64_t derive_key(std::uint64_t seed, std::string_view tag,
                                  std::uint64_t index) {
    std::uint64_t h = 0xCBF29CE484222325ULL ^ mix(seed);
    for (unsigned char c : tag) {
      h ^= c;
      h *= 0x100000001B3ULL;
    }
    return mix(h ^ mix(index + 0x9E3779B97F4A7C15ULL));
  }

  std::uint64_t next_u64() {
    ctr_ += 0x9E3779B97F4A7C15ULL;
    return mix(mix(key_ ^ ctr_));
  }

  /// Uniform draw in the open interval (0, 1).
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller; the second deviate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace reflekt

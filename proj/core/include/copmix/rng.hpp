#ifndef COPMIX_RNG_HPP
#define COPMIX_RNG_HPP

#include <cstdint>

namespace copmix {

/// Counter-based pseudo-random generator (SplitMix64 output function applied
/// to seed + counter * golden gamma).  The same (seed, counter) pair yields
/// the same value on every platform, which is what makes chain paths and
/// Monte Carlo checks bit-reproducible.
///
/// Constants are the standard SplitMix64 ones (Steele, Lea, Flood 2014).
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed ^ mix(stream ^ 0x6c62272e07bb0142ULL)), counter_(0) {}

  std::uint64_t next_u64() {
    ++counter_;
    return mix(seed_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform double in [0,1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // Modulo bias is < 2^-40 for the n used here (n << 2^24); acceptable.
    return next_u64() % n;
  }

  std::uint64_t counter() const { return counter_; }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace copmix

#endif  // COPMIX_RNG_HPP

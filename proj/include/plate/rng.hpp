#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace plate {

/// SplitMix64 pseudo-random generator.
///
/// This is the project-wide RNG: a 64-bit state advanced by the golden-ratio
/// increment and scrambled by the murmur-style finalizer. It is chosen for a
/// reason the usual mt19937 is not: the full algorithm fits in a dozen lines,
/// so any other language can reproduce the exact stream from the same seed.
/// All randomized artifacts (synthetic corpora, augmentation draws, weight
/// init, shuffles) derive from this generator and nothing else.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0,1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo,hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Uniform integer in [0,n). Fixed-point multiply, documented so the
  /// stream is reproducible bit-for-bit from the spec of this class alone.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

/// Finalizer used for stream derivation (same scrambler as SplitMix64).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Independent substream for (seed, stream index). Parallel per-sample work
/// uses substream(seed, sample_index) so the result does not depend on the
/// order samples are processed in.
inline SplitMix64 substream(std::uint64_t seed, std::uint64_t index) {
  return SplitMix64(mix64(mix64(seed + 0x9E3779B97F4A7C15ULL) ^
                          mix64(index + 0xD1B54A32D192ED03ULL)));
}

/// Fisher-Yates shuffle driven by the given generator.
template <class T>
void shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace plate

#pragma once

#include <cstdint>
#include <random>

namespace tripleq {

/// Seedable run generator. Draws are derived from mt19937_64 output by
/// explicit bit manipulation so sequences are identical across standard
/// libraries. `split` derives an independent child stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

  /// Uniform on the 2^-53 grid in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on the 2^-53 grid in (0, 1].
  double uniform_open_zero() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; }

  /// Index drawn from a probability vector by inverse CDF.
  /// Falls back to the last index with positive mass if rounding leaves the
  /// draw past the cumulative sum.
  template <class Probs>
  int categorical(const Probs& probs) {
    const double u = uniform();
    double acc = 0.0;
    int last_positive = 0;
    const int n = static_cast<int>(probs.size());
    for (int i = 0; i < n; ++i) {
      const double p = probs[i];
      if (p > 0.0) last_positive = i;
      acc += p;
      if (u < acc) return i;
    }
    return last_positive;
  }

  Rng split(std::uint64_t stream) const { return Rng(mix(seed_ ^ mix(stream + 0x9E3779B97F4A7C15ULL))); }

  std::uint64_t seed() const { return seed_; }

 private:
  // SplitMix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace tripleq

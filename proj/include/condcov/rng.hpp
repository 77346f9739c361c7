#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace condcov::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// SplitMix64 output function. Also used to derive substream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += kGolden;
    return mix64(state_);
  }

 private:
  std::uint64_t state_;
};

/// xoshiro256++ with SplitMix64 state expansion. Substreams are keyed by a
/// path of 64-bit ids mixed into the seed, so replicate r of dataset d always
/// sees the same stream no matter which worker runs it or in which order.
/// Folds a path of ids into a seed; equal paths give equal seeds and
/// sibling paths give independent streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = seed;
  for (std::uint64_t k : path) h = mix64(h ^ (k + kGolden));
  return h;
}

class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) { reseed(seed); }

  static Xoshiro256pp substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    return Xoshiro256pp(derive_seed(seed, path));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1), 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1]; safe as a log() argument.
  double next_unit_open() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  /// Uniform integer in [0, bound) via 128-bit multiply-shift.
  std::uint64_t next_below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  /// Standard normal via Box-Muller; the second value of each pair is cached.
  double next_normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double r = std::sqrt(-2.0 * std::log(next_unit_open()));
    const double theta = 2.0 * 3.14159265358979323846 * next_unit();
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  void reseed(std::uint64_t seed) {
    SplitMix64 sm(seed);
    bool all_zero = true;
    for (auto& word : s_) {
      word = sm.next();
      all_zero = all_zero && word == 0;
    }
    if (all_zero) s_[0] = kGolden;
    has_cached_ = false;
    cached_ = 0.0;
  }

  std::array<std::uint64_t, 4> s_{};
  bool has_cached_ = false;
  double cached_ = 0.0;
};

/// Stream ids for the fixed purposes that draw randomness. Keeping them in one
/// table guarantees distinct substreams across the pipeline.
enum StreamId : std::uint64_t {
  kStreamBootstrapReplicate = 1,
  kStreamStudyTemperature = 2,
  kStreamStudyOutputs = 3,
  kStreamStudyBootstrap = 4,
};

}  // namespace condcov::rng

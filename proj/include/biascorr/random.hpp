#pragma once

#include <cstdint>

namespace biascorr {

/// SplitMix64 output finalizer. A bijection on 64-bit words with good
/// avalanche behaviour.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Maps the top 53 bits of a word onto [0, 1).
constexpr double to_unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Counter-based random bits: a pure function of (seed, stream, counter).
/// Decisions keyed this way do not depend on traversal order, so any subset
/// of counters can be evaluated independently or in parallel.
constexpr std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t stream,
                                     std::uint64_t counter) noexcept {
  std::uint64_t key = mix64(seed + 0x9e3779b97f4a7c15ULL * (stream + 1));
  return mix64(mix64(key ^ counter) + 0x632be59bd9b4e019ULL);
}

constexpr double counter_uniform(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t counter) noexcept {
  return to_unit_interval(counter_bits(seed, stream, counter));
}

/// Sequential seeded generator (SplitMix64). Each consumer owns its own
/// instance; there is no shared state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform on [0, 1).
  double uniform() noexcept { return to_unit_interval(next()); }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

 private:
  std::uint64_t state_;
};

}  // namespace biascorr

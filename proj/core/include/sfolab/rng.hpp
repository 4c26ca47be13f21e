// Copyright 2026 The sfolab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>

namespace sfolab {

/// Counter-based random stream.
///
/// A stream is identified by a (seed, stream id) key; the n-th draw is a pure
/// function of the key and n. The SGD engine opens one stream per iteration
/// (stream id = t), so draws for iteration t do not depend on how many draws
/// earlier iterations consumed, on the recording cadence, or on which thread
/// runs the replica.
///
/// Satisfies UniformRandomBitGenerator, so it plugs into the <random>
/// distributions.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(mix(mix(seed) ^ (stream * kStreamStride + kStreamOffset))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept { return mix(key_ + (++counter_) * kGolden); }

  std::uint64_t draws() const noexcept { return counter_; }

  /// SplitMix64 finalizer.
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  static constexpr std::uint64_t kStreamStride = 0xd1b54a32d192ed03ULL;
  static constexpr std::uint64_t kStreamOffset = 0x8cb92ba72f3d8dd7ULL;

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Reserved stream ids. Iteration streams use ids [0, 2^62).
namespace streams {
inline constexpr std::uint64_t kInitialPoint = 0xC000000000000001ULL;
inline constexpr std::uint64_t kProbe = 0xC000000000000002ULL;
inline constexpr std::uint64_t kEpochShuffleBase = 0x8000000000000000ULL;
}  // namespace streams

}  // namespace sfolab

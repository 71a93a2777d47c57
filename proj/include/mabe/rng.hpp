// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>

namespace mabe {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 64-bit seed is the Philox key; the 128-bit counter is split into a
/// 64-bit stream id (high half) and a 64-bit block index (low half). Two
/// generators with the same (seed, stream) produce the same sequence on every
/// platform, and `CounterRng(seed, worker_id)` gives each parallel worker an
/// independent stream without coordination.
///
/// Satisfies UniformRandomBitGenerator, but library code never routes it
/// through `std::*_distribution` (those are not reproducible across standard
/// libraries); use the members below instead.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  /// Index drawn from the (not necessarily normalized) nonnegative weights by
  /// inverse CDF. Zero-weight entries are never returned.
  std::size_t categorical(std::span<const double> weights) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Raw Philox4x32-10 block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> philox_block(std::array<std::uint32_t, 4> ctr,
                                                   std::array<std::uint32_t, 2> key) noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

}  // namespace mabe

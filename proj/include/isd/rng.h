// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors

#pragma once

#include <array>
#include <cstdint>

namespace isd {

/**
 * Counter-based random stream built on Philox4x32-10 (Salmon et al., SC'11,
 * the Random123 reference algorithm).
 *
 * The 64-bit seed is the Philox key. The 128-bit counter is split into the
 * 64-bit stream id (high half) and a 64-bit block index (low half), so every
 * (seed, stream) pair addresses its own non-overlapping sequence of 2^64
 * blocks. Each block yields four 32-bit words. Output is a pure function of
 * (seed, stream, position), identical on every platform.
 */
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Independent sibling stream; same seed, different stream id.
  RngStream fork(std::uint64_t stream) const { return RngStream(seed_, stream); }

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform double in (0, 1].
  double uniform_open_zero();
  /// Standard normal via Box-Muller (uses two uniforms per pair, caches one).
  double normal();
  bool bernoulli(double p);
  /// Binomial(n, p) by summing Bernoulli draws; intended for small n.
  int binomial(int n, double p);
  /// Exponential with the given rate.
  double exponential(double rate);
  /// Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 uses the boost trick.
  double gamma(double shape);
  /// Uniform integer in [lo, hi] (inclusive) by rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // UniformRandomBitGenerator surface.
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return next_u64(); }

  /// One Philox4x32-10 block for a raw counter/key; exposed for known-answer tests.
  static std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                                    std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace isd

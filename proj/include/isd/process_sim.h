// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "isd/rng.h"

namespace isd {

__extension__ typedef unsigned __int128 Uint128;

/// Per-position acceptance probabilities p_1..p_{N-1} for one stride.
class AcceptanceSchedule {
 public:
  explicit AcceptanceSchedule(std::vector<double> per_position);
  static AcceptanceSchedule uniform(int stride, double p);

  int stride() const { return static_cast<int>(p_.size()) + 1; }
  const std::vector<double>& per_position() const { return p_; }
  /// P_k = p_1 * ... * p_k, with P_0 = 1.
  double cumulative(int k) const;

 private:
  std::vector<double> p_;
};

/// Cost of a single forward in a commit process.
struct ForwardStep {
  int queries_variable = 0;
  int queries_fixed = 0;
  int tokens = 0;
};

/**
 * Raw counters plus per-cycle second moments. All fields are integers so
 * merging shards is exact and order-independent.
 */
struct SimCounters {
  std::uint64_t cycles = 0;
  std::uint64_t tokens = 0;
  std::uint64_t forwards = 0;
  std::uint64_t queries_variable = 0;
  std::uint64_t queries_fixed = 0;
  std::uint64_t denoise_steps = 0;
  // Per-cycle sums of products for ratio standard errors.
  Uint128 tt = 0, ff = 0, tf = 0, vv = 0, vt = 0, xx = 0, xt = 0;

  void add_cycle(std::uint64_t t, std::uint64_t f, std::uint64_t qv, std::uint64_t qx);
  SimCounters& operator+=(const SimCounters& other);
  friend bool operator==(const SimCounters&, const SimCounters&) = default;
};

struct SimResult {
  SimCounters counters;
  double tpf = 0.0;
  double tpf_se = 0.0;
  double oh_var = 0.0;
  double oh_var_se = 0.0;
  double oh_fix = 0.0;
  double oh_fix_se = 0.0;
  /// SDAR only: denoising forwards per block.
  double mean_denoise_steps = 0.0;

  static SimResult from_counters(const SimCounters& counters);
};

/**
 * One ISD renewal cycle: a propose-only forward (N queries variable, 2N-1
 * fixed, 0 tokens) followed by fused forwards (2N-1 queries). A fused forward
 * passes all N-1 coins with probability P_{N-1} and finalizes N tokens;
 * failing coin k finalizes k+1 tokens and ends the cycle. The chain is cut
 * after max_fused fused forwards, or once token_budget tokens are reached.
 */
std::vector<ForwardStep> isd_cycle(const AcceptanceSchedule& schedule, RngStream& rng,
                                   std::uint64_t max_fused = 1u << 20,
                                   std::uint64_t token_budget = ~std::uint64_t{0});

/// One SDAR block: denoising forwards drawing H ~ Binomial(R, p) and
/// resolving max(H, 1) until R = 0, then a KV-commit forward. Every forward
/// carries N queries; the N tokens land on the commit forward.
std::vector<ForwardStep> sdar_block(int block, double p, RngStream& rng);

/// One TiDAR cycle: one forward of N(N+1) queries landing 1 + (run of
/// accepts, capped at N-1) tokens.
ForwardStep tidar_cycle(int stride, double p, RngStream& rng);

SimResult simulate_isd(int stride, const AcceptanceSchedule& schedule, std::uint64_t cycles,
                       RngStream& rng, std::uint64_t max_fused_per_cycle = 1u << 20);
SimResult simulate_sdar(int block, double p, std::uint64_t blocks, RngStream& rng);
SimResult simulate_tidar(int stride, double p, std::uint64_t cycles, RngStream& rng);

/// Splits `cycles` across `shards` streams (seed, shard index) run on
/// separate threads, merging counters in shard order.
SimResult simulate_isd_sharded(int stride, const AcceptanceSchedule& schedule,
                               std::uint64_t cycles, std::uint64_t seed, unsigned shards);
SimResult simulate_sdar_sharded(int block, double p, std::uint64_t blocks, std::uint64_t seed,
                                unsigned shards);
SimResult simulate_tidar_sharded(int stride, double p, std::uint64_t cycles, std::uint64_t seed,
                                 unsigned shards);

}  // namespace isd

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace isd {

/**
 * Forward latency in milliseconds for a batch of `batch` requests carrying
 * `queries` query tokens in total:
 *
 *   base_ms + per_request_ms * batch + per_query_ms * max(0, queries - knee_tokens)
 *
 * plus a per-step scheduler overhead (stationary_overhead_ms when the batch
 * object is reused across steps). Below the knee the forward is memory bound
 * and extra query tokens are free.
 */
struct CostModel {
  double base_ms = 10.0;
  double per_request_ms = 0.05;
  double per_query_ms = 0.02;
  double knee_tokens = 256.0;
  double scheduler_overhead_ms = 2.0;
  double stationary_overhead_ms = 0.5;

  /// Throws InvalidConfig on any negative or non-finite coefficient.
  void validate() const;
  double forward_ms(std::size_t batch, std::uint64_t queries) const;
  double overhead_ms(bool stationary) const;
};

enum class ArrivalKind { kBurst, kPoisson };
enum class ProcessKind { kIsd, kSdar, kAr };

const char* to_string(ProcessKind kind);

struct ArrivalPattern {
  ArrivalKind kind = ArrivalKind::kBurst;
  /// Requests per second, Poisson only.
  double rate = 0.0;
};

struct CommitProcess {
  ProcessKind kind = ProcessKind::kIsd;
  int stride = 4;  // N
  double p = 0.7;
  /// Per-request acceptance is drawn uniformly from [p - p_spread, p + p_spread],
  /// clipped to [0, 1].
  double p_spread = 0.0;
};

struct Workload {
  std::size_t requests = 8;
  std::size_t max_batch = 8;
  std::uint64_t min_output_tokens = 64;
  std::uint64_t max_output_tokens = 256;
  ArrivalPattern arrival;
  CommitProcess process;

  /// Throws InvalidConfig on an empty workload, zero lengths, or bad process.
  void validate() const;
};

enum class BatchPolicy { kContinuous, kBlockSync };

const char* to_string(BatchPolicy policy);
BatchPolicy parse_batch_policy(std::string_view name);

struct RequestStats {
  std::size_t id = 0;
  double acceptance = 0.0;
  std::uint64_t target_tokens = 0;
  double arrival_ms = 0.0;
  double finish_ms = 0.0;
  std::uint64_t tokens = 0;
  /// Batched forwards this request occupied a slot in.
  std::uint64_t forwards = 0;
  double tokens_per_second = 0.0;
};

struct OccupancySample {
  double time_ms = 0.0;
  std::size_t active = 0;
};

struct ServingReport {
  BatchPolicy policy = BatchPolicy::kContinuous;
  std::size_t batch = 0;
  bool stationary = false;
  std::vector<RequestStats> requests;
  std::uint64_t total_tokens = 0;
  std::uint64_t steps = 0;
  double makespan_ms = 0.0;
  double aggregate_tps = 0.0;
  double mean_request_tps = 0.0;
  /// Mean over requests of tokens / occupied forwards.
  double mean_tpf = 0.0;
  /// Batch occupancy at the start of every forward.
  std::vector<OccupancySample> occupancy;
};

/**
 * Event-ordered serving simulation.
 *
 * Every request owns the stream (seed, 1 + id) and draws commit units from it
 * in order: an ISD renewal cycle budgeted to its remaining tokens, an SDAR
 * block, or a single AR token. Both policies therefore see the same units.
 *
 * Continuous: each forward advances every active request by one step of its
 * current unit. Requests leave as soon as their target is reached and queued
 * arrivals join before the next forward.
 *
 * Block-sync: a round starts one unit per active request and lasts as many
 * forwards as the longest unit. Requests that finish their unit early idle in
 * their slot, padded to the widest query count of that forward. Joins and
 * departures happen only at round boundaries.
 *
 * Committed tokens are truncated to each request's remaining target.
 */
ServingReport run_serving_sim(const Workload& workload, BatchPolicy policy, const CostModel& cost,
                              bool stationary, std::uint64_t seed);

struct ScalingPoint {
  double x = 0.0;  // batch size or mean TPF
  double aggregate_tps = 0.0;
};

struct ScalingSweep {
  std::vector<ScalingPoint> points;
  /// Least-squares slope of aggregate_tps against x.
  double slope = 0.0;
};

double least_squares_slope(std::span<const ScalingPoint> points);

/// One run per batch size with requests = max_batch = size, all on `seed`.
/// Batch sizes must be ascending. Runs execute on parallel threads.
ScalingSweep throughput_vs_batch(const Workload& base, std::span<const std::size_t> batch_sizes,
                                 BatchPolicy policy, const CostModel& cost, bool stationary,
                                 std::uint64_t seed);

/// One run per acceptance value at fixed batch; x is the measured mean TPF.
ScalingSweep throughput_vs_tpf(const Workload& base, std::span<const double> acceptance,
                               BatchPolicy policy, const CostModel& cost, bool stationary,
                               std::uint64_t seed);

inline constexpr const char* kServeCsvHeader =
    "policy,batch,stationary,aggregate_tps,mean_request_tps,mean_tpf,makespan_ms";

void write_serve_csv(std::ostream& out, std::span<const ServingReport> reports);

struct ServeRun {
  BatchPolicy policy = BatchPolicy::kContinuous;
  Workload workload;
};

struct ServeConfig {
  std::uint64_t seed = 0;
  CostModel cost;
  bool stationary = false;
  std::vector<ServeRun> runs;
};

/// Parses {seed, cost, stationary, runs: [{policy, workload}]}. Missing cost
/// fields keep their defaults. Throws InvalidConfig naming the offending field.
ServeConfig serve_config_from_json(const std::string& text);

}  // namespace isd

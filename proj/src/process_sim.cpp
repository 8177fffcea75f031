// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors

#include "isd/process_sim.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>

#include "isd/errors.h"

namespace isd {

AcceptanceSchedule::AcceptanceSchedule(std::vector<double> per_position)
    : p_(std::move(per_position)) {
  if (p_.empty()) throw InvalidInput("AcceptanceSchedule: stride must be >= 2");
  for (double p : p_) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("AcceptanceSchedule: p_k must lie in [0, 1]");
  }
}

AcceptanceSchedule AcceptanceSchedule::uniform(int stride, double p) {
  if (stride < 2) throw InvalidInput("AcceptanceSchedule: stride must be >= 2");
  return AcceptanceSchedule(std::vector<double>(static_cast<std::size_t>(stride - 1), p));
}

double AcceptanceSchedule::cumulative(int k) const {
  double product = 1.0;
  for (int j = 0; j < k; ++j) product *= p_.at(static_cast<std::size_t>(j));
  return product;
}

void SimCounters::add_cycle(std::uint64_t t, std::uint64_t f, std::uint64_t qv,
                            std::uint64_t qx) {
  using u128 = Uint128;
  ++cycles;
  tokens += t;
  forwards += f;
  queries_variable += qv;
  queries_fixed += qx;
  tt += u128(t) * t;
  ff += u128(f) * f;
  tf += u128(t) * f;
  vv += u128(qv) * qv;
  vt += u128(qv) * t;
  xx += u128(qx) * qx;
  xt += u128(qx) * t;
}

SimCounters& SimCounters::operator+=(const SimCounters& o) {
  cycles += o.cycles;
  tokens += o.tokens;
  forwards += o.forwards;
  queries_variable += o.queries_variable;
  queries_fixed += o.queries_fixed;
  denoise_steps += o.denoise_steps;
  tt += o.tt;
  ff += o.ff;
  tf += o.tf;
  vv += o.vv;
  vt += o.vt;
  xx += o.xx;
  xt += o.xt;
  return *this;
}

namespace {

// Delta-method standard error of the ratio estimator sum(a)/sum(b) over cycles.
double ratio_se(double n, double sum_a, double sum_b, double aa, double ab, double bb) {
  if (n < 2.0 || sum_b <= 0.0) return 0.0;
  const double r = sum_a / sum_b;
  const double ss = std::max(0.0, aa - 2.0 * r * ab + r * r * bb);
  const double mean_b = sum_b / n;
  return std::sqrt(ss / (n * (n - 1.0))) / mean_b;
}

double d(Uint128 v) { return static_cast<double>(v); }

template <typename Shard>
SimCounters run_sharded(std::uint64_t total, unsigned shards, Shard&& shard) {
  shards = std::max(1u, shards);
  std::vector<SimCounters> parts(shards);
  std::vector<std::thread> workers;
  for (unsigned s = 0; s < shards; ++s) {
    const std::uint64_t count = total / shards + (s < total % shards ? 1 : 0);
    workers.emplace_back([&parts, &shard, s, count] { parts[s] = shard(s, count); });
  }
  for (auto& w : workers) w.join();
  SimCounters merged;
  for (const auto& part : parts) merged += part;
  return merged;
}

SimCounters isd_counters(const AcceptanceSchedule& schedule, std::uint64_t cycles,
                         RngStream& rng, std::uint64_t max_fused) {
  SimCounters c;
  for (std::uint64_t i = 0; i < cycles; ++i) {
    std::uint64_t t = 0, f = 0, qv = 0, qx = 0;
    for (const auto& step : isd_cycle(schedule, rng, max_fused)) {
      t += static_cast<std::uint64_t>(step.tokens);
      qv += static_cast<std::uint64_t>(step.queries_variable);
      qx += static_cast<std::uint64_t>(step.queries_fixed);
      ++f;
    }
    c.add_cycle(t, f, qv, qx);
  }
  return c;
}

SimCounters sdar_counters(int block, double p, std::uint64_t blocks, RngStream& rng) {
  SimCounters c;
  for (std::uint64_t i = 0; i < blocks; ++i) {
    const auto steps = sdar_block(block, p, rng);
    const std::uint64_t f = steps.size();
    const std::uint64_t q = f * static_cast<std::uint64_t>(block);
    c.add_cycle(static_cast<std::uint64_t>(block), f, q, q);
    c.denoise_steps += f - 1;
  }
  return c;
}

SimCounters tidar_counters(int stride, double p, std::uint64_t cycles, RngStream& rng) {
  SimCounters c;
  for (std::uint64_t i = 0; i < cycles; ++i) {
    const ForwardStep step = tidar_cycle(stride, p, rng);
    c.add_cycle(static_cast<std::uint64_t>(step.tokens), 1,
                static_cast<std::uint64_t>(step.queries_variable),
                static_cast<std::uint64_t>(step.queries_fixed));
  }
  return c;
}

}  // namespace

SimResult SimResult::from_counters(const SimCounters& c) {
  SimResult r;
  r.counters = c;
  const double n = static_cast<double>(c.cycles);
  const double t = static_cast<double>(c.tokens);
  const double f = static_cast<double>(c.forwards);
  if (f > 0.0) {
    r.tpf = t / f;
    r.tpf_se = ratio_se(n, t, f, d(c.tt), d(c.tf), d(c.ff));
  }
  if (t > 0.0) {
    r.oh_var = static_cast<double>(c.queries_variable) / t;
    r.oh_var_se = ratio_se(n, static_cast<double>(c.queries_variable), t, d(c.vv), d(c.vt), d(c.tt));
    r.oh_fix = static_cast<double>(c.queries_fixed) / t;
    r.oh_fix_se = ratio_se(n, static_cast<double>(c.queries_fixed), t, d(c.xx), d(c.xt), d(c.tt));
  }
  if (c.cycles > 0) r.mean_denoise_steps = static_cast<double>(c.denoise_steps) / n;
  return r;
}

std::vector<ForwardStep> isd_cycle(const AcceptanceSchedule& schedule, RngStream& rng,
                                   std::uint64_t max_fused, std::uint64_t token_budget) {
  const int n = schedule.stride();
  const int fused_queries = 2 * n - 1;
  std::vector<ForwardStep> steps;
  steps.push_back(ForwardStep{n, fused_queries, 0});
  std::uint64_t produced = 0;
  for (std::uint64_t fused = 0; fused < max_fused && produced < token_budget; ++fused) {
    int failed_at = 0;
    for (int k = 1; k < n; ++k) {
      if (!rng.bernoulli(schedule.per_position()[static_cast<std::size_t>(k - 1)])) {
        failed_at = k;
        break;
      }
    }
    // Rejection at k: 1 free + (k-1) accepted + 1 resampled.
    const int tokens = failed_at == 0 ? n : failed_at + 1;
    steps.push_back(ForwardStep{fused_queries, fused_queries, tokens});
    produced += static_cast<std::uint64_t>(tokens);
    if (failed_at != 0) break;
  }
  return steps;
}

std::vector<ForwardStep> sdar_block(int block, double p, RngStream& rng) {
  if (block < 1) throw InvalidInput("sdar_block: block size must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("sdar_block: p must lie in [0, 1]");
  std::vector<ForwardStep> steps;
  int remaining = block;
  while (remaining > 0) {
    const int passed = rng.binomial(remaining, p);
    remaining -= std::max(passed, 1);
    steps.push_back(ForwardStep{block, block, 0});
  }
  steps.push_back(ForwardStep{block, block, block});
  return steps;
}

ForwardStep tidar_cycle(int stride, double p, RngStream& rng) {
  if (stride < 1) throw InvalidInput("tidar_cycle: stride must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("tidar_cycle: p must lie in [0, 1]");
  int tokens = 1;
  while (tokens < stride && rng.bernoulli(p)) ++tokens;
  const int queries = stride * (stride + 1);
  return ForwardStep{queries, queries, tokens};
}

SimResult simulate_isd(int stride, const AcceptanceSchedule& schedule, std::uint64_t cycles,
                       RngStream& rng, std::uint64_t max_fused_per_cycle) {
  if (stride != schedule.stride()) throw InvalidInput("simulate_isd: schedule length != N - 1");
  return SimResult::from_counters(isd_counters(schedule, cycles, rng, max_fused_per_cycle));
}

SimResult simulate_sdar(int block, double p, std::uint64_t blocks, RngStream& rng) {
  return SimResult::from_counters(sdar_counters(block, p, blocks, rng));
}

SimResult simulate_tidar(int stride, double p, std::uint64_t cycles, RngStream& rng) {
  return SimResult::from_counters(tidar_counters(stride, p, cycles, rng));
}

SimResult simulate_isd_sharded(int stride, const AcceptanceSchedule& schedule,
                               std::uint64_t cycles, std::uint64_t seed, unsigned shards) {
  if (stride != schedule.stride()) throw InvalidInput("simulate_isd: schedule length != N - 1");
  return SimResult::from_counters(
      run_sharded(cycles, shards, [&](unsigned s, std::uint64_t count) {
        RngStream rng(seed, s);
        return isd_counters(schedule, count, rng, 1u << 20);
      }));
}

SimResult simulate_sdar_sharded(int block, double p, std::uint64_t blocks, std::uint64_t seed,
                                unsigned shards) {
  return SimResult::from_counters(run_sharded(blocks, shards, [&](unsigned s, std::uint64_t n) {
    RngStream rng(seed, s);
    return sdar_counters(block, p, n, rng);
  }));
}

SimResult simulate_tidar_sharded(int stride, double p, std::uint64_t cycles, std::uint64_t seed,
                                 unsigned shards) {
  return SimResult::from_counters(run_sharded(cycles, shards, [&](unsigned s, std::uint64_t n) {
    RngStream rng(seed, s);
    return tidar_counters(stride, p, n, rng);
  }));
}

}  // namespace isd

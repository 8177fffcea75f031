// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors
//
// Reference computations that share no code with the library beyond table
// lookups. Tests compare library output against these.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "isd/toy_models.h"

namespace isd::oracle {

// Probability of every continuation of `length` tokens after `prompt`, indexed
// base V with the first generated token most significant.
inline std::vector<double> sequence_probabilities(const TabularAnchorModel& model,
                                                  const std::vector<TokenId>& prompt,
                                                  std::size_t length) {
  const std::size_t v = model.vocab_size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < length; ++i) total *= v;
  std::vector<double> probs(total);
  for (std::size_t code = 0; code < total; ++code) {
    std::vector<TokenId> seq(length);
    std::size_t rest = code;
    for (std::size_t i = length; i-- > 0;) {
      seq[i] = static_cast<TokenId>(rest % v);
      rest /= v;
    }
    std::vector<TokenId> ctx = prompt;
    double prob = 1.0;
    for (TokenId t : seq) {
      prob *= model.distribution(ctx)[t];
      ctx.push_back(t);
    }
    probs[code] = prob;
  }
  return probs;
}

// ISD renewal cycle summed over chain lengths: one propose-only forward, then
// fused forwards until the first failed coin.
struct CycleMoments {
  double tokens = 0.0;
  double forwards = 0.0;
  double queries_variable = 0.0;
  double queries_fixed = 0.0;
};

inline CycleMoments isd_cycle_series(int n, double p, int max_chain = 200000) {
  double all_pass = 1.0;
  for (int k = 1; k < n; ++k) all_pass *= p;
  // Expected tokens of a failing fused forward, conditional on failure.
  double fail_tokens = 0.0;
  double reach = 1.0;
  for (int k = 1; k < n; ++k) {
    fail_tokens += reach * (1.0 - p) * (k + 1);
    reach *= p;
  }
  const double fail = 1.0 - all_pass;
  CycleMoments m;
  // Chain of j passes then one failure, probability all_pass^j * fail.
  double weight = fail;
  for (int j = 0; j < max_chain && weight > 0.0; ++j) {
    const double tokens = j * n + fail_tokens / fail;
    const double forwards = 1.0 + j + 1.0;
    m.tokens += weight * tokens;
    m.forwards += weight * forwards;
    m.queries_variable += weight * (n + (j + 1.0) * (2 * n - 1));
    m.queries_fixed += weight * forwards * (2 * n - 1);
    weight *= all_pass;
  }
  return m;
}

// E[denoising steps] for a block of n by propagating the distribution over the
// number of unresolved tokens until it is absorbed.
inline double sdar_steps_by_propagation(int n, double p) {
  std::vector<double> mass(static_cast<std::size_t>(n) + 1, 0.0);
  mass[static_cast<std::size_t>(n)] = 1.0;
  double expected = 0.0;
  for (int step = 0; step < 10000; ++step) {
    double alive = 0.0;
    for (int r = 1; r <= n; ++r) alive += mass[static_cast<std::size_t>(r)];
    if (alive < 1e-18) break;
    expected += alive;
    std::vector<double> next(mass.size(), 0.0);
    next[0] = mass[0];
    for (int r = 1; r <= n; ++r) {
      for (int h = 0; h <= r; ++h) {
        const double pmf = std::tgamma(r + 1.0) / (std::tgamma(h + 1.0) * std::tgamma(r - h + 1.0)) *
                           std::pow(p, h) * std::pow(1.0 - p, r - h);
        const int left = r - (h == 0 ? 1 : h);
        next[static_cast<std::size_t>(left)] += mass[static_cast<std::size_t>(r)] * pmf;
      }
    }
    mass = std::move(next);
  }
  return expected;
}

// E[tokens] of one TiDAR forward from the explicit run-length law.
inline double tidar_tokens_by_pmf(int n, double p) {
  double expected = 0.0;
  for (int t = 1; t < n; ++t) expected += t * std::pow(p, t - 1) * (1.0 - p);
  return expected + n * std::pow(p, n - 1);
}

}  // namespace isd::oracle

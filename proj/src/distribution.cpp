// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors

#include "isd/distribution.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "isd/errors.h"

namespace isd {

namespace {

void require_same_vocab(const Distribution& p, const Distribution& q, const char* op) {
  if (p.size() != q.size()) {
    throw InvalidInput(std::string(op) + ": vocabulary mismatch (" + std::to_string(p.size()) +
                       " vs " + std::to_string(q.size()) + ")");
  }
}

}  // namespace

Distribution::Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.size() < 2) throw InvalidInput("Distribution: vocabulary size must be >= 2");
  double total = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    const double v = probs_[i];
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidInput("Distribution: entry " + std::to_string(i) + " is negative or not finite");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > kNormalizationTolerance) {
    throw InvalidInput("Distribution: mass " + std::to_string(total) + " is not 1");
  }
}

Distribution Distribution::normalized(std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw InvalidInput("normalized: weights must be >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw InvalidInput("normalized: zero total weight");
  for (double& w : weights) w /= total;
  return Distribution(std::move(weights));
}

Distribution Distribution::uniform(std::size_t vocab_size) {
  return Distribution(std::vector<double>(vocab_size, 1.0 / static_cast<double>(vocab_size)));
}

Distribution Distribution::point_mass(std::size_t vocab_size, TokenId token) {
  if (token < 0 || static_cast<std::size_t>(token) >= vocab_size) {
    throw InvalidInput("point_mass: token out of range");
  }
  std::vector<double> probs(vocab_size, 0.0);
  probs[static_cast<std::size_t>(token)] = 1.0;
  return Distribution(std::move(probs));
}

TokenId Distribution::argmax() const {
  return static_cast<TokenId>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

TokenId sample(const Distribution& dist, RngStream& rng) {
  const double u = rng.uniform();
  const auto probs = dist.probs();
  double cumulative = 0.0;
  TokenId last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cumulative += probs[i];
    last_positive = static_cast<TokenId>(i);
    if (u < cumulative) return last_positive;
  }
  // Rounding left the cumulative sum just under u.
  return last_positive;
}

double total_variation(const Distribution& a, const Distribution& b) {
  require_same_vocab(a, b, "total_variation");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a.probs()[i] - b.probs()[i]);
  return 0.5 * sum;
}

Distribution residual_distribution(const Distribution& p, const Distribution& q) {
  require_same_vocab(p, q, "residual_distribution");
  std::vector<double> residual(p.size());
  double mass = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    residual[i] = std::max(0.0, p.probs()[i] - q.probs()[i]);
    mass += residual[i];
  }
  if (mass < kResidualMassFloor) return p;
  for (double& r : residual) r /= mass;
  return Distribution(std::move(residual));
}

double acceptance_probability(const Distribution& p, const Distribution& q, TokenId token,
                              double tau) {
  require_same_vocab(p, q, "acceptance_probability");
  if (!p.contains(token)) throw InvalidInput("acceptance_probability: token out of range");
  if (!(tau >= 0.0)) throw InvalidInput("acceptance_probability: tau must be >= 0");
  const double q_x = q[token];
  if (!(q_x > 0.0)) {
    throw InvalidInput("acceptance_probability: proposal token has zero mass under q");
  }
  return std::min(1.0, (1.0 + tau) * p[token] / q_x);
}

AcceptanceDecision accept_or_resample(const Distribution& p, const Distribution& q, TokenId token,
                                      double tau, RngStream& rng) {
  AcceptanceDecision decision;
  decision.acceptance_probability = acceptance_probability(p, q, token, tau);
  if (rng.uniform() < decision.acceptance_probability) {
    decision.accepted = true;
    decision.token = token;
    return decision;
  }
  decision.accepted = false;
  decision.token = sample(residual_distribution(p, q), rng);
  return decision;
}

Distribution one_step_output_distribution(const Distribution& p, const Distribution& q,
                                          double tau) {
  require_same_vocab(p, q, "one_step_output_distribution");
  if (!(tau >= 0.0)) throw InvalidInput("one_step_output_distribution: tau must be >= 0");
  const std::size_t vocab = p.size();
  // q(x) * min(1, (1+tau) p(x)/q(x)) == min(q(x), (1+tau) p(x)), with no division.
  std::vector<double> out(vocab);
  double accepted_mass = 0.0;
  for (std::size_t i = 0; i < vocab; ++i) {
    out[i] = std::min(q.probs()[i], (1.0 + tau) * p.probs()[i]);
    accepted_mass += out[i];
  }
  const double rejection_mass = std::max(0.0, 1.0 - accepted_mass);
  if (rejection_mass > 0.0) {
    const Distribution residual = residual_distribution(p, q);
    for (std::size_t i = 0; i < vocab; ++i) out[i] += rejection_mass * residual.probs()[i];
  }
  return Distribution(std::move(out));
}

double introspective_acceptance_rate(std::span<const IntrospectionSample> samples) {
  if (samples.empty()) throw InvalidInput("introspective_acceptance_rate: empty sequence");
  double sum = 0.0;
  for (const auto& s : samples) sum += acceptance_probability(s.p, s.q, s.token, 0.0);
  return sum / static_cast<double>(samples.size());
}

}  // namespace isd

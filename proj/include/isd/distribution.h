// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "isd/rng.h"

namespace isd {

using TokenId = std::int32_t;

/// Absolute tolerance on the total mass of a Distribution.
inline constexpr double kNormalizationTolerance = 1e-9;
/// Residual mass below this is treated as "p equals q".
inline constexpr double kResidualMassFloor = 1e-12;

/**
 * Probability vector over a finite vocabulary, stored in linear space.
 *
 * Construction validates: size >= 2, every entry finite and >= 0, total mass
 * within kNormalizationTolerance of 1. Values are stored exactly as given.
 */
class Distribution {
 public:
  explicit Distribution(std::vector<double> probs);

  /// Scales non-negative weights to unit mass. Throws if the mass is zero.
  static Distribution normalized(std::vector<double> weights);
  static Distribution uniform(std::size_t vocab_size);
  static Distribution point_mass(std::size_t vocab_size, TokenId token);

  std::size_t size() const { return probs_.size(); }
  double operator[](TokenId token) const { return probs_[static_cast<std::size_t>(token)]; }
  std::span<const double> probs() const { return probs_; }

  /// Lowest-index maximizer.
  TokenId argmax() const;
  bool contains(TokenId token) const {
    return token >= 0 && static_cast<std::size_t>(token) < probs_.size();
  }

  friend bool operator==(const Distribution&, const Distribution&) = default;

 private:
  std::vector<double> probs_;
};

/// Inverse-CDF draw; consumes exactly one uniform.
TokenId sample(const Distribution& dist, RngStream& rng);

/// Total variation distance between two distributions over the same vocabulary.
double total_variation(const Distribution& a, const Distribution& b);

/// normalize(max(0, p - q)); returns p itself when the residual mass is below
/// kResidualMassFloor.
Distribution residual_distribution(const Distribution& p, const Distribution& q);

struct AcceptanceDecision {
  bool accepted = false;
  /// The proposal when accepted, the residual draw otherwise.
  TokenId token = 0;
  /// min(1, (1 + tau) p(x) / q(x)).
  double acceptance_probability = 0.0;
};

/// Clamped relaxed ratio min(1, (1 + tau) p(token) / q(token)).
double acceptance_probability(const Distribution& p, const Distribution& q, TokenId token,
                              double tau);

/**
 * Speculative accept/resample for a proposal token drawn from q.
 *
 * Consumes one uniform for the coin and, on rejection, one more for the
 * residual draw. Throws InvalidInput when q(token) == 0, on vocabulary
 * mismatch, or when tau < 0.
 */
AcceptanceDecision accept_or_resample(const Distribution& p, const Distribution& q, TokenId token,
                                      double tau, RngStream& rng);

/// Exact marginal of the token emitted by accept_or_resample when the
/// proposal is drawn from q. Equals p when tau == 0.
Distribution one_step_output_distribution(const Distribution& p, const Distribution& q,
                                          double tau);

struct IntrospectionSample {
  Distribution p;
  Distribution q;
  TokenId token;
};

/// Mean over positions of min(1, p_k(x_k) / q_k(x_k)).
double introspective_acceptance_rate(std::span<const IntrospectionSample> samples);

}  // namespace isd

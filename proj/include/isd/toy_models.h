// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "isd/distribution.h"
#include "isd/rng.h"

namespace isd {

/**
 * Order-k Markov table acting as the causal anchor p(x_{i+1} | x_{<=i}).
 *
 * Contexts shorter than k are left-padded with a reserved begin-of-sequence
 * id equal to vocab_size (never emitted). The reachable padded contexts are
 * bos^j followed by k-j real tokens, so a dense table holds
 * 1 + V + ... + V^k rows. Row index of a context with m real tokens is
 * (1 + V + ... + V^(m-1)) + base-V value of those tokens.
 *
 * A sparse table stores only some rows; every other context falls back to the
 * uniform distribution.
 */
class TabularAnchorModel {
 public:
  /// Dense model; rows.size() must equal row_count(vocab_size, order).
  TabularAnchorModel(std::size_t vocab_size, std::size_t order, std::vector<Distribution> rows);
  /// Sparse model with uniform fallback for absent rows.
  TabularAnchorModel(std::size_t vocab_size, std::size_t order,
                     std::map<std::size_t, Distribution> sparse_rows);

  static std::size_t row_count(std::size_t vocab_size, std::size_t order);

  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t order() const { return order_; }
  TokenId bos() const { return static_cast<TokenId>(vocab_size_); }
  bool dense() const { return !rows_.empty(); }

  /// Conditional distribution given the last `order` tokens of the padded context.
  const Distribution& distribution(std::span<const TokenId> context) const;

  std::size_t row_index(std::span<const TokenId> context) const;
  /// Inverse of row_index: the padded context (bos entries included) for a row.
  std::vector<TokenId> row_context(std::size_t index) const;
  /// Row by index; uniform fallback for absent sparse rows.
  const Distribution& row(std::size_t index) const;
  /// Rows explicitly stored (all rows when dense).
  std::vector<std::size_t> stored_rows() const;

  friend bool operator==(const TabularAnchorModel& a, const TabularAnchorModel& b) {
    return a.vocab_size_ == b.vocab_size_ && a.order_ == b.order_ && a.rows_ == b.rows_ &&
           a.sparse_rows_ == b.sparse_rows_;
  }

 private:
  void validate_row(const Distribution& row) const;

  std::size_t vocab_size_;
  std::size_t order_;
  std::vector<Distribution> rows_;
  std::map<std::size_t, Distribution> sparse_rows_;
  Distribution uniform_;
};

/// anchor_distribution: the model's conditional for `context`, validating token range.
const Distribution& anchor_distribution(const TabularAnchorModel& model,
                                        std::span<const TokenId> context);

/// Dense model with rows drawn from a symmetric Dirichlet(concentration).
TabularAnchorModel random_model(std::size_t vocab_size, std::size_t order, double concentration,
                                RngStream& rng);

/// Context key used by the JSON format: comma-joined ids, "bos" for padding.
std::string context_key(std::span<const TokenId> padded_context, TokenId bos);

/// JSON document {vocab_size, order, [fallback], rows: {context -> [probs]}}
/// with probabilities in 17-significant-digit scientific notation.
std::string model_to_json(const TabularAnchorModel& model);
/// Parses model_to_json output. Diagnostics name the offending field.
TabularAnchorModel model_from_json(const std::string& text);

/**
 * Base model plus a per-context logit offset that is active only when the
 * gate is on (mask positions). With the gate off the base row is returned
 * unchanged.
 */
class GatedResidualModel {
 public:
  /// offsets has one vector of length V per dense row of `base`.
  GatedResidualModel(std::shared_ptr<const TabularAnchorModel> base,
                     std::vector<std::vector<double>> offsets);

  /// Offsets drawn i.i.d. normal(0, scale).
  static GatedResidualModel random(std::shared_ptr<const TabularAnchorModel> base, double scale,
                                   RngStream& rng);
  /// Pushes `boost` logits onto each context's least likely base token.
  static GatedResidualModel adversarial(std::shared_ptr<const TabularAnchorModel> base,
                                        double boost);
  static GatedResidualModel zero(std::shared_ptr<const TabularAnchorModel> base);

  const TabularAnchorModel& base() const { return *base_; }
  const std::shared_ptr<const TabularAnchorModel>& base_ptr() const { return base_; }

  const Distribution& distribution(std::span<const TokenId> context, bool gate) const;

 private:
  std::shared_ptr<const TabularAnchorModel> base_;
  std::vector<Distribution> gated_rows_;
};

enum class ProposalMode { kMirror, kEpsilonMixture, kIndependentTable, kGatedResidual };

/// Where mask-position proposals q come from.
class ProposalSource {
 public:
  static ProposalSource mirror();
  static ProposalSource epsilon_mixture(double epsilon);
  static ProposalSource independent(std::shared_ptr<const TabularAnchorModel> table);
  static ProposalSource gated(std::shared_ptr<const GatedResidualModel> model);

  ProposalMode mode() const { return mode_; }
  double epsilon() const { return epsilon_; }
  const GatedResidualModel* gated_model() const { return gated_.get(); }
  const TabularAnchorModel* table() const { return table_.get(); }

  /// Depth-1 proposal for the next token after `context`.
  Distribution next(const TabularAnchorModel& anchor, std::span<const TokenId> context) const;

 private:
  ProposalSource(ProposalMode mode, double epsilon) : mode_(mode), epsilon_(epsilon) {}

  ProposalMode mode_;
  double epsilon_ = 0.0;
  std::shared_ptr<const TabularAnchorModel> table_;
  std::shared_ptr<const GatedResidualModel> gated_;
};

/**
 * One q per mask position. Position j conditions on the committed context
 * extended by the argmax tokens of positions 1..j-1: mask slots cannot see
 * what earlier slots will sample, so deeper slots guess along the modal path.
 */
std::vector<Distribution> proposal_distributions(const ProposalSource& source,
                                                 const TabularAnchorModel& anchor,
                                                 std::span<const TokenId> committed_context,
                                                 std::size_t n_masks);

/// Epsilon giving acceptance probability `target` for ε-mixture proposals
/// over a context-free (order 0) anchor: 1 - target = ε·TV(p, uniform).
double epsilon_for_acceptance(const Distribution& anchor_row, double target);

}  // namespace isd

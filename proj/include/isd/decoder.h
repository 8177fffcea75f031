// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "isd/accounting.h"
#include "isd/distribution.h"
#include "isd/toy_models.h"

namespace isd {

enum class ProposalDraw { kSample, kArgmax };

struct StrideConfig {
  int stride = 4;
  double tau = 0.0;
  ProposalDraw proposal_draw = ProposalDraw::kSample;
  bool lossless = false;
  std::size_t max_new_tokens = 64;
  std::vector<TokenId> stop_tokens;
  std::uint64_t seed = 0;

  /// Throws InvalidConfig when stride < 2, tau < 0, or lossless with tau != 0.
  void validate() const;
};

enum class ForwardKind { kBootstrap, kFused, kProposeOnly };

const char* to_string(ForwardKind kind);

struct ForwardRecord {
  ForwardKind kind = ForwardKind::kFused;
  int query_tokens = 0;
  int committed_tokens = 0;
  /// 1-based index of the rejected proposal within the step.
  std::optional<int> rejection_position;
  bool bonus_emitted = false;

  friend bool operator==(const ForwardRecord&, const ForwardRecord&) = default;
};

struct DecodeTrace {
  int stride = 1;
  std::vector<ForwardRecord> records;
  /// Emitted tokens: committed tokens cut after the first stop token and at
  /// max_new_tokens.
  std::vector<TokenId> output;
  /// Every committed token, including those cut from `output`. The sum of
  /// committed_tokens over records equals committed.size().
  std::vector<TokenId> committed;
  /// Per verified proposal: min(1, (1+tau) p/q) as used by the coin.
  std::vector<double> acceptance_ratios;
  /// Per verified proposal: min(1, p/q), the introspective acceptance term.
  std::vector<double> introspection_ratios;
  bool stopped = false;

  friend bool operator==(const DecodeTrace&, const DecodeTrace&) = default;
};

/**
 * Introspective strided decoding over a tabular anchor.
 *
 * Bootstrap: one forward over the last prompt token plus N-1 masks (N
 * queries). The clean position yields the free token from the exact anchor;
 * the masks yield N-1 proposals. Nothing is committed yet.
 *
 * Fused step: the free token and the N-1 proposals are fed back as clean
 * input next to N-1 fresh masks (2N-1 queries). Anchors are read at the
 * now-clean positions and each proposal goes through accept_or_resample in
 * order. A rejection commits the resampled token, discards the remaining
 * proposals and the fresh masks, and schedules a propose-only step. When all
 * proposals pass, a bonus token is drawn from the final anchor and committed
 * immediately; it is also the free token of the next fused step, whose fresh
 * proposals were produced in the same forward.
 *
 * Propose-only: the resampled token plus N-1 masks (N queries), committing
 * nothing.
 *
 * In argmax mode each proposal is the argmax of q and is verified as a point
 * mass on that token, which keeps the output distributed as the anchor.
 */
DecodeTrace decode(const TabularAnchorModel& anchor, const ProposalSource& proposals,
                   std::span<const TokenId> prompt, const StrideConfig& cfg);

/// Plain next-token sampling; one forward, one query, one token per step.
DecodeTrace decode_ar(const TabularAnchorModel& anchor, std::span<const TokenId> prompt,
                      std::size_t max_new_tokens, std::uint64_t seed);

/// Proposals from the gated model with the gate on, anchors from `base`.
/// Requires cfg.lossless and gated.base() == base.
DecodeTrace decode_lossless(const TabularAnchorModel& base,
                            std::shared_ptr<const GatedResidualModel> gated,
                            std::span<const TokenId> prompt, const StrideConfig& cfg);

struct TpfOh {
  double tpf = 0.0;
  double oh = 0.0;
};

/// tpf = committed / forwards; oh = queries / committed. Under fixed
/// accounting bootstrap and propose-only forwards are padded to 2N-1.
TpfOh measure_tpf_oh(const DecodeTrace& trace, QueryAccounting accounting);

/// One JSON object per record, then a summary trailer object.
std::string trace_to_jsonl(const DecodeTrace& trace);

}  // namespace isd

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors

#include "isd/decoder.h"

#include <algorithm>
#include <numeric>

#include "json.hpp"

#include "isd/errors.h"

namespace isd {

void StrideConfig::validate() const {
  if (stride < 2) {
    throw InvalidConfig("stride must be >= 2 (stride 1 is plain AR; use decode_ar)");
  }
  if (!(tau >= 0.0)) throw InvalidConfig("tau must be >= 0");
  if (lossless && tau != 0.0) throw InvalidConfig("lossless decoding requires tau = 0");
}

const char* to_string(ForwardKind kind) {
  switch (kind) {
    case ForwardKind::kBootstrap:
      return "bootstrap";
    case ForwardKind::kFused:
      return "fused";
    case ForwardKind::kProposeOnly:
      return "propose-only";
  }
  return "unknown";
}

namespace {

void check_prompt(const TabularAnchorModel& anchor, std::span<const TokenId> prompt) {
  if (prompt.empty()) throw InvalidInput("decode: prompt must be non-empty");
  for (TokenId t : prompt) {
    if (t < 0 || static_cast<std::size_t>(t) >= anchor.vocab_size()) {
      throw InvalidInput("decode: prompt token " + std::to_string(t) + " out of range");
    }
  }
}

// Mutable decoding state shared by the step kinds.
class StridedDecoder {
 public:
  StridedDecoder(const TabularAnchorModel& anchor, const ProposalSource& proposals,
                 std::span<const TokenId> prompt, const StrideConfig& cfg)
      : anchor_(anchor),
        proposals_(proposals),
        cfg_(cfg),
        rng_(cfg.seed, 0),
        context_(prompt.begin(), prompt.end()) {
    trace_.stride = cfg.stride;
  }

  DecodeTrace run() {
    if (cfg_.max_new_tokens == 0) return std::move(trace_);
    propose_step(ForwardKind::kBootstrap);
    while (!done_) {
      const bool rejected = fused_step();
      if (done_) break;
      if (rejected) propose_step(ForwardKind::kProposeOnly);
    }
    return std::move(trace_);
  }

 private:
  int n() const { return cfg_.stride; }

  void commit(TokenId token) {
    trace_.committed.push_back(token);
    context_.push_back(token);
    if (done_) return;
    trace_.output.push_back(token);
    if (std::find(cfg_.stop_tokens.begin(), cfg_.stop_tokens.end(), token) !=
        cfg_.stop_tokens.end()) {
      trace_.stopped = true;
      done_ = true;
    }
    if (trace_.output.size() >= cfg_.max_new_tokens) done_ = true;
  }

  // Fills the pending proposals for the slots after `context_` + free token.
  void draw_proposals(std::span<const TokenId> context) {
    auto qs = proposal_distributions(proposals_, anchor_, context,
                                     static_cast<std::size_t>(n() - 1));
    pending_tokens_.clear();
    pending_q_.clear();
    for (auto& q : qs) {
      if (cfg_.proposal_draw == ProposalDraw::kArgmax) {
        const TokenId token = q.argmax();
        pending_tokens_.push_back(token);
        pending_q_.push_back(Distribution::point_mass(q.size(), token));
      } else {
        pending_tokens_.push_back(sample(q, rng_));
        pending_q_.push_back(std::move(q));
      }
    }
  }

  // Bootstrap and propose-only: the last clean token plus N-1 masks.
  void propose_step(ForwardKind kind) {
    free_token_ = sample(anchor_.distribution(context_), rng_);
    free_committed_ = false;
    context_.push_back(free_token_);
    draw_proposals(context_);
    context_.pop_back();
    trace_.records.push_back(ForwardRecord{kind, n(), 0, std::nullopt, false});
  }

  // Returns true when a proposal was rejected.
  bool fused_step() {
    const std::size_t before = trace_.committed.size();
    ForwardRecord record{ForwardKind::kFused, 2 * n() - 1, 0, std::nullopt, false};
    if (!free_committed_) commit(free_token_);
    for (int k = 0; k < n() - 1; ++k) {
      const Distribution& p = anchor_.distribution(context_);
      const auto& q = pending_q_[static_cast<std::size_t>(k)];
      const TokenId proposal = pending_tokens_[static_cast<std::size_t>(k)];
      const AcceptanceDecision decision = accept_or_resample(p, q, proposal, cfg_.tau, rng_);
      trace_.acceptance_ratios.push_back(decision.acceptance_probability);
      trace_.introspection_ratios.push_back(acceptance_probability(p, q, proposal, 0.0));
      commit(decision.token);
      if (!decision.accepted) {
        record.rejection_position = k + 1;
        break;
      }
    }
    if (!record.rejection_position) {
      const TokenId bonus = sample(anchor_.distribution(context_), rng_);
      commit(bonus);
      record.bonus_emitted = true;
      free_token_ = bonus;
      free_committed_ = true;
      draw_proposals(context_);
    }
    record.committed_tokens = static_cast<int>(trace_.committed.size() - before);
    trace_.records.push_back(record);
    return record.rejection_position.has_value();
  }

  const TabularAnchorModel& anchor_;
  const ProposalSource& proposals_;
  const StrideConfig& cfg_;
  RngStream rng_;
  std::vector<TokenId> context_;
  DecodeTrace trace_;
  bool done_ = false;

  TokenId free_token_ = 0;
  bool free_committed_ = false;
  std::vector<TokenId> pending_tokens_;
  std::vector<Distribution> pending_q_;
};

}  // namespace

DecodeTrace decode(const TabularAnchorModel& anchor, const ProposalSource& proposals,
                   std::span<const TokenId> prompt, const StrideConfig& cfg) {
  cfg.validate();
  check_prompt(anchor, prompt);
  return StridedDecoder(anchor, proposals, prompt, cfg).run();
}

DecodeTrace decode_ar(const TabularAnchorModel& anchor, std::span<const TokenId> prompt,
                      std::size_t max_new_tokens, std::uint64_t seed) {
  check_prompt(anchor, prompt);
  DecodeTrace trace;
  trace.stride = 1;
  RngStream rng(seed, 0);
  std::vector<TokenId> context(prompt.begin(), prompt.end());
  for (std::size_t i = 0; i < max_new_tokens; ++i) {
    const TokenId token = sample(anchor.distribution(context), rng);
    context.push_back(token);
    trace.committed.push_back(token);
    trace.output.push_back(token);
    trace.records.push_back(ForwardRecord{ForwardKind::kFused, 1, 1, std::nullopt, false});
  }
  return trace;
}

DecodeTrace decode_lossless(const TabularAnchorModel& base,
                            std::shared_ptr<const GatedResidualModel> gated,
                            std::span<const TokenId> prompt, const StrideConfig& cfg) {
  if (!cfg.lossless) throw InvalidConfig("decode_lossless: cfg.lossless must be set");
  cfg.validate();
  if (!gated) throw InvalidInput("decode_lossless: null gated model");
  if (!(gated->base() == base)) {
    throw InvalidInput("decode_lossless: gated model was built on a different base model");
  }
  // Anchors come from `base`, which equals the gate-off path of `gated`.
  return decode(base, ProposalSource::gated(std::move(gated)), prompt, cfg);
}

TpfOh measure_tpf_oh(const DecodeTrace& trace, QueryAccounting accounting) {
  if (trace.records.empty()) throw InvalidInput("measure_tpf_oh: trace has no forwards");
  long long committed = 0;
  long long queries = 0;
  const int padded = 2 * trace.stride - 1;
  for (const auto& r : trace.records) {
    committed += r.committed_tokens;
    const bool propose = r.kind != ForwardKind::kFused;
    queries += (propose && accounting == QueryAccounting::kFixed) ? padded : r.query_tokens;
  }
  if (committed == 0) throw InvalidInput("measure_tpf_oh: trace committed no tokens");
  return TpfOh{static_cast<double>(committed) / static_cast<double>(trace.records.size()),
               static_cast<double>(queries) / static_cast<double>(committed)};
}

std::string trace_to_jsonl(const DecodeTrace& trace) {
  using nlohmann::ordered_json;
  std::string out;
  for (const auto& r : trace.records) {
    ordered_json line;
    line["kind"] = to_string(r.kind);
    line["query_tokens"] = r.query_tokens;
    line["committed_tokens"] = r.committed_tokens;
    line["rejection_position"] =
        r.rejection_position ? ordered_json(*r.rejection_position) : ordered_json(nullptr);
    line["bonus_emitted"] = r.bonus_emitted;
    out += line.dump();
    out += '\n';
  }
  ordered_json summary;
  summary["summary"] = true;
  summary["stride"] = trace.stride;
  summary["output"] = trace.output;
  summary["output_tokens"] = trace.output.size();
  summary["committed_tokens"] = trace.committed.size();
  summary["forwards"] = trace.records.size();
  summary["stopped"] = trace.stopped;
  if (!trace.committed.empty()) {
    const auto var = measure_tpf_oh(trace, QueryAccounting::kVariable);
    const auto fix = measure_tpf_oh(trace, QueryAccounting::kFixed);
    summary["tpf"] = var.tpf;
    summary["oh_var"] = var.oh;
    summary["oh_fix"] = fix.oh;
  } else {
    summary["tpf"] = nullptr;
    summary["oh_var"] = nullptr;
    summary["oh_fix"] = nullptr;
  }
  auto mean = [](const std::vector<double>& v) -> ordered_json {
    if (v.empty()) return nullptr;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  summary["alpha"] = mean(trace.introspection_ratios);
  summary["mean_acceptance"] = mean(trace.acceptance_ratios);
  out += summary.dump();
  out += '\n';
  return out;
}

}  // namespace isd

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace isd {

enum class MaskVariant { kIdlm, kSdar };

struct MaskSpec {
  std::size_t length = 0;      // L, tokens per region
  std::size_t block_size = 0;  // B
  MaskVariant variant = MaskVariant::kIdlm;
  /// Allow L % B != 0; the last block is then shorter.
  bool allow_ragged = false;
};

/**
 * Boolean attention mask over the concatenated [noisy | clean] sequence of
 * length 2L. Rows are queries, columns keys; true means attention is allowed.
 */
class MaskMatrix {
 public:
  explicit MaskMatrix(std::size_t size) : size_(size), cells_(size * size, 0) {}

  std::size_t rows() const { return size_; }
  std::size_t cols() const { return size_; }
  bool at(std::size_t query, std::size_t key) const { return cells_[query * size_ + key] != 0; }
  void set(std::size_t query, std::size_t key, bool allowed) {
    cells_[query * size_ + key] = allowed ? 1 : 0;
  }

  friend bool operator==(const MaskMatrix&, const MaskMatrix&) = default;

 private:
  std::size_t size_;
  std::vector<std::uint8_t> cells_;
};

/**
 * Union of three components:
 *   noisy self-attention: idlm causal within each block, sdar bidirectional
 *     within each block;
 *   cross-attention: noisy block b sees clean tokens of blocks b' < b;
 *   clean self-attention: idlm token-level causal, sdar block-causal.
 * Clean queries never see noisy keys.
 */
MaskMatrix build_mask(const MaskSpec& spec);

/// "rows cols" on the first line, then one line of 0/1 characters per row.
std::string mask_to_bitmap(const MaskMatrix& mask);
MaskMatrix mask_from_bitmap(const std::string& text);

/// Target log-probabilities for one region with a padding flag per position.
struct RegionLogProbs {
  std::vector<double> target_logprobs;
  std::vector<bool> padding;  // empty means no padding
};

struct LossRegions {
  RegionLogProbs masked;  // S_t
  RegionLogProbs clean;   // S_0
};

struct LossSplit {
  double l_mask = 0.0;
  double l_clean = 0.0;
};

/// Mean negative target log-probability over each region's non-padding
/// positions. Throws InvalidInput when a region has none.
LossSplit loss_split(const LossRegions& regions);

struct BalancedLoss {
  double total = 0.0;
  /// l_mask / l_clean; absent when l_clean <= 0.
  std::optional<double> s_hat;
};

/// total = l_mask + s_hat * l_clean with s_hat = l_mask / l_clean held fixed,
/// which equals 2 * l_mask. When l_clean <= 0, total = l_mask and s_hat is absent.
BalancedLoss auto_balanced_loss(double l_mask, double l_clean);

/// l_mask + scale * l_clean.
double fixed_scale_loss(double l_mask, double l_clean, double scale);

}  // namespace isd

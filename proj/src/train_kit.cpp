// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors

#include "isd/train_kit.h"

#include <sstream>

#include "isd/errors.h"

namespace isd {

MaskMatrix build_mask(const MaskSpec& spec) {
  const std::size_t L = spec.length;
  const std::size_t B = spec.block_size;
  if (L == 0 || B == 0) throw InvalidInput("build_mask: L and B must be positive");
  if (L % B != 0 && !spec.allow_ragged) {
    throw InvalidInput("build_mask: L = " + std::to_string(L) + " is not a multiple of B = " +
                       std::to_string(B) + " (set allow_ragged for a short final block)");
  }
  const bool idlm = spec.variant == MaskVariant::kIdlm;
  MaskMatrix mask(2 * L);
  for (std::size_t q = 0; q < L; ++q) {
    const std::size_t q_block = q / B;
    // Noisy self-attention.
    for (std::size_t k = q_block * B; k < L && k / B == q_block; ++k) {
      if (!idlm || k <= q) mask.set(q, k, true);
    }
    // Cross-attention to clean tokens of strictly earlier blocks.
    for (std::size_t k = 0; k < q_block * B; ++k) mask.set(q, L + k, true);
  }
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < L; ++j) {
      const bool allowed = idlm ? j <= i : j / B <= i / B;
      if (allowed) mask.set(L + i, L + j, true);
    }
  }
  return mask;
}

std::string mask_to_bitmap(const MaskMatrix& mask) {
  std::string out = std::to_string(mask.rows()) + " " + std::to_string(mask.cols()) + "\n";
  out.reserve(out.size() + mask.rows() * (mask.cols() + 1));
  for (std::size_t r = 0; r < mask.rows(); ++r) {
    for (std::size_t c = 0; c < mask.cols(); ++c) out += mask.at(r, c) ? '1' : '0';
    out += '\n';
  }
  return out;
}

MaskMatrix mask_from_bitmap(const std::string& text) {
  std::istringstream in(text);
  std::size_t rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows != cols) {
    throw InvalidInput("mask_from_bitmap: header must be 'rows cols' with rows == cols");
  }
  MaskMatrix mask(rows);
  std::string line;
  std::getline(in, line);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(in, line) || line.size() != cols) {
      throw InvalidInput("mask_from_bitmap: row " + std::to_string(r) + " malformed");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (line[c] != '0' && line[c] != '1') {
        throw InvalidInput("mask_from_bitmap: row " + std::to_string(r) + " has non-0/1 cell");
      }
      mask.set(r, c, line[c] == '1');
    }
  }
  return mask;
}

namespace {

double region_mean_nll(const RegionLogProbs& region, const char* name) {
  if (!region.padding.empty() && region.padding.size() != region.target_logprobs.size()) {
    throw InvalidInput(std::string("loss_split: ") + name + " padding length mismatch");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < region.target_logprobs.size(); ++i) {
    if (!region.padding.empty() && region.padding[i]) continue;
    sum -= region.target_logprobs[i];
    ++count;
  }
  if (count == 0) {
    throw InvalidInput(std::string("loss_split: ") + name + " region has no non-padding positions");
  }
  return sum / static_cast<double>(count);
}

}  // namespace

LossSplit loss_split(const LossRegions& regions) {
  return LossSplit{region_mean_nll(regions.masked, "masked"),
                   region_mean_nll(regions.clean, "clean")};
}

BalancedLoss auto_balanced_loss(double l_mask, double l_clean) {
  if (!(l_clean > 0.0)) return BalancedLoss{l_mask, std::nullopt};
  const double s_hat = l_mask / l_clean;
  return BalancedLoss{l_mask + s_hat * l_clean, s_hat};
}

double fixed_scale_loss(double l_mask, double l_clean, double scale) {
  if (!(scale >= 0.0)) throw InvalidInput("fixed_scale_loss: scale must be >= 0");
  return l_mask + scale * l_clean;
}

}  // namespace isd

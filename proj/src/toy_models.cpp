// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors

#include "isd/toy_models.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "isd/errors.h"

namespace isd {

namespace {

std::size_t checked_pow(std::size_t base, std::size_t exponent) {
  std::size_t result = 1;
  for (std::size_t i = 0; i < exponent; ++i) {
    if (result > std::numeric_limits<std::size_t>::max() / base) {
      throw InvalidInput("TabularAnchorModel: table size overflows");
    }
    result *= base;
  }
  return result;
}

// 1 + V + ... + V^(m-1)
std::size_t offset_for_real_tokens(std::size_t vocab, std::size_t m) {
  std::size_t offset = 0;
  std::size_t power = 1;
  for (std::size_t i = 0; i < m; ++i) {
    offset += power;
    power *= vocab;
  }
  return offset;
}

std::string format_prob(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17e", v);
  return buf;
}

}  // namespace

std::size_t TabularAnchorModel::row_count(std::size_t vocab_size, std::size_t order) {
  if (vocab_size < 2) throw InvalidInput("TabularAnchorModel: vocab_size must be >= 2");
  std::size_t total = 0;
  for (std::size_t m = 0; m <= order; ++m) total += checked_pow(vocab_size, m);
  return total;
}

TabularAnchorModel::TabularAnchorModel(std::size_t vocab_size, std::size_t order,
                                       std::vector<Distribution> rows)
    : vocab_size_(vocab_size),
      order_(order),
      rows_(std::move(rows)),
      uniform_(Distribution::uniform(vocab_size < 2 ? 2 : vocab_size)) {
  const std::size_t expected = row_count(vocab_size, order);
  if (rows_.size() != expected) {
    throw InvalidInput("TabularAnchorModel: expected " + std::to_string(expected) + " rows, got " +
                       std::to_string(rows_.size()));
  }
  for (const auto& r : rows_) validate_row(r);
}

TabularAnchorModel::TabularAnchorModel(std::size_t vocab_size, std::size_t order,
                                       std::map<std::size_t, Distribution> sparse_rows)
    : vocab_size_(vocab_size),
      order_(order),
      sparse_rows_(std::move(sparse_rows)),
      uniform_(Distribution::uniform(vocab_size < 2 ? 2 : vocab_size)) {
  const std::size_t expected = row_count(vocab_size, order);
  for (const auto& [index, r] : sparse_rows_) {
    if (index >= expected) throw InvalidInput("TabularAnchorModel: sparse row index out of range");
    validate_row(r);
  }
}

void TabularAnchorModel::validate_row(const Distribution& row) const {
  if (row.size() != vocab_size_) {
    throw InvalidInput("TabularAnchorModel: row length " + std::to_string(row.size()) +
                       " != vocab_size " + std::to_string(vocab_size_));
  }
}

std::size_t TabularAnchorModel::row_index(std::span<const TokenId> context) const {
  const std::size_t m = std::min(order_, context.size());
  std::size_t value = 0;
  for (std::size_t i = context.size() - m; i < context.size(); ++i) {
    const TokenId t = context[i];
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_size_) {
      throw InvalidInput("anchor_distribution: token " + std::to_string(t) + " out of range [0, " +
                         std::to_string(vocab_size_) + ")");
    }
    value = value * vocab_size_ + static_cast<std::size_t>(t);
  }
  return offset_for_real_tokens(vocab_size_, m) + value;
}

std::vector<TokenId> TabularAnchorModel::row_context(std::size_t index) const {
  std::size_t m = 0;
  std::size_t power = 1;
  std::size_t offset = 0;
  while (m < order_ && index >= offset + power) {
    offset += power;
    power *= vocab_size_;
    ++m;
  }
  if (index >= offset + power) throw InvalidInput("row_context: index out of range");
  std::vector<TokenId> context(order_, bos());
  std::size_t value = index - offset;
  for (std::size_t i = 0; i < m; ++i) {
    context[order_ - 1 - i] = static_cast<TokenId>(value % vocab_size_);
    value /= vocab_size_;
  }
  return context;
}

const Distribution& TabularAnchorModel::row(std::size_t index) const {
  if (!rows_.empty()) return rows_.at(index);
  const auto it = sparse_rows_.find(index);
  return it == sparse_rows_.end() ? uniform_ : it->second;
}

const Distribution& TabularAnchorModel::distribution(std::span<const TokenId> context) const {
  return row(row_index(context));
}

std::vector<std::size_t> TabularAnchorModel::stored_rows() const {
  std::vector<std::size_t> out;
  if (!rows_.empty()) {
    out.resize(rows_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) out[i] = i;
  } else {
    for (const auto& [index, r] : sparse_rows_) out.push_back(index);
  }
  return out;
}

const Distribution& anchor_distribution(const TabularAnchorModel& model,
                                        std::span<const TokenId> context) {
  return model.distribution(context);
}

TabularAnchorModel random_model(std::size_t vocab_size, std::size_t order, double concentration,
                                RngStream& rng) {
  if (!(concentration > 0.0)) throw InvalidInput("random_model: concentration must be > 0");
  const std::size_t rows = TabularAnchorModel::row_count(vocab_size, order);
  std::vector<Distribution> table;
  table.reserve(rows);
  std::vector<double> log_gammas(vocab_size);
  for (std::size_t r = 0; r < rows; ++r) {
    // Log-space Dirichlet so small concentrations do not underflow to zero.
    for (auto& lg : log_gammas) {
      if (concentration < 1.0) {
        lg = std::log(rng.gamma(concentration + 1.0)) +
             std::log(rng.uniform_open_zero()) / concentration;
      } else {
        lg = std::log(rng.gamma(concentration));
      }
    }
    const double shift = *std::max_element(log_gammas.begin(), log_gammas.end());
    std::vector<double> weights(vocab_size);
    for (std::size_t i = 0; i < vocab_size; ++i) weights[i] = std::exp(log_gammas[i] - shift);
    table.push_back(Distribution::normalized(std::move(weights)));
  }
  return TabularAnchorModel(vocab_size, order, std::move(table));
}

std::string context_key(std::span<const TokenId> padded_context, TokenId bos) {
  std::string key;
  for (std::size_t i = 0; i < padded_context.size(); ++i) {
    if (i > 0) key += ',';
    key += padded_context[i] == bos ? std::string("bos") : std::to_string(padded_context[i]);
  }
  return key;
}

std::string model_to_json(const TabularAnchorModel& model) {
  std::ostringstream out;
  out << "{\n  \"vocab_size\": " << model.vocab_size() << ",\n  \"order\": " << model.order();
  if (!model.dense()) out << ",\n  \"fallback\": \"uniform\"";
  out << ",\n  \"rows\": {";
  bool first = true;
  for (std::size_t index : model.stored_rows()) {
    out << (first ? "\n" : ",\n");
    first = false;
    out << "    \"" << context_key(model.row_context(index), model.bos()) << "\": [";
    const auto probs = model.row(index).probs();
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (i > 0) out << ", ";
      out << format_prob(probs[i]);
    }
    out << "]";
  }
  out << "\n  }\n}\n";
  return out.str();
}

TabularAnchorModel model_from_json(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("model: not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InvalidInput("model: top level must be an object");
  auto require_uint = [&](const char* field) -> std::size_t {
    if (!doc.contains(field)) throw InvalidInput(std::string("model: missing field '") + field + "'");
    const auto& v = doc.at(field);
    if (!v.is_number_unsigned()) {
      throw InvalidInput(std::string("model: field '") + field + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
  };
  const std::size_t vocab = require_uint("vocab_size");
  const std::size_t order = require_uint("order");
  if (vocab < 2) throw InvalidInput("model: field 'vocab_size' must be >= 2");
  bool sparse = false;
  if (doc.contains("fallback")) {
    if (doc.at("fallback") != "uniform") {
      throw InvalidInput("model: field 'fallback' must be \"uniform\"");
    }
    sparse = true;
  }
  if (!doc.contains("rows") || !doc.at("rows").is_object()) {
    throw InvalidInput("model: field 'rows' must be an object");
  }
  const std::size_t expected = TabularAnchorModel::row_count(vocab, order);
  const TokenId bos = static_cast<TokenId>(vocab);

  auto parse_key = [&](const std::string& key) -> std::vector<TokenId> {
    std::vector<TokenId> ctx;
    if (order == 0) {
      if (!key.empty()) throw InvalidInput("model: rows[\"" + key + "\"]: order 0 uses key \"\"");
      return ctx;
    }
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (part == "bos") {
        ctx.push_back(bos);
        continue;
      }
      try {
        std::size_t used = 0;
        const long v = std::stol(part, &used);
        if (used != part.size() || v < 0 || static_cast<std::size_t>(v) >= vocab) throw 0;
        ctx.push_back(static_cast<TokenId>(v));
      } catch (...) {
        throw InvalidInput("model: rows[\"" + key + "\"]: bad token '" + part + "'");
      }
    }
    if (ctx.size() != order) {
      throw InvalidInput("model: rows[\"" + key + "\"]: context length " +
                         std::to_string(ctx.size()) + " != order " + std::to_string(order));
    }
    // bos may only appear as left padding.
    bool seen_real = false;
    for (TokenId t : ctx) {
      if (t == bos && seen_real) {
        throw InvalidInput("model: rows[\"" + key + "\"]: bos after a real token");
      }
      seen_real = seen_real || t != bos;
    }
    return ctx;
  };

  std::map<std::size_t, Distribution> parsed;
  for (const auto& [key, value] : doc.at("rows").items()) {
    const std::string field = "model: rows[\"" + key + "\"]";
    const auto ctx = parse_key(key);
    std::vector<TokenId> real;
    for (TokenId t : ctx) {
      if (t != bos) real.push_back(t);
    }
    const std::size_t index =
        offset_for_real_tokens(vocab, real.size()) + [&] {
          std::size_t v = 0;
          for (TokenId t : real) v = v * vocab + static_cast<std::size_t>(t);
          return v;
        }();
    if (!value.is_array() || value.size() != vocab) {
      throw InvalidInput(field + ": must be an array of " + std::to_string(vocab) + " numbers");
    }
    std::vector<double> probs;
    probs.reserve(vocab);
    for (const auto& p : value) {
      if (!p.is_number()) throw InvalidInput(field + ": non-numeric probability");
      probs.push_back(p.get<double>());
    }
    try {
      if (!parsed.emplace(index, Distribution(std::move(probs))).second) {
        throw InvalidInput("duplicate context");
      }
    } catch (const InvalidInput& e) {
      throw InvalidInput(field + ": " + e.what());
    }
  }
  if (!sparse) {
    if (parsed.size() != expected) {
      throw InvalidInput("model: field 'rows' has " + std::to_string(parsed.size()) +
                         " contexts, dense order-" + std::to_string(order) + " table needs " +
                         std::to_string(expected) + " (or set \"fallback\": \"uniform\")");
    }
    std::vector<Distribution> rows;
    rows.reserve(expected);
    for (auto& [index, dist] : parsed) rows.push_back(std::move(dist));
    return TabularAnchorModel(vocab, order, std::move(rows));
  }
  return TabularAnchorModel(vocab, order, std::move(parsed));
}

GatedResidualModel::GatedResidualModel(std::shared_ptr<const TabularAnchorModel> base,
                                       std::vector<std::vector<double>> offsets)
    : base_(std::move(base)) {
  if (!base_) throw InvalidInput("GatedResidualModel: null base model");
  if (!base_->dense()) throw InvalidInput("GatedResidualModel: base model must be dense");
  const std::size_t rows = TabularAnchorModel::row_count(base_->vocab_size(), base_->order());
  if (offsets.size() != rows) {
    throw InvalidInput("GatedResidualModel: expected one offset vector per context row");
  }
  gated_rows_.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto probs = base_->row(r).probs();
    const auto& offset = offsets[r];
    if (offset.size() != probs.size()) {
      throw InvalidInput("GatedResidualModel: offset length != vocab_size");
    }
    // softmax(log p + offset); zero-probability tokens stay at zero.
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] > 0.0) shift = std::max(shift, std::log(probs[i]) + offset[i]);
    }
    std::vector<double> weights(probs.size(), 0.0);
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] > 0.0) weights[i] = std::exp(std::log(probs[i]) + offset[i] - shift);
    }
    gated_rows_.push_back(Distribution::normalized(std::move(weights)));
  }
}

GatedResidualModel GatedResidualModel::random(std::shared_ptr<const TabularAnchorModel> base,
                                              double scale, RngStream& rng) {
  if (!base) throw InvalidInput("GatedResidualModel: null base model");
  const std::size_t rows = TabularAnchorModel::row_count(base->vocab_size(), base->order());
  std::vector<std::vector<double>> offsets(rows, std::vector<double>(base->vocab_size()));
  for (auto& row : offsets) {
    for (double& v : row) v = scale * rng.normal();
  }
  return GatedResidualModel(std::move(base), std::move(offsets));
}

GatedResidualModel GatedResidualModel::adversarial(std::shared_ptr<const TabularAnchorModel> base,
                                                   double boost) {
  if (!base) throw InvalidInput("GatedResidualModel: null base model");
  const std::size_t rows = TabularAnchorModel::row_count(base->vocab_size(), base->order());
  std::vector<std::vector<double>> offsets(rows, std::vector<double>(base->vocab_size(), 0.0));
  for (std::size_t r = 0; r < rows; ++r) {
    const auto probs = base->row(r).probs();
    // Least likely token that still has support, so the offset can act on it.
    std::size_t target = 0;
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] > 0.0 && probs[i] < lowest) {
        lowest = probs[i];
        target = i;
      }
    }
    offsets[r][target] = boost;
  }
  return GatedResidualModel(std::move(base), std::move(offsets));
}

GatedResidualModel GatedResidualModel::zero(std::shared_ptr<const TabularAnchorModel> base) {
  if (!base) throw InvalidInput("GatedResidualModel: null base model");
  const std::size_t rows = TabularAnchorModel::row_count(base->vocab_size(), base->order());
  return GatedResidualModel(base, std::vector<std::vector<double>>(
                                      rows, std::vector<double>(base->vocab_size(), 0.0)));
}

const Distribution& GatedResidualModel::distribution(std::span<const TokenId> context,
                                                     bool gate) const {
  const std::size_t index = base_->row_index(context);
  return gate ? gated_rows_[index] : base_->row(index);
}

ProposalSource ProposalSource::mirror() { return ProposalSource(ProposalMode::kMirror, 0.0); }

ProposalSource ProposalSource::epsilon_mixture(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw InvalidInput("ProposalSource: epsilon must lie in [0, 1]");
  }
  return ProposalSource(ProposalMode::kEpsilonMixture, epsilon);
}

ProposalSource ProposalSource::independent(std::shared_ptr<const TabularAnchorModel> table) {
  if (!table) throw InvalidInput("ProposalSource: null proposal table");
  ProposalSource source(ProposalMode::kIndependentTable, 0.0);
  source.table_ = std::move(table);
  return source;
}

ProposalSource ProposalSource::gated(std::shared_ptr<const GatedResidualModel> model) {
  if (!model) throw InvalidInput("ProposalSource: null gated model");
  ProposalSource source(ProposalMode::kGatedResidual, 0.0);
  source.gated_ = std::move(model);
  return source;
}

Distribution ProposalSource::next(const TabularAnchorModel& anchor,
                                  std::span<const TokenId> context) const {
  switch (mode_) {
    case ProposalMode::kMirror:
      return anchor.distribution(context);
    case ProposalMode::kEpsilonMixture: {
      const auto p = anchor.distribution(context).probs();
      const double uniform_mass = epsilon_ / static_cast<double>(p.size());
      std::vector<double> q(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) q[i] = (1.0 - epsilon_) * p[i] + uniform_mass;
      return Distribution(std::move(q));
    }
    case ProposalMode::kIndependentTable:
      if (table_->vocab_size() != anchor.vocab_size()) {
        throw InvalidInput("ProposalSource: proposal table vocabulary differs from anchor");
      }
      return table_->distribution(context);
    case ProposalMode::kGatedResidual:
      if (gated_->base().vocab_size() != anchor.vocab_size()) {
        throw InvalidInput("ProposalSource: gated model vocabulary differs from anchor");
      }
      return gated_->distribution(context, /*gate=*/true);
  }
  throw InvalidInput("ProposalSource: unknown mode");
}

std::vector<Distribution> proposal_distributions(const ProposalSource& source,
                                                 const TabularAnchorModel& anchor,
                                                 std::span<const TokenId> committed_context,
                                                 std::size_t n_masks) {
  if (n_masks == 0) throw InvalidInput("proposal_distributions: n_masks must be >= 1");
  // Only the last `window` tokens can reach a table lookup.
  std::size_t window = anchor.order();
  if (source.mode() == ProposalMode::kIndependentTable) {
    window = std::max(window, source.table()->order());
  } else if (source.mode() == ProposalMode::kGatedResidual) {
    window = std::max(window, source.gated_model()->base().order());
  }
  const std::size_t keep = std::min(window, committed_context.size());
  std::vector<TokenId> context(committed_context.end() - static_cast<std::ptrdiff_t>(keep),
                               committed_context.end());
  std::vector<Distribution> out;
  out.reserve(n_masks);
  for (std::size_t j = 0; j < n_masks; ++j) {
    out.push_back(source.next(anchor, context));
    context.push_back(out.back().argmax());
  }
  return out;
}

double epsilon_for_acceptance(const Distribution& anchor_row, double target) {
  const double tv = total_variation(anchor_row, Distribution::uniform(anchor_row.size()));
  if (!(target >= 0.0 && target <= 1.0)) throw InvalidInput("epsilon_for_acceptance: target");
  if (tv <= 0.0) {
    if (target == 1.0) return 0.0;
    throw InvalidInput("epsilon_for_acceptance: uniform anchor accepts everything");
  }
  const double eps = (1.0 - target) / tv;
  if (eps > 1.0) throw InvalidInput("epsilon_for_acceptance: target below the ε = 1 floor");
  return eps;
}

}  // namespace isd

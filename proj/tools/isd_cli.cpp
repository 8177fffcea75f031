// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors
//
// isd: command-line driver. Exit codes: 0 success, 2 usage error, 1 runtime error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "isd/analytics.h"
#include "isd/batch_sim.h"
#include "isd/decoder.h"
#include "isd/errors.h"
#include "isd/process_sim.h"
#include "isd/sweep_csv.h"
#include "isd/toy_models.h"
#include "isd/train_kit.h"

namespace {

using namespace isd;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes to `path`, or stdout when empty.
void emit(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out.flush()) throw std::runtime_error("write to '" + path + "' failed");
}

Paradigm method_or_usage(const std::string& name) {
  const auto m = parse_paradigm(name);
  if (!m) {
    throw UsageError("unknown method '" + name + "' (expected isd-variable, isd-fixed, sdar, tidar)");
  }
  return *m;
}

template <typename F>
auto as_usage(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const InvalidConfig& e) {
    throw UsageError(e.what());
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// ---- model ----------------------------------------------------------------

struct ModelArgs {
  std::size_t vocab = 8;
  std::size_t order = 1;
  double concentration = 0.5;
  std::uint64_t seed = 0;
  std::string out;
};

void cmd_model(const ModelArgs& a) {
  const auto model = as_usage([&] {
    RngStream rng(a.seed, 0);
    return random_model(a.vocab, a.order, a.concentration, rng);
  });
  emit(a.out, model_to_json(model));
}

// ---- decode ---------------------------------------------------------------

struct DecodeArgs {
  std::string model;
  std::vector<TokenId> prompt;
  int stride = 4;
  double tau = 0.0;
  bool argmax = false;
  bool lossless = false;
  std::size_t max_new_tokens = 64;
  std::vector<TokenId> stop;
  std::uint64_t seed = 0;
  std::string proposal = "mirror";
  double epsilon = 0.2;
  std::string proposal_model;
  double residual_scale = 1.0;
  std::string trace;
};

void cmd_decode(const DecodeArgs& a) {
  StrideConfig cfg;
  cfg.stride = a.stride;
  cfg.tau = a.tau;
  cfg.proposal_draw = a.argmax ? ProposalDraw::kArgmax : ProposalDraw::kSample;
  cfg.lossless = a.lossless;
  cfg.max_new_tokens = a.max_new_tokens;
  cfg.stop_tokens = a.stop;
  cfg.seed = a.seed;
  as_usage([&] { cfg.validate(); });
  if (a.prompt.empty()) throw UsageError("--prompt must name at least one token");
  if (a.lossless && a.proposal != "gated") {
    throw UsageError("--lossless requires --proposal gated");
  }
  if (a.proposal == "table" && a.proposal_model.empty()) {
    throw UsageError("--proposal table requires --proposal-model");
  }

  const auto anchor = std::make_shared<const TabularAnchorModel>(model_from_json(read_file(a.model)));
  DecodeTrace trace;
  if (a.proposal == "gated") {
    if (!anchor->dense()) throw InvalidInput("--proposal gated needs a dense model");
    RngStream rng(a.seed, 1);
    const auto gated = std::make_shared<const GatedResidualModel>(
        GatedResidualModel::random(anchor, a.residual_scale, rng));
    trace = a.lossless ? decode_lossless(*anchor, gated, a.prompt, cfg)
                       : decode(*anchor, ProposalSource::gated(gated), a.prompt, cfg);
  } else {
    std::optional<ProposalSource> source;
    if (a.proposal == "mirror") {
      source = ProposalSource::mirror();
    } else if (a.proposal == "epsilon") {
      source = as_usage([&] { return ProposalSource::epsilon_mixture(a.epsilon); });
    } else {
      source = ProposalSource::independent(std::make_shared<const TabularAnchorModel>(
          model_from_json(read_file(a.proposal_model))));
    }
    trace = decode(*anchor, *source, a.prompt, cfg);
  }

  const std::string jsonl = trace_to_jsonl(trace);
  if (!a.trace.empty()) emit(a.trace, jsonl);
  // Trace trailer without the token list.
  const auto last = jsonl.rfind('\n', jsonl.size() - 2);
  auto summary = nlohmann::ordered_json::parse(jsonl.substr(last == std::string::npos ? 0 : last + 1));
  summary.erase("output");
  std::cout << summary.dump() << "\n";
}

// ---- analytics ------------------------------------------------------------

struct AnalyticsArgs {
  std::string method;
  int stride = 4;
  double p_min = 0.5;
  double p_max = 1.0;
  double p_step = 0.05;
  bool break_even = false;
  std::string out;
};

void cmd_analytics(const AnalyticsArgs& a) {
  const Paradigm method = method_or_usage(a.method);
  if (a.stride < (method == Paradigm::kIsdVariable || method == Paradigm::kIsdFixed ? 2 : 1)) {
    throw UsageError("--N is too small for " + a.method);
  }
  if (a.break_even) {
    const auto root = break_even_acceptance(method, a.stride);
    emit(a.out, (root ? format_double(*root) : std::string("no-crossing")) + "\n");
    return;
  }
  const auto grid = as_usage([&] {
    if (a.p_min < 0.0 || a.p_max > 1.0) throw InvalidInput("p grid must lie in [0, 1]");
    return make_grid(a.p_min, a.p_max, a.p_step);
  });
  std::ostringstream csv;
  const auto rows = rows_from_curve(curve_sweep(method, a.stride, grid));
  write_sweep_csv(csv, rows);
  emit(a.out, csv.str());
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string method;
  int stride = 4;
  std::vector<double> p{0.85};
  std::uint64_t cycles = 100000;
  std::uint64_t seed = 0;
  unsigned shards = 1;
  std::string out;
};

void cmd_simulate(const SimulateArgs& a) {
  const Paradigm method = method_or_usage(a.method);
  if (a.cycles == 0) throw UsageError("--cycles must be >= 1");
  for (double p : a.p) {
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError("--p values must lie in [0, 1]");
  }
  const bool isd = method == Paradigm::kIsdVariable || method == Paradigm::kIsdFixed;
  if (a.stride < (isd ? 2 : 1)) throw UsageError("--N is too small for " + a.method);
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < a.p.size(); ++i) {
    // Each p gets its own seed so adding grid points leaves earlier rows intact.
    const std::uint64_t seed = a.seed + i;
    SimResult r;
    if (isd) {
      r = simulate_isd_sharded(a.stride, AcceptanceSchedule::uniform(a.stride, a.p[i]), a.cycles,
                               seed, a.shards);
    } else if (method == Paradigm::kSdar) {
      r = simulate_sdar_sharded(a.stride, a.p[i], a.cycles, seed, a.shards);
    } else {
      r = simulate_tidar_sharded(a.stride, a.p[i], a.cycles, seed, a.shards);
    }
    rows.push_back(row_from_simulation(method, a.stride, a.p[i], r));
  }
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  emit(a.out, csv.str());
}

// ---- serve ----------------------------------------------------------------

struct ServeArgs {
  std::string config;
  std::string out;
};

void cmd_serve(const ServeArgs& a) {
  const ServeConfig cfg = serve_config_from_json(read_file(a.config));
  std::vector<ServingReport> reports;
  for (const auto& run : cfg.runs) {
    reports.push_back(run_serving_sim(run.workload, run.policy, cfg.cost, cfg.stationary, cfg.seed));
  }
  std::ostringstream csv;
  write_serve_csv(csv, reports);
  emit(a.out, csv.str());
}

// ---- mask -----------------------------------------------------------------

struct MaskArgs {
  std::string variant = "idlm";
  std::size_t length = 6;
  std::size_t block = 2;
  bool allow_ragged = false;
  std::string out;
};

void cmd_mask(const MaskArgs& a) {
  MaskSpec spec;
  spec.length = a.length;
  spec.block_size = a.block;
  spec.allow_ragged = a.allow_ragged;
  if (a.variant == "idlm") {
    spec.variant = MaskVariant::kIdlm;
  } else if (a.variant == "sdar") {
    spec.variant = MaskVariant::kSdar;
  } else {
    throw UsageError("--variant must be idlm or sdar");
  }
  const auto mask = as_usage([&] { return build_mask(spec); });
  emit(a.out, mask_to_bitmap(mask));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Introspective strided decoding toolkit"};
  app.require_subcommand(1);
  app.allow_windows_style_options(false);

  ModelArgs model;
  auto* m = app.add_subcommand("model", "Generate a random tabular anchor model (JSON)");
  m->add_option("--vocab", model.vocab, "Vocabulary size")->capture_default_str();
  m->add_option("--order", model.order, "Context order")->capture_default_str();
  m->add_option("--concentration", model.concentration, "Dirichlet concentration")->capture_default_str();
  m->add_option("--seed", model.seed, "Random seed")->capture_default_str();
  m->add_option("--out", model.out, "Output path (default stdout)");

  DecodeArgs dec;
  auto* d = app.add_subcommand("decode", "Strided decoding over a model file");
  d->add_option("--model", dec.model, "Model JSON path")->required();
  d->add_option("--prompt", dec.prompt, "Prompt token ids")->delimiter(',')->required();
  d->add_option("--stride", dec.stride, "Stride N")->capture_default_str();
  d->add_option("--tau", dec.tau, "Acceptance relaxation")->capture_default_str();
  d->add_flag("--argmax", dec.argmax, "Propose the argmax of q");
  d->add_flag("--lossless", dec.lossless, "Gated residual lossless mode");
  d->add_option("--max-new-tokens", dec.max_new_tokens, "Output budget")->capture_default_str();
  d->add_option("--stop", dec.stop, "Stop token ids")->delimiter(',');
  d->add_option("--seed", dec.seed, "Random seed")->capture_default_str();
  d->add_option("--proposal", dec.proposal, "mirror | epsilon | table | gated")
      ->check(CLI::IsMember({"mirror", "epsilon", "table", "gated"}))
      ->capture_default_str();
  d->add_option("--epsilon", dec.epsilon, "Uniform mixing weight for --proposal epsilon")
      ->capture_default_str();
  d->add_option("--proposal-model", dec.proposal_model, "Model JSON for --proposal table");
  d->add_option("--residual-scale", dec.residual_scale, "Gated residual offset scale")
      ->capture_default_str();
  d->add_option("--trace", dec.trace, "JSON-lines trace output path");

  AnalyticsArgs an;
  auto* a = app.add_subcommand("analytics", "Closed-form TPF/OH curves (CSV)");
  a->add_option("--method", an.method, "isd-variable | isd-fixed | sdar | tidar")->required();
  a->add_option("--N", an.stride, "Stride or block size")->capture_default_str();
  a->add_option("--p-min", an.p_min)->capture_default_str();
  a->add_option("--p-max", an.p_max)->capture_default_str();
  a->add_option("--p-step", an.p_step)->capture_default_str();
  a->add_flag("--break-even", an.break_even, "Print the efficiency break-even acceptance");
  a->add_option("--out", an.out, "Output path (default stdout)");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Monte Carlo commit-process simulation (CSV)");
  s->add_option("--method", sim.method, "isd-variable | isd-fixed | sdar | tidar")->required();
  s->add_option("--N", sim.stride, "Stride or block size")->capture_default_str();
  s->add_option("--p", sim.p, "Acceptance values")->delimiter(',');
  s->add_option("--cycles", sim.cycles, "Cycles (blocks) per value")->capture_default_str();
  s->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  s->add_option("--shards", sim.shards, "Parallel streams")->capture_default_str();
  s->add_option("--out", sim.out, "Output path (default stdout)");

  ServeArgs srv;
  auto* v = app.add_subcommand("serve", "Batch serving simulation from a JSON config (CSV)");
  v->add_option("--config", srv.config, "Config JSON path")->required();
  v->add_option("--out", srv.out, "Output path (default stdout)");

  MaskArgs mk;
  auto* k = app.add_subcommand("mask", "Attention mask bitmap");
  k->add_option("--variant", mk.variant, "idlm | sdar")->capture_default_str();
  k->add_option("--L", mk.length, "Sequence length")->capture_default_str();
  k->add_option("--B", mk.block, "Block size")->capture_default_str();
  k->add_flag("--allow-ragged", mk.allow_ragged, "Permit a short final block");
  k->add_option("--out", mk.out, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*m) cmd_model(model);
    if (*d) cmd_decode(dec);
    if (*a) cmd_analytics(an);
    if (*s) cmd_simulate(sim);
    if (*v) cmd_serve(srv);
    if (*k) cmd_mask(mk);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
